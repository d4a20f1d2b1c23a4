#include "cxrl/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "cxrl/format.hpp"

namespace cxrl {

namespace {

std::optional<int> first_divergence(const Trajectory& a, const Trajectory& b) {
  const std::size_t common = std::min(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (a.steps[i].state != b.steps[i].state || a.steps[i].action != b.steps[i].action) return static_cast<int>(i);
  }
  if (a.steps.size() != b.steps.size() || a.final_state != b.final_state) return static_cast<int>(common);
  return std::nullopt;
}

}  // namespace

Explanation explain(const ExplainContext& ctx, const FoilQuery& query, const EnvState& start,
                    const ExplainOptions& options) {
  if (start.terminated()) {
    throw TerminalStateError("the episode has ended (" + std::string(to_string(start.status)) +
                             "); there is nothing left to explain");
  }
  options.foil.validate(ctx.lambda);
  const Vocabulary& vocabulary = ctx.world.layout().vocabulary;
  const int horizon = options.foil.effective_horizon();

  Explanation e;
  e.query = query;
  e.start = start;
  e.training = train_qi(ctx.q_t, query, start, options.foil, ctx.world, ctx.transitions, ctx.translator, ctx.lambda);
  e.q_f = compose_qf(ctx.q_t, e.training.q_i);

  const Policy fact_policy = greedy_policy(ctx.q_t, ctx.world);
  const auto foil_choice = foil_policy(e.q_f);
  const GridWorld& world = ctx.world;
  const Policy foil = [&world, foil_choice](const EnvState& s) { return foil_choice(world.features(s)); };

  e.fact_trajectory = simulate(start, fact_policy, horizon, ctx.transitions, options.simulation);
  e.foil_trajectory = simulate(start, foil, horizon, ctx.transitions, options.simulation);
  e.fact_path = to_path(e.fact_trajectory, ctx.translator, ctx.transitions);
  e.foil_path = to_path(e.foil_trajectory, ctx.translator, ctx.transitions);

  e.fact_summary = summarize(e.fact_path, vocabulary, options.threshold);
  e.foil_summary = summarize(e.foil_path, vocabulary, options.threshold);
  e.contrast = contrast(e.fact_path, e.foil_path, options.contrast, options.threshold);
  e.fact_text = render(e.fact_summary, TemplateId::MostlyPerform, vocabulary);
  e.foil_text = render(e.foil_summary, TemplateId::MostlyPerform, vocabulary);
  e.contrast_text = render(e.contrast, TemplateId::Contrastive, vocabulary);
  e.divergence_step = first_divergence(e.fact_trajectory, e.foil_trajectory);
  e.partial = e.fact_path.partial || e.foil_path.partial ||
              e.fact_trajectory.reason == Truncation::UnknownTransition ||
              e.foil_trajectory.reason == Truncation::UnknownTransition;
  return e;
}

namespace {

nlohmann::json summary_json(const PathSummary& s) {
  nlohmann::json per_action = nlohmann::json::object();
  for (const auto& [action, concepts] : s.per_action_concepts) {
    nlohmann::json names = nlohmann::json::array();
    for (Concept c : concepts) names.push_back(concept_id(c));
    per_action[std::string(to_string(action))] = std::move(names);
  }
  auto mentions = [](const std::vector<OutcomeMention>& list) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : list) out.push_back({{"outcome", outcome_id(m.outcome)}, {"probability", m.probability}});
    return out;
  };
  return {
      {"dominant_action", to_string(s.dominant_action)},
      {"dominant_frequency", s.dominant_frequency},
      {"per_action_concepts", std::move(per_action)},
      {"positive_outcomes", mentions(s.positive_outcomes)},
      {"negative_outcomes", mentions(s.negative_outcomes)},
      {"horizon", s.horizon},
  };
}

nlohmann::json side_json(std::string_view policy, const Trajectory& t, const PathSeq& p, const PathSummary& s,
                         const std::string& text, double threshold) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& token : path_tokens(p, threshold)) tokens.push_back(token);
  return {
      {"policy", policy},
      {"truncation", to_string(t.reason)},
      {"final_state", t.final_state ? nlohmann::json(encode_state(*t.final_state)) : nlohmann::json()},
      {"weight", t.weight()},
      {"partial", p.partial},
      {"summary", summary_json(s)},
      {"tokens", std::move(tokens)},
      {"text", text},
      {"trajectory", export_records(t, p)},
  };
}

}  // namespace

nlohmann::json options_to_json(const ExplainOptions& o) {
  nlohmann::json j{
      {"sigma", o.foil.sigma},
      {"epsilon", o.foil.epsilon_margin},
      {"lambda_f", o.foil.lambda_f},
      {"horizon", o.foil.effective_horizon()},
      {"allow_short_horizon", o.foil.allow_short_horizon},
      {"rollouts", o.foil.rollouts},
      {"alpha", o.foil.alpha},
      {"seed", o.foil.seed},
      {"mode", to_string(o.foil.mode)},
      {"contrast", to_string(o.contrast)},
      {"threshold", o.threshold},
  };
  if (const auto* sampled = std::get_if<Sampled>(&o.simulation)) {
    j["simulation"] = "sampled";
    j["simulation_seed"] = sampled->seed;
  } else {
    j["simulation"] = "most-probable";
  }
  return j;
}

ExplainOptions apply_overrides(ExplainOptions o, const nlohmann::json& overrides) {
  if (overrides.is_null()) return o;
  if (!overrides.is_object()) throw std::invalid_argument("params must be an object");
  for (const auto& [key, value] : overrides.items()) {
    auto number = [&] {
      if (!value.is_number()) throw std::invalid_argument("param '" + key + "' must be a number");
      return value.get<double>();
    };
    auto integer = [&] {
      if (!value.is_number_integer()) throw std::invalid_argument("param '" + key + "' must be an integer");
      return value.get<std::int64_t>();
    };
    auto text = [&] {
      if (!value.is_string()) throw std::invalid_argument("param '" + key + "' must be a string");
      return value.get<std::string>();
    };
    if (key == "sigma") {
      o.foil.sigma = number();
    } else if (key == "epsilon") {
      o.foil.epsilon_margin = number();
    } else if (key == "lambda_f") {
      o.foil.lambda_f = number();
    } else if (key == "horizon") {
      o.foil.horizon = static_cast<int>(integer());
    } else if (key == "allow_short_horizon") {
      if (!value.is_boolean()) throw std::invalid_argument("param 'allow_short_horizon' must be a boolean");
      o.foil.allow_short_horizon = value.get<bool>();
    } else if (key == "rollouts") {
      o.foil.rollouts = static_cast<int>(integer());
    } else if (key == "alpha") {
      o.foil.alpha = number();
    } else if (key == "seed") {
      o.foil.seed = static_cast<std::uint64_t>(integer());
    } else if (key == "mode") {
      const auto mode = parse_foil_mode(text());
      if (!mode) throw std::invalid_argument("param 'mode' must be reward_gap or guarantee_adoption");
      o.foil.mode = *mode;
    } else if (key == "contrast") {
      const auto mode = parse_contrast_mode(text());
      if (!mode) throw std::invalid_argument("param 'contrast' must be complement or symmetric");
      o.contrast = *mode;
    } else if (key == "threshold") {
      o.threshold = number();
    } else if (key == "simulation") {
      const std::string name = text();
      if (name == "most-probable") {
        o.simulation = MostProbable{};
      } else if (name == "sampled") {
        o.simulation = Sampled{o.foil.seed};
      } else {
        throw std::invalid_argument("param 'simulation' must be most-probable or sampled");
      }
    } else if (key == "simulation_seed") {
      o.simulation = Sampled{static_cast<std::uint64_t>(integer())};
    } else {
      throw std::invalid_argument("unknown param '" + key + "'");
    }
  }
  if (!(o.threshold > 0.0 && o.threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  return o;
}

LearningConfig learning_config_from_json(const nlohmann::json& doc) {
  LearningConfig c;
  if (doc.is_null()) return c;
  if (!doc.is_object()) throw std::invalid_argument("learning config must be an object");
  for (const auto& [key, value] : doc.items()) {
    const bool integral = value.is_number_integer();
    if (!value.is_number()) throw std::invalid_argument("config '" + key + "' must be a number");
    if (key == "alpha") {
      c.alpha = value.get<double>();
    } else if (key == "lambda") {
      c.lambda = value.get<double>();
    } else if (key == "epsilon_explore") {
      c.epsilon_explore = value.get<double>();
    } else if (key == "epsilon_final") {
      c.epsilon_final = value.get<double>();
    } else if (key == "episodes" && integral) {
      c.episodes = value.get<int>();
    } else if (key == "max_steps_per_episode" && integral) {
      c.max_steps_per_episode = value.get<int>();
    } else if (key == "seed" && integral) {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "episodes" || key == "max_steps_per_episode" || key == "seed") {
      throw std::invalid_argument("config '" + key + "' must be an integer");
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const LearningConfig& c) {
  return {{"alpha", c.alpha},
          {"lambda", c.lambda},
          {"epsilon_explore", c.epsilon_explore},
          {"epsilon_final", c.epsilon_final},
          {"episodes", c.episodes},
          {"max_steps_per_episode", c.max_steps_per_episode},
          {"seed", c.seed}};
}

nlohmann::json to_payload(const Explanation& e, const ExplainOptions& options) {
  nlohmann::json contrast{
      {"mode", to_string(e.contrast.mode)},
      {"fact_only", e.contrast.fact_only},
      {"foil_only", e.contrast.foil_only},
  };
  return {
      {"version", "v1"},
      {"template", to_string(TemplateId::Contrastive)},
      {"query", to_dsl(e.query)},
      {"start_state", encode_state(e.start)},
      {"params", options_to_json(options)},
      {"text", e.contrast_text},
      {"fact", side_json("learned", e.fact_trajectory, e.fact_path, e.fact_summary, e.fact_text, options.threshold)},
      {"foil", side_json("foil", e.foil_trajectory, e.foil_path, e.foil_summary, e.foil_text, options.threshold)},
      {"contrast", std::move(contrast)},
      {"divergence_step", e.divergence_step ? nlohmann::json(*e.divergence_step) : nlohmann::json()},
      {"foil_training", {{"episodes", e.training.episodes}, {"truncated_episodes", e.training.truncated_episodes}}},
      {"partial", e.partial},
  };
}

std::string to_text(const Explanation& e, const ExplainOptions& options) {
  auto describe = [](const Trajectory& t) {
    return std::to_string(t.steps.size()) + " steps, " + std::string(to_string(t.reason));
  };
  std::string out;
  out += "Question: why not \"" + to_dsl(e.query) + "\"?\n";
  out += "Start: " + encode_state(e.start) + "\n";
  out += "Learned policy (" + describe(e.fact_trajectory) + "): " + e.fact_text + "\n";
  out += "Suggested policy (" + describe(e.foil_trajectory) + "): " + e.foil_text + "\n";
  out += "Contrast (" + std::string(to_string(options.contrast)) + "): " + e.contrast_text + "\n";
  if (e.partial) out += "Note: this explanation is partial; some transitions were unknown to the model.\n";
  return out;
}

}  // namespace cxrl
