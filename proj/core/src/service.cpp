#include "cxrl/service.hpp"

#include <fstream>
#include <sstream>

#include "cxrl/format.hpp"

namespace cxrl {

std::string_view to_string(TransitionChoice c) {
  switch (c) {
    case TransitionChoice::Learned: return "learned";
    case TransitionChoice::LearnedWithFallback: return "learned_with_fallback";
    case TransitionChoice::True: return "true";
  }
  return "?";
}

std::optional<TransitionChoice> parse_transition_choice(std::string_view name) {
  if (name == "learned") return TransitionChoice::Learned;
  if (name == "learned_with_fallback") return TransitionChoice::LearnedWithFallback;
  if (name == "true") return TransitionChoice::True;
  return std::nullopt;
}

Response error_response(int status, std::string_view code, std::string_view message) {
  Response r;
  r.status = status;
  r.body = {{"error", {{"code", code}, {"message", message}}}};
  return r;
}

namespace {

Response ok(nlohmann::json body, int status = 200) {
  Response r;
  r.status = status;
  r.body = std::move(body);
  return r;
}

nlohmann::json coord_json(Coord c) { return nlohmann::json::array({c.x, c.y}); }

nlohmann::json layout_json(const GridLayout& l) {
  nlohmann::json forests = nlohmann::json::array();
  for (Coord c : l.forests) forests.push_back(coord_json(c));
  nlohmann::json traps = nlohmann::json::array();
  for (Coord c : l.traps) traps.push_back(coord_json(c));
  return {
      {"width", l.width},
      {"height", l.height},
      {"start", coord_json(l.start)},
      {"goal", coord_json(l.goal)},
      {"forests", std::move(forests)},
      {"traps", std::move(traps)},
      {"monster_start", l.monster_start ? coord_json(*l.monster_start) : nlohmann::json()},
      {"zone", l.zone ? nlohmann::json::array({l.zone->x1, l.zone->y1, l.zone->x2, l.zone->y2}) : nlohmann::json()},
      {"p_intent", l.p_intent},
      {"rewards",
       {{"step_penalty", l.rewards.step_penalty},
        {"forest_penalty", l.rewards.forest_penalty},
        {"terminal_penalty", l.rewards.terminal_penalty},
        {"goal_reward", l.rewards.goal_reward}}},
      {"grid", to_grid_text(l)},
  };
}

nlohmann::json vocabulary_json(const Vocabulary& v) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : v.concepts) concepts.push_back({{"id", concept_id(c.id)}, {"phrase", c.phrase}});
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : v.outcomes) {
    outcomes.push_back({{"id", outcome_id(o.id)},
                        {"phrase", o.phrase},
                        {"valence", o.valence == Valence::Positive ? "positive" : "negative"}});
  }
  return {{"concepts", std::move(concepts)}, {"outcomes", std::move(outcomes)}};
}

nlohmann::json state_json(const EnvState& s) {
  return {
      {"encoded", encode_state(s)},
      {"agent", coord_json(s.agent)},
      {"monster", s.monster ? coord_json(*s.monster) : nlohmann::json()},
      {"status", to_string(s.status)},
      {"step_count", s.step_count},
  };
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

// Members reference each other, so a session is pinned on the heap.
struct SessionService::Session {
  std::string id;
  std::unique_ptr<GridWorld> world;
  std::unique_ptr<RuleTranslator> translator;
  std::unique_ptr<TrueTransitions> truth;
  std::unique_ptr<EmpiricalModel> model;
  std::unique_ptr<LearnedTransitions> learned;
  std::shared_ptr<const QTable> q_t;
  TransitionChoice choice = TransitionChoice::LearnedWithFallback;
  LearningConfig config;
  std::uint64_t seed = 0;
  ExplainOptions defaults;
  EnvState current;
  std::uint64_t steps_taken = 0;

  // Last successful query, replayed by the last_foil trajectory.
  std::optional<FoilQuery> last_query;
  ExplainOptions last_options;
  EnvState last_start;

  std::atomic<bool> ready{false};
  std::optional<std::string> training_error;
  std::thread trainer;
  std::mutex mutex;

  ~Session() {
    if (trainer.joinable()) trainer.join();
  }

  const TransitionSource& transitions() const {
    if (choice == TransitionChoice::True) return *truth;
    return *learned;
  }

  void wire() {
    translator = std::make_unique<RuleTranslator>(world->layout());
    truth = std::make_unique<TrueTransitions>(*world);
    const TransitionSource* fallback = choice == TransitionChoice::LearnedWithFallback ? truth.get() : nullptr;
    learned = std::make_unique<LearnedTransitions>(*model, *world, fallback);
  }

  ExplainContext context() const { return {*world, *q_t, transitions(), *translator, config.lambda}; }
};

SessionService::SessionService(ServiceLimits limits) : limits_(limits) {}
SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string SessionService::add(std::shared_ptr<Session> session) {
  std::unique_lock lock(registry_mutex_);
  session->id = "s" + std::to_string(next_id_++);
  sessions_[session->id] = session;
  return session->id;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

#define CXRL_FIND_SESSION(id)                                                          \
  auto session = find(id);                                                             \
  if (!session) return error_response(404, "unknown_session", "no session '" + (id) + "'"); \
  if (!session->ready) return error_response(409, "training_in_progress", "the agent is still training"); \
  if (session->training_error) return error_response(409, "training_failed", *session->training_error); \
  std::lock_guard guard(session->mutex)

Response SessionService::create_session(const nlohmann::json& request) {
  auto session = std::make_shared<Session>();
  bool background = false;
  int explore_episodes = 0;
  std::optional<QTable> preloaded;
  try {
    if (!request.is_object()) throw std::invalid_argument("request body must be an object");
    if (!request.contains("layout") || !request["layout"].is_string()) {
      throw std::invalid_argument("'layout' must hold the grid text");
    }
    session->world = std::make_unique<GridWorld>(load_layout(request["layout"].get<std::string>()));
    session->config = learning_config_from_json(request.value("config", nlohmann::json()));
    session->seed = request.value("seed", session->config.seed);
    if (request.contains("transitions")) {
      const auto choice = parse_transition_choice(request["transitions"].get<std::string>());
      if (!choice) throw std::invalid_argument("'transitions' must be learned, learned_with_fallback or true");
      session->choice = *choice;
    }
    ExplainOptions defaults;
    defaults.foil.seed = session->seed;
    session->defaults = apply_overrides(defaults, request.value("params", nlohmann::json()));
    session->defaults.foil.validate(session->config.lambda);
    session->model = std::make_unique<EmpiricalModel>(
        request.contains("tmodel") ? deserialize_tmodel(request["tmodel"].get<std::string>()) : EmpiricalModel());
    if (request.contains("qtab")) preloaded = deserialize_qtable(request["qtab"].get<std::string>());
    explore_episodes = request.value("explore_episodes", 0);
    if (explore_episodes < 0) throw std::invalid_argument("'explore_episodes' must be nonnegative");
    background = request.value("background", false);
  } catch (const ParseError& e) {
    auto r = error_response(400, "invalid_layout", e.what());
    r.body["error"]["line"] = e.line();
    r.body["error"]["column"] = e.column();
    return r;
  } catch (const ValidationError& e) {
    return error_response(400, "invalid_layout", e.what());
  } catch (const std::exception& e) {
    return error_response(400, "invalid_request", e.what());
  }

  session->wire();
  session->current = session->world->initial_state();
  const std::string id = add(session);

  auto fit = [s = session.get(), preloaded = std::move(preloaded), explore_episodes]() mutable {
    try {
      if (preloaded) {
        s->q_t = std::make_shared<const QTable>(std::move(*preloaded));
      } else {
        s->q_t = std::make_shared<const QTable>(train(s->world->layout(), s->config, s->model.get()).q);
      }
      if (explore_episodes > 0) {
        explore(*s->world, *s->model, explore_episodes, s->config.max_steps_per_episode,
                derive_seed(s->seed, 1));
      }
    } catch (const std::exception& e) {
      s->training_error = e.what();
    }
    s->ready = true;
  };
  if (background) {
    session->trainer = std::thread(std::move(fit));
    return ok({{"id", id}, {"training", true}}, 202);
  }
  fit();
  if (session->training_error) return error_response(400, "invalid_request", *session->training_error);
  return ok({{"id", id}, {"training", false}}, 201);
}

void SessionService::wait_ready(const std::string& id) {
  auto session = find(id);
  if (session && session->trainer.joinable()) session->trainer.join();
}

std::optional<std::string> SessionService::q_table_text(const std::string& id) {
  auto session = find(id);
  if (!session || !session->ready || !session->q_t) return std::nullopt;
  return serialize(*session->q_t);
}

Response SessionService::get_view(const std::string& id) {
  CXRL_FIND_SESSION(id);
  const GridWorld& world = *session->world;
  const EnvState& s = session->current;
  const FeatureVec f = world.features(s);
  const ConceptVec c = session->translator->concepts(s);
  nlohmann::json concepts = nlohmann::json::object();
  for (std::size_t i = 0; i < kConceptCount; ++i) concepts[std::string(concept_id(static_cast<Concept>(i)))] = c.flags[i];
  const ActionValues values = session->q_t->values(f);
  nlohmann::json q = nlohmann::json::object();
  for (Action a : kActions) q[std::string(to_string(a))] = at(values, a);
  return ok({
      {"id", session->id},
      {"layout", layout_json(world.layout())},
      {"vocabulary", vocabulary_json(world.layout().vocabulary)},
      {"state", state_json(s)},
      {"features",
       {{"x", f.x}, {"y", f.y}, {"adj_forest", f.adj_forest}, {"adj_monster", f.adj_monster}, {"adj_trap", f.adj_trap}}},
      {"concepts", std::move(concepts)},
      {"greedy_action", to_string(greedy_action(values))},
      {"q_values", std::move(q)},
      {"transitions", to_string(session->choice)},
      {"params", options_to_json(session->defaults)},
      {"config", to_json(session->config)},
      {"seed", session->seed},
  });
}

Response SessionService::post_query(const std::string& id, const nlohmann::json& request) {
  CXRL_FIND_SESSION(id);
  FoilQuery query;
  ExplainOptions options;
  try {
    if (!request.is_object() || !request.contains("query")) throw std::invalid_argument("'query' is required");
    const auto& q = request["query"];
    query = q.is_string() ? parse_query(q.get<std::string>()) : query_from_json(q);
  } catch (const QueryError& e) {
    auto r = error_response(400, "invalid_query", e.what());
    r.body["error"]["column"] = e.column();
    return r;
  } catch (const std::exception& e) {
    return error_response(400, "invalid_query", e.what());
  }
  try {
    options = apply_overrides(session->defaults, request.value("params", nlohmann::json()));
    options.foil.validate(session->config.lambda);
    if (options.foil.rollouts > limits_.max_rollouts) {
      throw std::invalid_argument("rollouts exceed the service budget of " + std::to_string(limits_.max_rollouts));
    }
    if (options.foil.effective_horizon() > limits_.max_horizon) {
      throw std::invalid_argument("horizon exceeds the service budget of " + std::to_string(limits_.max_horizon));
    }
  } catch (const std::exception& e) {
    return error_response(400, "invalid_params", e.what());
  }

  Explanation e;
  try {
    e = explain(session->context(), query, session->current, options);
  } catch (const TerminalStateError& err) {
    return error_response(409, "episode_over", err.what());
  }
  session->last_query = query;
  session->last_options = options;
  session->last_start = session->current;
  return ok(to_payload(e, options), e.partial ? 422 : 200);
}

Response SessionService::post_step(const std::string& id, const nlohmann::json& request) {
  CXRL_FIND_SESSION(id);
  const std::string name = request.is_object() && request.contains("action") && request["action"].is_string()
                               ? request["action"].get<std::string>()
                               : std::string("auto");
  const GridWorld& world = *session->world;
  if (name == "reset") {
    session->current = world.initial_state();
    return ok({{"action", "reset"}, {"reward", 0.0}, {"state", state_json(session->current)}, {"done", false}});
  }
  Action action{};
  if (name == "auto") {
    action = greedy_action(session->q_t->values(world.features(session->current)));
  } else if (const auto parsed = parse_action(name)) {
    action = *parsed;
  } else {
    return error_response(400, "invalid_action", "unknown action '" + name + "'");
  }
  if (session->current.terminated()) {
    return error_response(409, "episode_over", "the episode has ended; reset to start again");
  }
  Rng rng(derive_seed(session->seed, 1000 + session->steps_taken++));
  const auto [next, reward] = world.step(session->current, action, rng);
  session->current = next;
  return ok({{"action", to_string(action)},
             {"reward", reward},
             {"state", state_json(next)},
             {"done", next.terminated()}});
}

Response SessionService::get_trajectory(const std::string& id, const TrajectoryRequest& request) {
  CXRL_FIND_SESSION(id);
  const int n = request.n.value_or(session->defaults.foil.effective_horizon());
  if (n < 0 || n > limits_.max_trajectory_steps) {
    return error_response(400, "invalid_request", "n must lie in [0, " + std::to_string(limits_.max_trajectory_steps) + "]");
  }
  SimulationMode mode;
  if (request.mode == "most-probable") {
    mode = MostProbable{};
  } else if (request.mode == "sampled") {
    mode = Sampled{request.seed.value_or(session->seed)};
  } else {
    return error_response(400, "invalid_request", "mode must be most-probable or sampled");
  }

  const ExplainContext ctx = session->context();
  Policy policy;
  QTable q_f;
  if (request.policy == "learned") {
    policy = greedy_policy(*session->q_t, *session->world);
  } else if (request.policy == "last_foil") {
    if (!session->last_query) return error_response(409, "no_foil", "no query has been answered in this session");
    const FoilTraining training = train_qi(*session->q_t, *session->last_query, session->last_start,
                                           session->last_options.foil, *session->world, ctx.transitions,
                                           *session->translator, ctx.lambda);
    const auto choose = foil_policy(compose_qf(*session->q_t, training.q_i));
    const GridWorld* world = session->world.get();
    policy = [world, choose](const EnvState& s) { return choose(world->features(s)); };
  } else {
    return error_response(400, "invalid_request", "policy must be learned or last_foil");
  }

  const Trajectory t = simulate(session->current, policy, n, ctx.transitions, mode);
  const PathSeq path = to_path(t, *session->translator, ctx.transitions);
  nlohmann::json records = export_records(t, path);
  if (request.jsonl) {
    Response r;
    r.raw = to_jsonl(records);
    r.content_type = "application/x-ndjson";
    return r;
  }
  return ok({{"policy", request.policy},
             {"start_state", encode_state(session->current)},
             {"truncation", to_string(t.reason)},
             {"final_state", t.final_state ? nlohmann::json(encode_state(*t.final_state)) : nlohmann::json()},
             {"weight", t.weight()},
             {"records", std::move(records)}});
}

void SessionService::save_snapshot(const std::string& id, const std::filesystem::path& dir) {
  auto session = find(id);
  if (!session) throw std::invalid_argument("no session '" + id + "'");
  if (session->trainer.joinable()) session->trainer.join();
  if (!session->q_t) throw std::runtime_error("session '" + id + "' has no trained table");
  std::lock_guard guard(session->mutex);
  std::filesystem::create_directories(dir);
  write_file(dir / "layout.grid", to_grid_text(session->world->layout()));
  write_file(dir / "agent.qtab", serialize(*session->q_t));
  write_file(dir / "model.tmodel", serialize(*session->model));
  const nlohmann::json meta{
      {"seed", session->seed},
      {"config", to_json(session->config)},
      {"transitions", to_string(session->choice)},
      {"params", options_to_json(session->defaults)},
      {"current_state", encode_state(session->current)},
      {"step_count", session->current.step_count},
      {"steps_taken", session->steps_taken},
  };
  write_file(dir / "session.json", meta.dump(2) + "\n");
}

std::string SessionService::restore_snapshot(const std::filesystem::path& dir) {
  const auto meta = nlohmann::json::parse(read_file(dir / "session.json"));
  const nlohmann::json params = meta.at("params");
  const nlohmann::json request{
      {"layout", read_file(dir / "layout.grid")},
      {"qtab", read_file(dir / "agent.qtab")},
      {"tmodel", read_file(dir / "model.tmodel")},
      {"config", meta.at("config")},
      {"seed", meta.at("seed")},
      {"transitions", meta.at("transitions")},
      {"params", params},
  };
  const Response r = create_session(request);
  if (r.status != 201) throw std::runtime_error("cannot restore snapshot: " + r.body.dump());
  const std::string id = r.body["id"].get<std::string>();
  auto session = find(id);
  std::lock_guard guard(session->mutex);
  session->current = decode_state(meta.at("current_state").get<std::string>());
  session->current.step_count = meta.at("step_count").get<int>();
  session->steps_taken = meta.at("steps_taken").get<std::uint64_t>();
  return id;
}

}  // namespace cxrl
