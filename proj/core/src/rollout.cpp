#include "cxrl/rollout.hpp"

#include <nlohmann/json.hpp>

namespace cxrl {

std::string_view to_string(Truncation t) {
  switch (t) {
    case Truncation::HorizonReached: return "HorizonReached";
    case Truncation::Terminated: return "Terminated";
    case Truncation::UnknownTransition: return "UnknownTransition";
  }
  return "?";
}

double Trajectory::weight() const {
  double w = final_probability;
  for (const auto& step : steps) w *= step.probability;
  return w;
}

namespace {

const Successor& most_probable(const Distribution& dist) {
  const Successor* best = &dist.front();
  for (const auto& s : dist) {
    if (s.probability > best->probability || (s.probability == best->probability && s.state < best->state)) {
      best = &s;
    }
  }
  return *best;
}

}  // namespace

Trajectory simulate(const EnvState& s_t, const Policy& policy, int n, const TransitionSource& transitions,
                    const SimulationMode& mode) {
  Trajectory traj;
  if (s_t.terminated()) {
    traj.reason = Truncation::Terminated;
    traj.final_state = s_t;
    return traj;
  }
  std::optional<Rng> rng;
  if (const auto* sampled = std::get_if<Sampled>(&mode)) rng.emplace(sampled->seed);

  traj.steps.push_back({s_t, policy(s_t), 1.0});
  for (int i = 1; i <= n; ++i) {
    const TrajectoryStep& prev = traj.steps.back();
    const auto dist = transitions.successors(prev.state, prev.action);
    if (!dist || dist->empty()) {
      traj.reason = Truncation::UnknownTransition;
      return traj;
    }
    const Successor& next = rng ? sample(*dist, rng->uniform()) : most_probable(*dist);
    if (next.state.terminated()) {
      traj.reason = Truncation::Terminated;
      traj.final_state = next.state;
      traj.final_probability = next.probability;
      return traj;
    }
    traj.steps.push_back({next.state, policy(next.state), next.probability});
  }
  traj.reason = Truncation::HorizonReached;
  return traj;
}

std::vector<WeightedTrajectory> ensemble(const EnvState& s_t, const Policy& policy, int n,
                                         const TransitionSource& transitions, std::span<const std::uint64_t> seeds) {
  std::vector<WeightedTrajectory> out;
  out.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    Trajectory t = simulate(s_t, policy, n, transitions, Sampled{seed});
    const double w = t.weight();
    out.push_back({std::move(t), w});
  }
  return out;
}

PathSeq to_path(const Trajectory& trajectory, const Translator& translator, const TransitionSource& transitions) {
  PathSeq path;
  path.steps.reserve(trajectory.steps.size());
  for (const auto& step : trajectory.steps) {
    PathStep p;
    p.action = step.action;
    p.concepts = translator.concepts(step.state);
    if (auto outcomes = translator.outcomes(step.state, step.action, transitions)) {
      p.outcomes = *outcomes;
    } else {
      p.outcome_known = false;
      path.partial = true;
    }
    path.steps.push_back(p);
  }
  return path;
}

nlohmann::json export_records(const Trajectory& trajectory, const PathSeq& path) {
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const TrajectoryStep& step = trajectory.steps[i];
    nlohmann::json concepts = nlohmann::json::object();
    nlohmann::json outcomes = nlohmann::json::object();
    if (i < path.steps.size()) {
      for (std::size_t c = 0; c < kConceptCount; ++c) {
        concepts[std::string(concept_id(static_cast<Concept>(c)))] = path.steps[i].concepts.flags[c];
      }
      if (path.steps[i].outcome_known) {
        for (std::size_t o = 0; o < kOutcomeCount; ++o) {
          outcomes[std::string(outcome_id(static_cast<Outcome>(o)))] = path.steps[i].outcomes.probabilities[o];
        }
      }
    }
    nlohmann::json record{
        {"step", i},
        {"state", encode_state(step.state)},
        {"agent", {step.state.agent.x, step.state.agent.y}},
        {"action", to_string(step.action)},
        {"probability", step.probability},
        {"concepts", std::move(concepts)},
        {"outcomes", i < path.steps.size() && path.steps[i].outcome_known ? std::move(outcomes) : nlohmann::json()},
    };
    record["monster"] = step.state.monster ? nlohmann::json{step.state.monster->x, step.state.monster->y}
                                           : nlohmann::json();
    records.push_back(std::move(record));
  }
  return records;
}

std::string to_jsonl(const nlohmann::json& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cxrl
