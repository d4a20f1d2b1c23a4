#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cxrl/agent.hpp"
#include "cxrl/interpretable.hpp"
#include "cxrl/transition_model.hpp"

namespace cxrl {

enum class Truncation { HorizonReached, Terminated, UnknownTransition };
std::string_view to_string(Truncation t);

struct TrajectoryStep {
  EnvState state;
  Action action = Action::Up;
  // Probability of the transition that led into `state` (1 for the first step).
  double probability = 1.0;
};

/// (s_0, a_0), ..., (s_k, a_k) with k <= n. Terminated states are not
/// included as steps; the state a trajectory terminated in is kept in
/// `final_state` together with the probability of that last transition.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Truncation reason = Truncation::HorizonReached;
  std::optional<EnvState> final_state;
  double final_probability = 1.0;

  /// Product of every transition probability along the trajectory.
  double weight() const;
};

struct MostProbable {};
struct Sampled {
  std::uint64_t seed = 0;
};
using SimulationMode = std::variant<MostProbable, Sampled>;

/// Rolls `policy` forward for at most n transitions. MostProbable follows the
/// highest-probability successor at every step (ties go to the smallest state),
/// which need not be the most probable trajectory overall.
Trajectory simulate(const EnvState& s_t, const Policy& policy, int n, const TransitionSource& transitions,
                    const SimulationMode& mode);

struct WeightedTrajectory {
  Trajectory trajectory;
  double weight = 0.0;
};

/// One sampled trajectory per seed, in seed order.
std::vector<WeightedTrajectory> ensemble(const EnvState& s_t, const Policy& policy, int n,
                                         const TransitionSource& transitions, std::span<const std::uint64_t> seeds);

struct PathStep {
  Action action = Action::Up;
  ConceptVec concepts;
  OutcomeVec outcomes;
  bool outcome_known = true;
};

/// A trajectory in user-facing terms: concepts of each visited state and the
/// outcome probabilities of the action taken there.
struct PathSeq {
  std::vector<PathStep> steps;
  bool partial = false;  // some outcome could not be predicted
};

PathSeq to_path(const Trajectory& trajectory, const Translator& translator, const TransitionSource& transitions);

/// One JSON record per step: index, state encoding, action, transition
/// probability, concept flags and outcome probabilities.
nlohmann::json export_records(const Trajectory& trajectory, const PathSeq& path);
/// The same records, one compact JSON document per line.
std::string to_jsonl(const nlohmann::json& records);

}  // namespace cxrl
