#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "cxrl/agent.hpp"
#include "cxrl/explainer.hpp"
#include "cxrl/foil.hpp"
#include "cxrl/rollout.hpp"

namespace cxrl {

/// Everything a contrastive question is answered against. All references
/// must outlive the call.
struct ExplainContext {
  const GridWorld& world;
  const QTable& q_t;
  const TransitionSource& transitions;
  const Translator& translator;
  double lambda;
};

struct ExplainOptions {
  FoilParams foil;
  SimulationMode simulation = MostProbable{};
  ContrastMode contrast = ContrastMode::SymmetricDifference;
  double threshold = kDefaultOutcomeThreshold;
};

struct Explanation {
  FoilQuery query;
  EnvState start;
  FoilTraining training;
  QTable q_f;
  Trajectory fact_trajectory;
  Trajectory foil_trajectory;
  PathSeq fact_path;
  PathSeq foil_path;
  PathSummary fact_summary;
  PathSummary foil_summary;
  ContrastSet contrast;
  std::string fact_text;
  std::string foil_text;
  std::string contrast_text;
  // First step at which the two trajectories differ; nullopt when identical.
  std::optional<int> divergence_step;
  // Some transition or outcome along the way was unknown to the model.
  bool partial = false;
};

/// Thrown when the question cannot be asked from the given state.
class TerminalStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains Q_I for the query, composes Q_f, simulates the learned and the foil
/// policy from `start`, translates both and renders the contrast.
Explanation explain(const ExplainContext& ctx, const FoilQuery& query, const EnvState& start,
                    const ExplainOptions& options);

/// The structured explanation document shared by the CLI and the service.
nlohmann::json to_payload(const Explanation& e, const ExplainOptions& options);
/// Plain-text rendering of an explanation, as printed by `cxrl explain`.
std::string to_text(const Explanation& e, const ExplainOptions& options);

/// Reads option overrides ("sigma", "epsilon", "lambda_f", "horizon",
/// "rollouts", "seed", "mode", "simulation", "contrast", "threshold",
/// "allow_short_horizon") from a JSON object on top of `base`.
ExplainOptions apply_overrides(ExplainOptions base, const nlohmann::json& overrides);
nlohmann::json options_to_json(const ExplainOptions& options);

/// Learning configuration from a JSON object with any of the keys alpha,
/// lambda, epsilon_explore, epsilon_final, episodes, max_steps_per_episode,
/// seed. Unknown keys are rejected.
LearningConfig learning_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const LearningConfig& config);

}  // namespace cxrl
