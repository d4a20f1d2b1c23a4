#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "cxrl/gridworld.hpp"
#include "cxrl/qtable.hpp"
#include "cxrl/transition_model.hpp"

namespace cxrl {

struct LearningConfig {
  double alpha = 0.1;
  double lambda = 0.9;
  // Exploration rate decays linearly from epsilon_explore to epsilon_final.
  double epsilon_explore = 0.1;
  double epsilon_final = 0.01;
  int episodes = 50000;
  int max_steps_per_episode = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Greedy {};
struct EpsilonGreedy {
  double rate;
  Rng* rng;
};
using SelectionMode = std::variant<Greedy, EpsilonGreedy>;

/// Argmax with ties going to the earliest action in canonical order.
Action greedy_action(const ActionValues& values);
Action select_action(const QTable& q, const FeatureVec& f, const SelectionMode& mode);

/// One tabular Q-learning backup:
///   Q(f,a) <- (1-alpha) Q(f,a) + alpha (r + lambda max_a' Q(f',a'))
/// with the bootstrap term dropped when `next_terminal`.
void q_update(QTable& q, const FeatureVec& f, Action a, double reward, const FeatureVec& next,
              bool next_terminal, double alpha, double lambda);

struct TrainingResult {
  QTable q;
  std::vector<double> episode_returns;
};

/// Epsilon-greedy Q-learning from the layout's start state. Deterministic in
/// config.seed. When `experience` is given, every sampled transition is also
/// recorded into it.
TrainingResult train(const GridLayout& layout, const LearningConfig& config,
                     EmpiricalModel* experience = nullptr);

/// A stationary policy over full states.
using Policy = std::function<Action(const EnvState&)>;
/// Greedy policy of a Q-table, applied through the layout's feature map.
Policy greedy_policy(const QTable& q, const GridWorld& world);

/// Thrown when an exact solver would have to enumerate too many states.
class StateSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// States reachable from `from` under any sequence of actions.
std::vector<EnvState> reachable_states(const GridWorld& world, const EnvState& from,
                                       std::size_t cap = 1'000'000);

struct ValueIterationResult {
  std::map<EnvState, double> values;
  std::map<EnvState, Action> policy;  // running states only
  std::map<EnvState, ActionValues> q;
  int sweeps = 0;
  double residual = 0.0;
};

/// Exact dynamic programming over the full state space reachable from the
/// start state; terminated states have value 0.
ValueIterationResult value_iteration(const GridWorld& world, double lambda, double tolerance,
                                     std::size_t state_cap = 1'000'000);

/// Expected discounted return of `policy` from `from` (iterative policy evaluation).
double policy_value(const GridWorld& world, const Policy& policy, const EnvState& from, double lambda,
                    double tolerance = 1e-10);

}  // namespace cxrl
