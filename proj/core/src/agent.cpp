#include "cxrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <tuple>
#include <stdexcept>

namespace cxrl {

void LearningConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (!(epsilon_explore >= 0.0 && epsilon_explore <= 1.0)) {
    throw std::invalid_argument("epsilon_explore must lie in [0, 1]");
  }
  if (!(epsilon_final >= 0.0 && epsilon_final <= 1.0)) throw std::invalid_argument("epsilon_final must lie in [0, 1]");
  if (episodes < 0) throw std::invalid_argument("episodes must be nonnegative");
  if (max_steps_per_episode <= 0) throw std::invalid_argument("max_steps_per_episode must be positive");
}

Action greedy_action(const ActionValues& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return kActions[best];
}

Action select_action(const QTable& q, const FeatureVec& f, const SelectionMode& mode) {
  if (const auto* eg = std::get_if<EpsilonGreedy>(&mode)) {
    if (eg->rng->uniform() < eg->rate) return kActions[eg->rng->below(kActions.size())];
  }
  return greedy_action(q.values(f));
}

void q_update(QTable& q, const FeatureVec& f, Action a, double reward, const FeatureVec& next,
              bool next_terminal, double alpha, double lambda) {
  double target = reward;
  if (!next_terminal) {
    const ActionValues nv = q.values(next);
    target += lambda * *std::max_element(nv.begin(), nv.end());
  }
  q.set(f, a, (1.0 - alpha) * q.get(f, a) + alpha * target);
}

TrainingResult train(const GridLayout& layout, const LearningConfig& config, EmpiricalModel* experience) {
  config.validate();
  const GridWorld world(layout);
  TrainingResult result;
  result.episode_returns.reserve(static_cast<std::size_t>(config.episodes));
  Rng rng(config.seed);

  for (int episode = 0; episode < config.episodes; ++episode) {
    const double progress = config.episodes > 1 ? double(episode) / double(config.episodes - 1) : 1.0;
    const double epsilon = config.epsilon_explore + (config.epsilon_final - config.epsilon_explore) * progress;

    EnvState s = world.initial_state();
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < config.max_steps_per_episode && !s.terminated(); ++t) {
      const FeatureVec f = world.features(s);
      const Action a = select_action(result.q, f, EpsilonGreedy{epsilon, &rng});
      auto [next, reward] = world.step(s, a, rng);
      if (experience != nullptr) experience->record(s, a, next);
      q_update(result.q, f, a, reward, world.features(next), next.terminated(), config.alpha, config.lambda);
      ret += discount * reward;
      discount *= config.lambda;
      s = next;
    }
    result.episode_returns.push_back(ret);
  }
  return result;
}

Policy greedy_policy(const QTable& q, const GridWorld& world) {
  return [&q, &world](const EnvState& s) { return greedy_action(q.values(world.features(s))); };
}

std::vector<EnvState> reachable_states(const GridWorld& world, const EnvState& from, std::size_t cap) {
  std::vector<EnvState> order;
  std::map<EnvState, bool> seen;
  std::deque<EnvState> frontier{from};
  seen[from] = true;
  while (!frontier.empty()) {
    EnvState s = frontier.front();
    frontier.pop_front();
    s.step_count = 0;
    order.push_back(s);
    if (order.size() > cap) throw StateSpaceTooLarge("more than " + std::to_string(cap) + " reachable states");
    if (s.terminated()) continue;
    for (Action a : kActions) {
      for (const auto& succ : world.true_transition(s, a)) {
        if (seen.try_emplace(succ.state, true).second) frontier.push_back(succ.state);
      }
    }
  }
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

// Dense transition table over an enumerated state list.
struct IndexedModel {
  struct Branch {
    std::size_t next;
    double probability;
    double reward;
  };
  std::vector<EnvState> states;
  std::vector<std::array<std::vector<Branch>, 4>> branches;

  IndexedModel(const GridWorld& world, std::vector<EnvState> all) : states(std::move(all)) {
    std::map<EnvState, std::size_t> index;
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
    branches.resize(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].terminated()) continue;
      for (Action a : kActions) {
        for (const auto& succ : world.true_transition(states[i], a)) {
          branches[i][static_cast<std::size_t>(a)].push_back({index.at(succ.state), succ.probability, succ.reward});
        }
      }
    }
  }

  double backup(std::size_t i, Action a, const std::vector<double>& v, double lambda) const {
    double total = 0.0;
    for (const auto& b : branches[i][static_cast<std::size_t>(a)]) {
      total += b.probability * (b.reward + lambda * v[b.next]);
    }
    return total;
  }
};

}  // namespace

ValueIterationResult value_iteration(const GridWorld& world, double lambda, double tolerance,
                                     std::size_t state_cap) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const IndexedModel model(world, reachable_states(world, world.initial_state(), state_cap));
  const std::size_t n = model.states.size();
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n, 0.0);

  ValueIterationResult result;
  do {
    result.residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (model.states[i].terminated()) {
        next[i] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kActions) best = std::max(best, model.backup(i, a, v, lambda));
      next[i] = best;
      result.residual = std::max(result.residual, std::abs(best - v[i]));
    }
    v.swap(next);
    ++result.sweeps;
  } while (result.residual >= tolerance);

  for (std::size_t i = 0; i < n; ++i) {
    const EnvState& s = model.states[i];
    result.values[s] = v[i];
    if (s.terminated()) continue;
    ActionValues q{};
    for (Action a : kActions) at(q, a) = model.backup(i, a, v, lambda);
    result.q[s] = q;
    result.policy[s] = greedy_action(q);
  }
  return result;
}

double policy_value(const GridWorld& world, const Policy& policy, const EnvState& from, double lambda,
                    double tolerance) {
  // Enumerate only what the policy can reach, then iterate its Bellman operator.
  std::map<EnvState, std::size_t> index;
  std::vector<EnvState> states;
  EnvState root = from;
  root.step_count = 0;
  index[root] = 0;
  states.push_back(root);
  std::vector<std::vector<std::tuple<std::size_t, double, double>>> branches;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EnvState s = states[i];
    branches.emplace_back();
    if (s.terminated()) continue;
    const Action a = policy(s);
    for (const auto& succ : world.true_transition(s, a)) {
      auto [it, inserted] = index.try_emplace(succ.state, states.size());
      if (inserted) {
        EnvState stored = succ.state;
        stored.step_count = 0;
        states.push_back(stored);
      }
      branches[i].emplace_back(it->second, succ.probability, succ.reward);
    }
  }
  std::vector<double> v(states.size(), 0.0);
  double residual = 0.0;
  do {
    residual = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      double total = 0.0;
      for (const auto& [j, p, r] : branches[i]) total += p * (r + lambda * v[j]);
      residual = std::max(residual, std::abs(total - v[i]));
      v[i] = total;
    }
  } while (residual >= tolerance);
  return v[0];
}

}  // namespace cxrl
