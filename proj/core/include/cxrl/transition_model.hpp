#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "cxrl/gridworld.hpp"

namespace cxrl {

/// Anything that can answer "where can (state, action) lead, and with what
/// probability". nullopt means the source has no knowledge of the pair.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual std::optional<Distribution> successors(const EnvState& state, Action action) const = 0;
};

/// The simulator's own transition function.
class TrueTransitions final : public TransitionSource {
 public:
  explicit TrueTransitions(const GridWorld& world) : world_(&world) {}
  std::optional<Distribution> successors(const EnvState& state, Action action) const override {
    return world_->true_transition(state, action);
  }

 private:
  const GridWorld* world_;
};

/// Count-based estimate of the transition function learned from experience.
class EmpiricalModel {
 public:
  using Counts = std::map<EnvState, std::uint64_t>;
  using Table = std::map<std::pair<EnvState, Action>, Counts>;

  explicit EmpiricalModel(double smoothing = 0.0);

  double smoothing() const { return smoothing_; }

  void record(const EnvState& s, Action a, const EnvState& next, std::uint64_t count = 1);

  /// Normalized (smoothed) counts over observed successors; nullopt for a
  /// pair that was never observed. Successor step_count is s.step_count + 1.
  std::optional<std::map<EnvState, double>> predict(const EnvState& s, Action a) const;

  const Table& table() const { return table_; }
  std::uint64_t total_samples() const;

  friend bool operator==(const EmpiricalModel&, const EmpiricalModel&) = default;

 private:
  double smoothing_;
  Table table_;
};

/// Text artifact "tmodel v1": smoothing, then "state|action|successor|count" rows.
std::string serialize(const EmpiricalModel& m);
EmpiricalModel deserialize_tmodel(std::string_view text);
void save_tmodel(const EmpiricalModel& m, const std::string& path);
EmpiricalModel load_tmodel(const std::string& path);

/// Learned model as a TransitionSource. Rewards of predicted successors come
/// from the known reward function; unknown pairs are delegated to `fallback`
/// when one is given.
class LearnedTransitions final : public TransitionSource {
 public:
  LearnedTransitions(const EmpiricalModel& model, const GridWorld& world,
                     const TransitionSource* fallback = nullptr)
      : model_(&model), world_(&world), fallback_(fallback) {}

  std::optional<Distribution> successors(const EnvState& state, Action action) const override;

 private:
  const EmpiricalModel* model_;
  const GridWorld* world_;
  const TransitionSource* fallback_;
};

/// Collects `episodes` episodes of uniformly random actions into `model`.
void explore(const GridWorld& world, EmpiricalModel& model, int episodes, int max_steps, std::uint64_t seed);

/// Total-variation distance between two distributions over states.
double total_variation(const std::map<EnvState, double>& p, const std::map<EnvState, double>& q);
std::map<EnvState, double> as_map(const Distribution& d);

}  // namespace cxrl
