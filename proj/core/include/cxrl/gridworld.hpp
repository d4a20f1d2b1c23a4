#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cxrl/random.hpp"
#include "cxrl/vocabulary.hpp"

namespace cxrl {

struct Coord {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Coord&, const Coord&) = default;
};

inline int manhattan(Coord a, Coord b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

/// The four moves, in canonical order. Ties are always broken towards the
/// earlier action.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Action, 4> kActions = {Action::Up, Action::Down, Action::Left,
                                                   Action::Right};

std::string_view to_string(Action a);
/// Case-insensitive; returns nullopt for anything that is not one of the four moves.
std::optional<Action> parse_action(std::string_view name);
Coord offset(Action a);

/// Inclusive rectangle of tiles.
struct Rect {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  bool contains(Coord c) const { return c.x >= x1 && c.x <= x2 && c.y >= y1 && c.y <= y2; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct RewardConfig {
  double step_penalty = -1.0;
  double forest_penalty = -5.0;
  double terminal_penalty = -50.0;
  double goal_reward = 50.0;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct GridLayout {
  int width = 0;
  int height = 0;
  Coord start;
  Coord goal;
  std::set<Coord> forests;
  std::set<Coord> traps;
  std::optional<Coord> monster_start;
  // Region where traps and the monster live. Absent means no such region.
  std::optional<Rect> zone;
  double p_intent = 0.8;
  RewardConfig rewards;
  Vocabulary vocabulary;

  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool in_zone(Coord c) const { return zone && zone->contains(c); }
  bool is_forest(Coord c) const { return forests.contains(c); }
  bool is_trap(Coord c) const { return traps.contains(c); }
};

/// Thrown by load_layout for malformed text; line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Thrown when a layout parses but breaks one of its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GridLayout load_layout(std::string_view text);
GridLayout load_layout_file(const std::string& path);
/// Serializes a layout back to the grid file format. load_layout(to_grid_text(l)) == l.
std::string to_grid_text(const GridLayout& layout);
void validate(const GridLayout& layout);

enum class Status : std::uint8_t { Running = 0, AtGoal = 1, InTrap = 2, CaughtByMonster = 3 };

std::string_view to_string(Status s);
std::optional<Status> parse_status(std::string_view name);

/// Full simulator state. step_count is bookkeeping only: it does not take part
/// in equality, ordering or hashing, so two visits of the same configuration
/// at different times are the same state.
struct EnvState {
  Coord agent;
  std::optional<Coord> monster;
  Status status = Status::Running;
  std::uint32_t step_count = 0;

  bool terminated() const { return status != Status::Running; }

  friend bool operator==(const EnvState& a, const EnvState& b) {
    return a.agent == b.agent && a.monster == b.monster && a.status == b.status;
  }
  friend std::strong_ordering operator<=>(const EnvState& a, const EnvState& b) {
    if (auto c = a.agent <=> b.agent; c != 0) return c;
    if (auto c = a.monster <=> b.monster; c != 0) return c;
    return a.status <=> b.status;
  }
};

std::string encode_state(const EnvState& s);
/// Inverse of encode_state (step_count is not encoded and comes back as 0).
EnvState decode_state(std::string_view text);

/// The agent-side state vector: coordinates plus adjacent-hazard flags.
struct FeatureVec {
  int x = 0;
  int y = 0;
  bool adj_forest = false;
  bool adj_monster = false;
  bool adj_trap = false;

  friend auto operator<=>(const FeatureVec&, const FeatureVec&) = default;
};

struct FeatureVecHash {
  std::size_t operator()(const FeatureVec& f) const noexcept;
};

/// One branch of a transition distribution.
struct Successor {
  EnvState state;
  double probability = 0.0;
  double reward = 0.0;
};

using Distribution = std::vector<Successor>;

/// Grid world dynamics: reward, exact transition distribution and sampling.
class GridWorld {
 public:
  explicit GridWorld(GridLayout layout);

  const GridLayout& layout() const { return layout_; }

  EnvState initial_state() const;

  /// Exact categorical distribution over successors, sorted by state order,
  /// identical successors merged. Terminated states map to themselves.
  Distribution true_transition(const EnvState& state, Action action) const;

  /// Samples one transition. A terminated state is returned unchanged with reward 0.
  std::pair<EnvState, double> step(const EnvState& state, Action action, Rng& rng) const;

  /// Reward for landing in `next` from a running state.
  double reward_for(const EnvState& next) const;

  FeatureVec features(const EnvState& state) const;

  /// Status a configuration ends up in after the agent has moved.
  Status classify(Coord agent, const std::optional<Coord>& monster) const;

 private:
  // Deterministic post-processing once the agent tile is fixed.
  EnvState resolve(const EnvState& from, Coord agent_tile) const;

  GridLayout layout_;
};

/// Picks a successor from a distribution given u in [0,1).
const Successor& sample(const Distribution& dist, double u);

}  // namespace cxrl
