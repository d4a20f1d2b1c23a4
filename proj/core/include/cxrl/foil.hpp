#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cxrl/agent.hpp"
#include "cxrl/interpretable.hpp"
#include "cxrl/qtable.hpp"
#include "cxrl/transition_model.hpp"

namespace cxrl {

// ---------------------------------------------------------------------------
// Foil queries

/// Boolean expression over concept names: `next_to_wall and not (in_forest or next_to_trap)`.
class ConceptExpr {
 public:
  enum class Kind { Concept, Not, And, Or };

  static ConceptExpr atom(Concept c);
  static ConceptExpr negate(ConceptExpr operand);
  static ConceptExpr conjunction(ConceptExpr lhs, ConceptExpr rhs);
  static ConceptExpr disjunction(ConceptExpr lhs, ConceptExpr rhs);

  Kind kind() const { return kind_; }
  bool evaluate(const ConceptVec& c) const;
  /// DSL text with the minimum parentheses needed to parse back to the same tree.
  std::string to_string() const;

  friend bool operator==(const ConceptExpr&, const ConceptExpr&) = default;

 private:
  Kind kind_ = Kind::Concept;
  Concept concept_ = Concept::NextToForest;
  std::vector<ConceptExpr> operands_;
};

enum class Guard { None, Until, While };

struct FoilRule {
  Action action = Action::Up;
  Guard guard = Guard::None;
  std::optional<ConceptExpr> condition;  // set iff guard != None

  friend bool operator==(const FoilRule&, const FoilRule&) = default;
};

/// Ordered rules extracted from a "why not ...?" question.
struct FoilQuery {
  std::vector<FoilRule> rules;

  friend bool operator==(const FoilQuery&, const FoilQuery&) = default;
};

/// Parse or validation failure; column is 1-based within the query text.
class QueryError : public std::runtime_error {
 public:
  QueryError(std::size_t column, const std::string& what);
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Grammar: rule (';' rule)* [';'] with
///   rule := 'do' ACTION [('until' | 'while') expr]
///   expr := term ('or' term)*,  term := factor ('and' factor)*,
///   factor := 'not' factor | '(' expr ')' | CONCEPT
FoilQuery parse_query(std::string_view text);
/// Structured form: {"rules": [{"action": "Right", "until": "next_to_wall"}, {"action": "Up"}]}.
FoilQuery query_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FoilQuery& query);
std::string to_dsl(const FoilQuery& query);

struct ActiveFoil {
  std::optional<Action> action;  // nullopt once every rule is used up
  std::size_t cursor = 0;        // rule index for the next step
};

/// Evaluates the rule list at a state with concepts `c`, starting at rule
/// `cursor`. `until` rules are skipped once their condition holds, `while`
/// rules once it stops holding. An unguarded rule applies for one step, except
/// the last rule, which stays in effect.
ActiveFoil active_foil_action(const FoilQuery& query, const ConceptVec& c, std::size_t cursor);

// ---------------------------------------------------------------------------
// Imposed rewards

enum class FoilMode {
  // Imposed reward compensates the one-step reward gap R(s,a_f) - R(s,a_t).
  RewardGap,
  // Imposed reward compensates the learned value gap Q_t(s,a_t) - Q_t(s,a_f),
  // which makes the foil action win at the query state by construction.
  GuaranteeAdoption,
};

std::string_view to_string(FoilMode m);
std::optional<FoilMode> parse_foil_mode(std::string_view name);

using DistanceFn = std::function<double(const EnvState&, const EnvState&)>;
/// Manhattan distance between agent tiles.
double agent_distance(const EnvState& a, const EnvState& b);

struct FoilParams {
  double sigma = 2.0;
  double epsilon_margin = 0.1;
  double lambda_f = 0.9;
  std::optional<int> horizon;  // defaults to ceil(3 sigma)
  bool allow_short_horizon = false;
  int rollouts = 500;
  double alpha = 0.2;
  std::uint64_t seed = 0;
  FoilMode mode = FoilMode::RewardGap;
  DistanceFn distance = agent_distance;

  int effective_horizon() const;
  /// Throws std::invalid_argument naming the violated constraint.
  void validate(double lambda) const;
};

/// Gaussian radial basis weight exp(-(d/sigma)^2).
double rbf_weight(const EnvState& s_i, const EnvState& s_t, double sigma, const DistanceFn& distance = agent_distance);

using RewardFn = std::function<double(const EnvState&, Action)>;

/// Expected one-step reward of (s, a) under a transition source; nullopt if unknown.
std::optional<double> expected_reward(const TransitionSource& source, const EnvState& s, Action a);

/// (lambda_f / lambda) * w(s_i, s_t) * gap * (1 + epsilon).
double scaled_gap(double gap, const EnvState& s_i, const EnvState& s_t, const FoilParams& params, double lambda);

/// Imposed reward for taking foil action a_f where the learned policy takes a_t:
/// (lambda_f / lambda) * w(s_i, s_t) * [R(s_i, a_f) - R(s_i, a_t)] * (1 + epsilon).
double imposed_reward(const EnvState& s_i, Action a_f, Action a_t, const EnvState& s_t, const FoilParams& params,
                      const RewardFn& reward, double lambda);

struct FoilTraining {
  QTable q_i;
  int episodes = 0;
  int truncated_episodes = 0;  // stopped early by an unknown transition
};

/// Learns Q_I by simulated rollouts of at most `horizon` transitions from s_t.
/// Only (feature, foil action) pairs are ever updated, with discount lambda_f.
FoilTraining train_qi(const QTable& q_t, const FoilQuery& query, const EnvState& s_t, const FoilParams& params,
                      const GridWorld& world, const TransitionSource& transitions, const Translator& translator,
                      double lambda);

/// Q_f = Q_t + Q_I over the union of keys.
QTable compose_qf(const QTable& q_t, const QTable& q_i);

/// Greedy policy of Q_f over feature keys, using the agent's own selection rule.
std::function<Action(const FeatureVec&)> foil_policy(const QTable& q_f);

}  // namespace cxrl
