#include "cxrl/interpretable.hpp"

namespace cxrl {

ConceptVec RuleTranslator::concepts(const EnvState& state) const {
  const GridLayout& l = *layout_;
  ConceptVec c;
  for (Action a : kActions) {
    const Coord d = offset(a);
    const Coord n{state.agent.x + d.x, state.agent.y + d.y};
    if (!l.in_bounds(n)) {
      c[Concept::NextToWall] = true;
      continue;
    }
    if (l.is_forest(n)) c[Concept::NextToForest] = true;
    if (l.is_trap(n)) c[Concept::NextToTrap] = true;
  }
  c[Concept::NextToMonster] = state.monster && manhattan(state.agent, *state.monster) <= 1;
  c[Concept::InForest] = l.is_forest(state.agent);
  return c;
}

std::array<bool, kOutcomeCount> RuleTranslator::outcome_flags(const EnvState& state) const {
  std::array<bool, kOutcomeCount> flags{};
  flags[static_cast<std::size_t>(Outcome::AtGoal)] = state.status == Status::AtGoal;
  flags[static_cast<std::size_t>(Outcome::InTrap)] = state.status == Status::InTrap;
  flags[static_cast<std::size_t>(Outcome::NextToMonster)] =
      state.monster && manhattan(state.agent, *state.monster) <= 1;
  flags[static_cast<std::size_t>(Outcome::InForest)] = layout_->is_forest(state.agent);
  return flags;
}

std::optional<OutcomeVec> RuleTranslator::outcomes(const EnvState& state, Action action,
                                                   const TransitionSource& transitions) const {
  const auto dist = transitions.successors(state, action);
  if (!dist) return std::nullopt;
  OutcomeVec out;
  for (const auto& succ : *dist) {
    const auto flags = outcome_flags(succ.state);
    for (std::size_t i = 0; i < kOutcomeCount; ++i) {
      if (flags[i]) out.probabilities[i] += succ.probability;
    }
  }
  return out;
}

}  // namespace cxrl
