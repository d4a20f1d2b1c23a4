#pragma once

#include <array>
#include <optional>

#include "cxrl/gridworld.hpp"
#include "cxrl/transition_model.hpp"
#include "cxrl/vocabulary.hpp"

namespace cxrl {

/// Boolean state concepts, indexed by Concept.
struct ConceptVec {
  std::array<bool, kConceptCount> flags{};

  bool operator[](Concept c) const { return flags[static_cast<std::size_t>(c)]; }
  bool& operator[](Concept c) { return flags[static_cast<std::size_t>(c)]; }

  friend bool operator==(const ConceptVec&, const ConceptVec&) = default;
};

/// Outcome probabilities, indexed by Outcome. The outcomes are not mutually
/// exclusive, so the entries need not sum to one.
struct OutcomeVec {
  std::array<double, kOutcomeCount> probabilities{};

  double operator[](Outcome o) const { return probabilities[static_cast<std::size_t>(o)]; }
  double& operator[](Outcome o) { return probabilities[static_cast<std::size_t>(o)]; }

  friend bool operator==(const OutcomeVec&, const OutcomeVec&) = default;
};

/// Maps simulator states and actions to the user-facing vocabulary. The rule
/// based implementation below is the default; learned classifiers can be
/// plugged in by implementing this interface.
class Translator {
 public:
  virtual ~Translator() = default;

  /// State concepts of `state`.
  virtual ConceptVec concepts(const EnvState& state) const = 0;

  /// Probability of each outcome holding after taking `action` in `state`,
  /// according to `transitions`. nullopt when the source cannot predict the pair.
  virtual std::optional<OutcomeVec> outcomes(const EnvState& state, Action action,
                                             const TransitionSource& transitions) const = 0;
};

class RuleTranslator final : public Translator {
 public:
  explicit RuleTranslator(const GridLayout& layout) : layout_(&layout) {}

  ConceptVec concepts(const EnvState& state) const override;
  std::optional<OutcomeVec> outcomes(const EnvState& state, Action action,
                                     const TransitionSource& transitions) const override;

  /// Which outcome predicates hold in a (post-transition) state.
  std::array<bool, kOutcomeCount> outcome_flags(const EnvState& state) const;

 private:
  const GridLayout* layout_;
};

}  // namespace cxrl
