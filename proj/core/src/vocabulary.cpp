#include "cxrl/vocabulary.hpp"

#include <stdexcept>

namespace cxrl {
namespace {

constexpr std::array<std::string_view, kConceptCount> kConceptIds = {
    "next_to_forest", "next_to_wall", "next_to_trap", "next_to_monster", "in_forest"};
constexpr std::array<std::string_view, kOutcomeCount> kOutcomeIds = {"AtGoal", "InTrap",
                                                                     "NextToMonster", "InForest"};

}  // namespace

std::string_view concept_id(Concept c) { return kConceptIds[static_cast<std::size_t>(c)]; }
std::string_view outcome_id(Outcome o) { return kOutcomeIds[static_cast<std::size_t>(o)]; }

std::optional<Concept> parse_concept(std::string_view id) {
  for (std::size_t i = 0; i < kConceptIds.size(); ++i) {
    if (kConceptIds[i] == id) return static_cast<Concept>(i);
  }
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view id) {
  for (std::size_t i = 0; i < kOutcomeIds.size(); ++i) {
    if (kOutcomeIds[i] == id) return static_cast<Outcome>(i);
  }
  return std::nullopt;
}

Vocabulary Vocabulary::defaults() {
  Vocabulary v;
  v.concepts = {
      {Concept::NextToForest, "next to a forest"},
      {Concept::NextToWall, "next to a wall"},
      {Concept::NextToTrap, "next to a trap"},
      {Concept::NextToMonster, "next to the monster"},
      {Concept::InForest, "in the forest"},
  };
  v.outcomes = {
      {Outcome::AtGoal, "at the goal", Valence::Positive},
      {Outcome::InTrap, "in a trap", Valence::Negative},
      {Outcome::NextToMonster, "next to the monster", Valence::Negative},
      {Outcome::InForest, "in the forest", Valence::Negative},
  };
  return v;
}

const Vocabulary::ConceptEntry& Vocabulary::entry(Concept c) const {
  for (const auto& e : concepts) {
    if (e.id == c) return e;
  }
  throw std::out_of_range("vocabulary has no entry for concept " + std::string(concept_id(c)));
}

const Vocabulary::OutcomeEntry& Vocabulary::entry(Outcome o) const {
  for (const auto& e : outcomes) {
    if (e.id == o) return e;
  }
  throw std::out_of_range("vocabulary has no entry for outcome " + std::string(outcome_id(o)));
}

std::optional<std::size_t> Vocabulary::rank(std::string_view token) const {
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (concept_id(concepts[i].id) == token) return i;
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcome_id(outcomes[i].id) == token) return concepts.size() + i;
  }
  return std::nullopt;
}

const std::string& Vocabulary::phrase(std::string_view token) const {
  for (const auto& e : concepts) {
    if (concept_id(e.id) == token) return e.phrase;
  }
  for (const auto& e : outcomes) {
    if (outcome_id(e.id) == token) return e.phrase;
  }
  throw std::out_of_range("unknown token '" + std::string(token) + "'");
}

}  // namespace cxrl
