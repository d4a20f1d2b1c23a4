#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cxrl {

/// State concepts produced by the concept translator.
enum class Concept : std::uint8_t {
  NextToForest = 0,
  NextToWall = 1,
  NextToTrap = 2,
  NextToMonster = 3,
  InForest = 4,
};
inline constexpr std::size_t kConceptCount = 5;

/// Action outcomes produced by the outcome translator.
enum class Outcome : std::uint8_t { AtGoal = 0, InTrap = 1, NextToMonster = 2, InForest = 3 };
inline constexpr std::size_t kOutcomeCount = 4;

enum class Valence : std::uint8_t { Positive, Negative };

/// Identifier used in queries and token sets, e.g. "next_to_wall".
std::string_view concept_id(Concept c);
/// Identifier used in token sets, e.g. "AtGoal".
std::string_view outcome_id(Outcome o);
std::optional<Concept> parse_concept(std::string_view id);
std::optional<Outcome> parse_outcome(std::string_view id);

/// Display names and valence flags for the concept and outcome ids. The order
/// of the two lists is the order in which explanations enumerate them.
struct Vocabulary {
  struct ConceptEntry {
    Concept id;
    std::string phrase;
    friend bool operator==(const ConceptEntry&, const ConceptEntry&) = default;
  };
  struct OutcomeEntry {
    Outcome id;
    std::string phrase;
    Valence valence;
    friend bool operator==(const OutcomeEntry&, const OutcomeEntry&) = default;
  };

  std::vector<ConceptEntry> concepts;
  std::vector<OutcomeEntry> outcomes;

  static Vocabulary defaults();

  const ConceptEntry& entry(Concept c) const;
  const OutcomeEntry& entry(Outcome o) const;
  Valence valence(Outcome o) const { return entry(o).valence; }

  /// Position of a token ("next_to_wall", "AtGoal", ...) in rendering order:
  /// concepts first, then outcomes. nullopt for unknown tokens.
  std::optional<std::size_t> rank(std::string_view token) const;
  /// Display phrase for a token; throws std::out_of_range for unknown tokens.
  const std::string& phrase(std::string_view token) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

}  // namespace cxrl
