#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cxrl/rollout.hpp"
#include "cxrl/vocabulary.hpp"

namespace cxrl {

inline constexpr double kDefaultOutcomeThreshold = 0.3;

struct OutcomeMention {
  Outcome outcome;
  double probability;  // highest probability over the path

  friend bool operator==(const OutcomeMention&, const OutcomeMention&) = default;
};

struct PathSummary {
  Action dominant_action = Action::Up;
  double dominant_frequency = 0.0;
  // Concepts active at the steps where each action was taken.
  std::map<Action, std::set<Concept>> per_action_concepts;
  // Outcomes reaching the threshold at some step, in vocabulary order.
  std::vector<OutcomeMention> positive_outcomes;
  std::vector<OutcomeMention> negative_outcomes;
  int horizon = 0;  // number of steps summarized
};

/// Throws std::invalid_argument on an empty path or a threshold outside (0, 1].
PathSummary summarize(const PathSeq& path, const Vocabulary& vocabulary, double threshold = kDefaultOutcomeThreshold);

enum class ContrastMode { RelativeComplement, SymmetricDifference };
std::string_view to_string(ContrastMode m);
std::optional<ContrastMode> parse_contrast_mode(std::string_view name);

using TokenSet = std::set<std::string>;

struct ContrastSet {
  TokenSet fact_only;
  TokenSet foil_only;  // always empty for RelativeComplement
  ContrastMode mode = ContrastMode::SymmetricDifference;

  friend bool operator==(const ContrastSet&, const ContrastSet&) = default;
};

/// Concept ids active at any step plus outcome ids reaching `threshold` at any step.
TokenSet path_tokens(const PathSeq& path, double threshold = kDefaultOutcomeThreshold);

ContrastSet contrast(const PathSeq& fact, const PathSeq& foil, ContrastMode mode,
                     double threshold = kDefaultOutcomeThreshold);
ContrastSet contrast_tokens(const TokenSet& fact, const TokenSet& foil, ContrastMode mode);

enum class TemplateId { MostlyPerform, PerActionSituations, Contrastive };
std::string_view to_string(TemplateId t);

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSameConsequences = "Both choices lead to the same expected situations and outcomes.";

/// Deterministic text for a summary (MostlyPerform, PerActionSituations) or a
/// contrast (Contrastive). Items are listed in vocabulary order; empty lists
/// read "nothing notable". Throws RenderError for a token missing from the
/// vocabulary or a template that does not fit the input.
std::string render(const std::variant<PathSummary, ContrastSet>& input, TemplateId template_id,
                   const Vocabulary& vocabulary);

}  // namespace cxrl
