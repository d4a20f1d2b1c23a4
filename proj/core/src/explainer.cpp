#include "cxrl/explainer.hpp"

#include <algorithm>
#include <array>
#include <iterator>

namespace cxrl {

PathSummary summarize(const PathSeq& path, const Vocabulary& vocabulary, double threshold) {
  if (path.steps.empty()) throw std::invalid_argument("cannot summarize an empty path");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");

  PathSummary summary;
  summary.horizon = static_cast<int>(path.steps.size());

  std::array<int, 4> counts{};
  std::array<double, kOutcomeCount> peak{};
  for (const auto& step : path.steps) {
    ++counts[static_cast<std::size_t>(step.action)];
    auto& concepts = summary.per_action_concepts[step.action];
    for (std::size_t c = 0; c < kConceptCount; ++c) {
      if (step.concepts.flags[c]) concepts.insert(static_cast<Concept>(c));
    }
    if (!step.outcome_known) continue;
    for (std::size_t o = 0; o < kOutcomeCount; ++o) peak[o] = std::max(peak[o], step.outcomes.probabilities[o]);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  summary.dominant_action = kActions[best];
  summary.dominant_frequency = double(counts[best]) / double(path.steps.size());

  for (const auto& entry : vocabulary.outcomes) {
    const double p = peak[static_cast<std::size_t>(entry.id)];
    if (p < threshold) continue;
    auto& bucket = entry.valence == Valence::Positive ? summary.positive_outcomes : summary.negative_outcomes;
    bucket.push_back({entry.id, p});
  }
  return summary;
}

std::string_view to_string(ContrastMode m) {
  return m == ContrastMode::RelativeComplement ? "RelativeComplement" : "SymmetricDifference";
}

std::optional<ContrastMode> parse_contrast_mode(std::string_view name) {
  if (name == "complement" || name == "RelativeComplement") return ContrastMode::RelativeComplement;
  if (name == "symmetric" || name == "SymmetricDifference") return ContrastMode::SymmetricDifference;
  return std::nullopt;
}

std::string_view to_string(TemplateId t) {
  switch (t) {
    case TemplateId::MostlyPerform: return "MostlyPerform";
    case TemplateId::PerActionSituations: return "PerActionSituations";
    case TemplateId::Contrastive: return "Contrastive";
  }
  return "?";
}

TokenSet path_tokens(const PathSeq& path, double threshold) {
  TokenSet tokens;
  for (const auto& step : path.steps) {
    for (std::size_t c = 0; c < kConceptCount; ++c) {
      if (step.concepts.flags[c]) tokens.emplace(concept_id(static_cast<Concept>(c)));
    }
    if (!step.outcome_known) continue;
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      if (step.outcomes.probabilities[o] >= threshold) tokens.emplace(outcome_id(static_cast<Outcome>(o)));
    }
  }
  return tokens;
}

ContrastSet contrast_tokens(const TokenSet& fact, const TokenSet& foil, ContrastMode mode) {
  ContrastSet out;
  out.mode = mode;
  std::set_difference(fact.begin(), fact.end(), foil.begin(), foil.end(),
                      std::inserter(out.fact_only, out.fact_only.end()));
  if (mode == ContrastMode::SymmetricDifference) {
    std::set_difference(foil.begin(), foil.end(), fact.begin(), fact.end(),
                        std::inserter(out.foil_only, out.foil_only.end()));
  }
  return out;
}

ContrastSet contrast(const PathSeq& fact, const PathSeq& foil, ContrastMode mode, double threshold) {
  if (fact.steps.empty() || foil.steps.empty()) throw std::invalid_argument("cannot contrast an empty path");
  return contrast_tokens(path_tokens(fact, threshold), path_tokens(foil, threshold), mode);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

constexpr std::string_view kNothing = "nothing notable";

std::string join(const std::vector<std::string>& items) {
  if (items.empty()) return std::string(kNothing);
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

std::vector<std::string> concept_phrases(const std::set<Concept>& concepts, const Vocabulary& vocabulary) {
  std::vector<std::string> out;
  for (const auto& entry : vocabulary.concepts) {
    if (concepts.contains(entry.id)) out.push_back(entry.phrase);
  }
  if (out.size() != concepts.size()) throw RenderError("a concept in the summary is not in the vocabulary");
  return out;
}

std::vector<std::string> outcome_phrases(const std::vector<OutcomeMention>& outcomes, const Vocabulary& vocabulary) {
  std::vector<std::string> out;
  for (const auto& m : outcomes) out.push_back(vocabulary.entry(m.outcome).phrase);
  return out;
}

std::string actions_phrase(int horizon) {
  return horizon == 1 ? "For the next action" : "For the next " + std::to_string(horizon) + " actions";
}

std::string outcome_sentence(const PathSummary& s, const Vocabulary& vocabulary) {
  return "This will bring me: " + join(outcome_phrases(s.positive_outcomes, vocabulary)) +
         "; but also: " + join(outcome_phrases(s.negative_outcomes, vocabulary)) + ".";
}

std::string render_mostly(const PathSummary& s, const Vocabulary& vocabulary) {
  std::set<Concept> all;
  for (const auto& [action, concepts] : s.per_action_concepts) all.insert(concepts.begin(), concepts.end());
  return actions_phrase(s.horizon) + " I will mostly move " + std::string(to_string(s.dominant_action)) +
         ". During these actions, I will come across situations with: " + join(concept_phrases(all, vocabulary)) +
         ". " + outcome_sentence(s, vocabulary);
}

std::string render_per_action(const PathSummary& s, const Vocabulary& vocabulary) {
  std::string clauses;
  for (const auto& [action, concepts] : s.per_action_concepts) {
    if (!clauses.empty()) clauses += "; and ";
    clauses += std::string(to_string(action)) + " when in situations with: " + join(concept_phrases(concepts, vocabulary));
  }
  return actions_phrase(s.horizon) + " I will move " + clauses + ". " + outcome_sentence(s, vocabulary);
}

// Splits tokens into concept and outcome phrases, each in vocabulary order.
std::pair<std::vector<std::string>, std::vector<std::string>> token_phrases(const TokenSet& tokens,
                                                                           const Vocabulary& vocabulary) {
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& token : tokens) {
    const auto rank = vocabulary.rank(token);
    if (!rank) throw RenderError("token '" + token + "' is not in the vocabulary");
    ranked.emplace_back(*rank, token);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> concepts;
  std::vector<std::string> outcomes;
  for (const auto& [rank, token] : ranked) {
    (rank < vocabulary.concepts.size() ? concepts : outcomes).push_back(vocabulary.phrase(token));
  }
  return {concepts, outcomes};
}

std::string render_contrast(const ContrastSet& c, const Vocabulary& vocabulary) {
  const auto [fact_concepts, fact_outcomes] = token_phrases(c.fact_only, vocabulary);
  const auto [foil_concepts, foil_outcomes] = token_phrases(c.foil_only, vocabulary);
  if (c.fact_only.empty() && c.foil_only.empty()) return std::string(kSameConsequences);
  std::string text = "Compared to your suggestion, my own policy leads me to situations with: " + join(fact_concepts) +
                     "; and to outcomes: " + join(fact_outcomes);
  if (c.mode == ContrastMode::SymmetricDifference) {
    text += ", whereas if I did as you suggest, I would come across situations with: " + join(foil_concepts) +
            "; and outcomes: " + join(foil_outcomes);
  }
  return text + ".";
}

}  // namespace

std::string render(const std::variant<PathSummary, ContrastSet>& input, TemplateId template_id,
                   const Vocabulary& vocabulary) {
  if (template_id == TemplateId::Contrastive) {
    const auto* c = std::get_if<ContrastSet>(&input);
    if (c == nullptr) throw RenderError("the Contrastive template renders a contrast set");
    return render_contrast(*c, vocabulary);
  }
  const auto* s = std::get_if<PathSummary>(&input);
  if (s == nullptr) throw RenderError("summary templates render a path summary");
  try {
    return template_id == TemplateId::MostlyPerform ? render_mostly(*s, vocabulary) : render_per_action(*s, vocabulary);
  } catch (const std::out_of_range& e) {
    throw RenderError(e.what());
  }
}

}  // namespace cxrl
