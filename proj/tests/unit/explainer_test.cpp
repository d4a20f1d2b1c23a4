#include <doctest.h>

#include "cxrl/explainer.hpp"
#include "support.hpp"

using namespace cxrl;
using namespace cxrl::testing;

namespace {

PathStep step(Action a, std::initializer_list<Concept> concepts, std::initializer_list<std::pair<Outcome, double>> outcomes = {}) {
  PathStep s;
  s.action = a;
  for (Concept c : concepts) s.concepts[c] = true;
  for (const auto& [o, p] : outcomes) s.outcomes[o] = p;
  return s;
}

const std::vector<std::string> kAllTokens = {"next_to_forest", "next_to_wall", "next_to_trap", "next_to_monster",
                                             "in_forest",      "AtGoal",       "InTrap",       "NextToMonster",
                                             "InForest"};

}  // namespace

TEST_SUITE("explainer") {

TEST_CASE("dominant action and outcome thresholds") {
  PathSeq p;
  for (int i = 0; i < 4; ++i) p.steps.push_back(step(Action::Right, {Concept::NextToWall}));
  p.steps.push_back(step(Action::Up, {Concept::NextToForest}, {{Outcome::InTrap, 0.3}, {Outcome::AtGoal, 0.29}}));
  const PathSummary s = summarize(p, Vocabulary::defaults());
  CHECK(s.dominant_action == Action::Right);
  CHECK(s.dominant_frequency == doctest::Approx(0.8));
  CHECK(s.horizon == 5);
  REQUIRE(s.negative_outcomes.size() == 1);
  CHECK(s.negative_outcomes[0].outcome == Outcome::InTrap);
  CHECK(s.positive_outcomes.empty());
  CHECK(s.per_action_concepts.at(Action::Up) == std::set<Concept>{Concept::NextToForest});
}

TEST_CASE("dominant action ties go to the earlier action") {
  PathSeq p;
  p.steps = {step(Action::Right, {}), step(Action::Down, {})};
  CHECK(summarize(p, Vocabulary::defaults()).dominant_action == Action::Down);
}

TEST_CASE("summaries reject empty paths and bad thresholds") {
  PathSeq p;
  CHECK_THROWS_AS(summarize(p, Vocabulary::defaults()), std::invalid_argument);
  p.steps.push_back(step(Action::Up, {}));
  CHECK_THROWS_AS(summarize(p, Vocabulary::defaults(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(summarize(p, Vocabulary::defaults(), 1.5), std::invalid_argument);
}

TEST_CASE("MostlyPerform text") {
  PathSeq p;
  p.steps = {step(Action::Right, {Concept::NextToWall}), step(Action::Right, {}),
             step(Action::Up, {Concept::NextToTrap}, {{Outcome::AtGoal, 1.0}})};
  const Vocabulary v = Vocabulary::defaults();
  CHECK(render(summarize(p, v), TemplateId::MostlyPerform, v) ==
        "For the next 3 actions I will mostly move Right. During these actions, I will come across situations "
        "with: next to a wall, next to a trap. This will bring me: at the goal; but also: nothing notable.");
  CHECK(render(summarize(p, v), TemplateId::PerActionSituations, v) ==
        "For the next 3 actions I will move Up when in situations with: next to a trap; and Right when in "
        "situations with: next to a wall. This will bring me: at the goal; but also: nothing notable.");
  PathSeq one;
  one.steps = {step(Action::Left, {})};
  CHECK(render(summarize(one, v), TemplateId::MostlyPerform, v).starts_with("For the next action I will mostly move Left."));
}

TEST_CASE("contrast rendering") {
  const Vocabulary v = Vocabulary::defaults();
  CHECK(render(ContrastSet{}, TemplateId::Contrastive, v) == kSameConsequences);
  const ContrastSet c = contrast_tokens({"next_to_wall", "AtGoal"}, {"InTrap", "next_to_forest"},
                                        ContrastMode::SymmetricDifference);
  CHECK(render(c, TemplateId::Contrastive, v) ==
        "Compared to your suggestion, my own policy leads me to situations with: next to a wall; and to outcomes: "
        "at the goal, whereas if I did as you suggest, I would come across situations with: next to a forest; "
        "and outcomes: in a trap.");
  const ContrastSet r = contrast_tokens({"next_to_wall", "AtGoal"}, {"InTrap"}, ContrastMode::RelativeComplement);
  CHECK(render(r, TemplateId::Contrastive, v) ==
        "Compared to your suggestion, my own policy leads me to situations with: next to a wall; and to outcomes: "
        "at the goal.");
}

TEST_CASE("rendering errors") {
  const Vocabulary v = Vocabulary::defaults();
  const ContrastSet bad = contrast_tokens({"on_fire"}, {}, ContrastMode::SymmetricDifference);
  CHECK_THROWS_AS(render(bad, TemplateId::Contrastive, v), RenderError);
  PathSeq p;
  p.steps = {step(Action::Up, {})};
  CHECK_THROWS_AS(render(summarize(p, v), TemplateId::Contrastive, v), RenderError);
  CHECK_THROWS_AS(render(ContrastSet{}, TemplateId::MostlyPerform, v), RenderError);
  Vocabulary partial = v;
  partial.concepts.pop_back();
  p.steps = {step(Action::Up, {Concept::InForest})};
  CHECK_THROWS_AS(render(summarize(p, v), TemplateId::MostlyPerform, partial), RenderError);
}

TEST_CASE("contrast set algebra against a brute-force oracle") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    TokenSet fact;
    TokenSet foil;
    for (const auto& t : kAllTokens) {
      if (rng.uniform() < 0.5) fact.insert(t);
      if (rng.uniform() < 0.5) foil.insert(t);
    }
    const ContrastSet sym = contrast_tokens(fact, foil, ContrastMode::SymmetricDifference);
    const ContrastSet rel = contrast_tokens(fact, foil, ContrastMode::RelativeComplement);
    for (const auto& t : kAllTokens) {
      CHECK(sym.fact_only.contains(t) == (fact.contains(t) && !foil.contains(t)));
      CHECK(sym.foil_only.contains(t) == (foil.contains(t) && !fact.contains(t)));
    }
    CHECK(rel.fact_only == sym.fact_only);
    CHECK(rel.foil_only.empty());
    const ContrastSet self = contrast_tokens(fact, fact, ContrastMode::SymmetricDifference);
    CHECK(self.fact_only.empty());
    CHECK(self.foil_only.empty());
  }
}

TEST_CASE("path tokens") {
  PathSeq p;
  p.steps = {step(Action::Up, {Concept::NextToWall}, {{Outcome::InForest, 0.1}}),
             step(Action::Up, {}, {{Outcome::InTrap, 0.5}})};
  CHECK(path_tokens(p) == TokenSet{"next_to_wall", "InTrap"});
  CHECK(path_tokens(p, 0.05) == TokenSet{"next_to_wall", "InTrap", "InForest"});
  p.steps[1].outcome_known = false;
  CHECK(path_tokens(p) == TokenSet{"next_to_wall"});
  CHECK(contrast(p, p, ContrastMode::SymmetricDifference) == ContrastSet{});
  CHECK(parse_contrast_mode("complement") == ContrastMode::RelativeComplement);
  CHECK_FALSE(parse_contrast_mode("union").has_value());
}

}  // TEST_SUITE
