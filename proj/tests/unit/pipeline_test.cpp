#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cxrl/pipeline.hpp"
#include "support.hpp"

using namespace cxrl;
using namespace cxrl::testing;

namespace {

struct Fixture {
  GridWorld world{layout_of("corridor_1x3.grid")};
  TrueTransitions truth{world};
  RuleTranslator translator{world.layout()};
  QTable q_t;

  Fixture() {
    LearningConfig c;
    c.episodes = 3000;
    c.epsilon_explore = 0.5;
    q_t = train(world.layout(), c).q;
  }
  ExplainContext context() const { return {world, q_t, truth, translator, 0.9}; }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("terminal start states are rejected") {
  const Fixture f;
  EnvState done = f.world.initial_state();
  done.status = Status::AtGoal;
  CHECK_THROWS_AS(explain(f.context(), parse_query("do Left"), done, {}), TerminalStateError);
}

TEST_CASE("guarantee mode makes the foil diverge at the first step") {
  const Fixture f;
  ExplainOptions o;
  o.foil.mode = FoilMode::GuaranteeAdoption;
  const Explanation e = explain(f.context(), parse_query("do Left"), f.world.initial_state(), o);
  REQUIRE_FALSE(e.foil_trajectory.steps.empty());
  CHECK(e.fact_trajectory.steps[0].action == Action::Right);
  CHECK(e.foil_trajectory.steps[0].action == Action::Left);
  CHECK(e.divergence_step == 0);
  CHECK_FALSE(e.partial);
  CHECK(e.fact_trajectory.final_state->status == Status::AtGoal);
  CHECK(e.contrast.fact_only.contains("AtGoal"));
  CHECK(e.contrast_text != kSameConsequences);
}

TEST_CASE("reward-gap mode with equal rewards keeps the learned policy") {
  const Fixture f;
  const Explanation e = explain(f.context(), parse_query("do Left"), f.world.initial_state(), {});
  CHECK_FALSE(e.divergence_step.has_value());
  CHECK(e.contrast_text == kSameConsequences);
}

TEST_CASE("payloads are deterministic and complete") {
  const Fixture f;
  ExplainOptions o;
  o.foil.mode = FoilMode::GuaranteeAdoption;
  const auto run = [&] { return to_payload(explain(f.context(), parse_query("do Left"), f.world.initial_state(), o), o); };
  const nlohmann::json a = run();
  CHECK(a.dump() == run().dump());
  for (const char* key : {"version", "template", "query", "start_state", "params", "text", "fact", "foil", "contrast",
                          "divergence_step", "foil_training", "partial"}) {
    CHECK(a.contains(key));
  }
  CHECK(a["query"] == "do Left");
  CHECK(a["params"]["horizon"] == 6);
  CHECK(a["fact"]["trajectory"].is_array());
  const std::string text = to_text(explain(f.context(), parse_query("do Left"), f.world.initial_state(), o), o);
  CHECK(text.starts_with("Question: why not \"do Left\"?\n"));
}

TEST_CASE("option overrides") {
  const ExplainOptions base;
  const ExplainOptions o = apply_overrides(
      base, nlohmann::json::parse(R"({"sigma": 1, "mode": "guarantee_adoption", "contrast": "complement",
                                     "simulation": "sampled", "simulation_seed": 4, "horizon": 3})"));
  CHECK(o.foil.sigma == 1.0);
  CHECK(o.foil.mode == FoilMode::GuaranteeAdoption);
  CHECK(o.contrast == ContrastMode::RelativeComplement);
  CHECK(std::get<Sampled>(o.simulation).seed == 4);
  CHECK(o.foil.effective_horizon() == 3);
  CHECK_THROWS_AS(apply_overrides(base, nlohmann::json::parse(R"({"gamma": 1})")), std::invalid_argument);
  CHECK_THROWS_AS(apply_overrides(base, nlohmann::json::parse(R"({"threshold": 0})")), std::invalid_argument);
  CHECK_THROWS_AS(apply_overrides(base, nlohmann::json::parse(R"({"mode": "magic"})")), std::invalid_argument);
  const nlohmann::json round = options_to_json(o);
  CHECK(options_to_json(apply_overrides(base, round)) == round);
}

TEST_CASE("learning config JSON") {
  const LearningConfig c = learning_config_from_json(nlohmann::json::parse(R"({"episodes": 10, "seed": 3})"));
  CHECK(c.episodes == 10);
  CHECK(c.seed == 3);
  CHECK(c.alpha == 0.1);
  CHECK_THROWS(learning_config_from_json(nlohmann::json::parse(R"({"gamma": 0.5})")));
  CHECK(learning_config_from_json(to_json(c)).episodes == 10);
}

}  // TEST_SUITE
