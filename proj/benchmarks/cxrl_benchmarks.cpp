#include <benchmark/benchmark.h>

#include <nlohmann/json.hpp>

#include "cxrl/pipeline.hpp"

using namespace cxrl;

namespace {

GridLayout canonical() { return load_layout_file(std::string(CXRL_DATA_DIR) + "/canonical.grid"); }

const QTable& trained_q() {
  static const QTable q = [] {
    LearningConfig c;
    c.episodes = 5000;
    return train(canonical(), c).q;
  }();
  return q;
}

void BM_Train(benchmark::State& state) {
  const GridLayout layout = canonical();
  LearningConfig c;
  c.episodes = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(layout, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Train)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ValueIteration(benchmark::State& state) {
  const GridWorld w(canonical());
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(w, 0.9, 1e-8));
}
BENCHMARK(BM_ValueIteration)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const GridWorld w(canonical());
  const TrueTransitions truth(w);
  const Policy pi = greedy_policy(trained_q(), w);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(w.initial_state(), pi, n, truth, MostProbable{}));
}
BENCHMARK(BM_Simulate)->Arg(6)->Arg(64);

void BM_TrainQi(benchmark::State& state) {
  const GridWorld w(canonical());
  const TrueTransitions truth(w);
  const RuleTranslator t(w.layout());
  const FoilQuery q = parse_query("do Right until next_to_wall; do Up");
  FoilParams p;
  p.rollouts = static_cast<int>(state.range(0));
  EnvState s = w.initial_state();
  s.agent = {1, 5};
  for (auto _ : state) benchmark::DoNotOptimize(train_qi(trained_q(), q, s, p, w, truth, t, 0.9));
}
BENCHMARK(BM_TrainQi)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_Explain(benchmark::State& state) {
  const GridWorld w(canonical());
  const TrueTransitions truth(w);
  const RuleTranslator t(w.layout());
  const ExplainContext ctx{w, trained_q(), truth, t, 0.9};
  const FoilQuery q = parse_query("do Right until next_to_wall; do Up");
  EnvState s = w.initial_state();
  s.agent = {1, 5};
  ExplainOptions o;
  o.foil.mode = FoilMode::GuaranteeAdoption;
  for (auto _ : state) benchmark::DoNotOptimize(to_payload(explain(ctx, q, s, o), o));
}
BENCHMARK(BM_Explain)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
