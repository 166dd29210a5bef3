#include <benchmark/benchmark.h>

#include <memory>

#include "supplybp/experiment.hpp"
#include "supplybp/gas.hpp"

using namespace supplybp;

namespace {

const SeInstance& ieee300(bool pmu) {
  static auto net = std::make_shared<const Network>(load_network(SUPPLYBP_FIXTURE_DIR "/ieee300.json"));
  static const auto truth = truth_angles(*net);
  static const SeInstance with = make_se_instance(net, truth, {true, 1e-3, 1e-6, 1});
  static const SeInstance without = make_se_instance(net, truth, {false, 1e-3, 1e-6, 1});
  return pmu ? with : without;
}

// Sweeps plus belief collection, the unit the convergence loop pays per
// iteration. Fv is run undamped and damped.
void BM_Iterations(benchmark::State& state) {
  const auto kind = static_cast<GraphKind>(state.range(0));
  const bool damped = state.range(1) != 0;
  const auto fg = build(kind, ieee300(true).spec);
  BpOptions o;
  o.max_iters = 50;  // undamped Fv stays finite this long
  o.tolerance = 1e-300;
  if (damped) o.damping = Damping::coin(7);
  std::size_t sweeps = 0;
  for (auto _ : state) {
    auto r = run(fg, o);
    sweeps += r.trace.sweeps();
    benchmark::DoNotOptimize(r.beliefs);
  }
  state.counters["per_iter"] =
      benchmark::Counter(static_cast<double>(sweeps), benchmark::Counter::kIsRate | benchmark::Counter::kInvert);
}
BENCHMARK(BM_Iterations)
    ->ArgNames({"graph", "damped"})
    ->Args({static_cast<int>(GraphKind::Ff), 0})
    ->Args({static_cast<int>(GraphKind::Fc), 0})
    ->Args({static_cast<int>(GraphKind::Fv), 0})
    ->Args({static_cast<int>(GraphKind::Fv), 1})
    ->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const auto& inst = ieee300(true);
  for (auto _ : state) benchmark::DoNotOptimize(exact_marginals(*inst.spec));
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

void BM_GasFc134(benchmark::State& state) {
  auto net = std::make_shared<const Network>(load_network(SUPPLYBP_FIXTURE_DIR "/gaslib134.json"));
  GnOptions o;
  o.single_anchor = true;
  o.inner.max_iters = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(run_modified_gn(net, o));
}
BENCHMARK(BM_GasFc134)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
