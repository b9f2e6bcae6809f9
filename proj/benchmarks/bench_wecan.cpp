#include <benchmark/benchmark.h>

#include <memory>

#include "wecan/fit.hpp"
#include "wecan/init.hpp"
#include "wecan/simgen.hpp"

using namespace wecan;

namespace {

// A simulated network with a fitted-looking starting point, built once per size.
struct Workload {
  std::unique_ptr<Simulation> sim;
  std::unique_ptr<FitContext> ctx;
  ModelParams params;
  VariationalState state;
};

Workload make_workload(std::size_t n, std::size_t M) {
  SimConfig c = paper_preset();
  c.n_nodes = n;
  c.n_edges_target = M;
  c.seed = 5;
  Workload w;
  w.sim = std::make_unique<Simulation>(generate(c));
  PriorConfig pr;
  pr.p = 2;
  pr.K_max = 10;
  pr = data_scaled_prior(pr, n);
  w.ctx = std::make_unique<FitContext>(w.sim->network, WeightFamily(),
                                       NoiseLaw(default_noise_rate(w.sim->network)), pr);
  FitOptions opt;
  opt.max_outer = 5;
  InitResult init = initialize(*w.ctx, opt, 1);
  w.params = init.params;
  w.state = e_step(*w.ctx, w.params, initial_state(*w.ctx, w.params, init.resp)).state;
  return w;
}

void BM_Gradients(benchmark::State& st) {
  Workload w = make_workload(400, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(m_step_gradients(*w.ctx, w.params, w.state));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Gradients)->RangeMultiplier(2)->Range(5000, 40000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_EStep(benchmark::State& st) {
  Workload w = make_workload(400, static_cast<std::size_t>(st.range(0)));
  EStepOptions opt;
  opt.max_iter = 1;
  for (auto _ : st) benchmark::DoNotOptimize(e_step(*w.ctx, w.params, w.state, opt));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_EStep)->RangeMultiplier(2)->Range(5000, 40000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_MStep(benchmark::State& st) {
  Workload w = make_workload(400, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(m_step(*w.ctx, w.params, w.state));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_MStep)->RangeMultiplier(2)->Range(5000, 40000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_FitSingle(benchmark::State& st) {
  Workload w = make_workload(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
  FitOptions opt;
  opt.threads = 1;
  for (auto _ : st) benchmark::DoNotOptimize(fit_single(*w.ctx, opt, 1));
}
BENCHMARK(BM_FitSingle)
    ->Args({150, 1200})
    ->Args({400, 7065})
    ->Args({400, 20000})
    ->Unit(benchmark::kSecond)
    ->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
