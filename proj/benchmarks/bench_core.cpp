#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "sparsecal/analysis.hpp"
#include "sparsecal/control_loop.hpp"
#include "sparsecal/estimators.hpp"
#include "sparsecal/optimizers.hpp"
#include "sparsecal/primitives.hpp"

using namespace sparsecal;

namespace {

ThreePointSample decay_sample() {
  ThreePointSample s;
  s.coords = ade_schedule(0.0, 10.0);
  for (int i = 0; i < 3; ++i) s.p[i] = 0.02 + 0.95 * std::exp(-s.coords[i] / 18.3);
  s.n = {1000, 1000, 1000};
  return s;
}

void BM_AdeRate(benchmark::State& st) {
  const auto s = decay_sample();
  for (auto _ : st) benchmark::DoNotOptimize(ade_rate(s));
}
BENCHMARK(BM_AdeRate);

void BM_SpePhase(benchmark::State& st) {
  ThreePointSample s;
  s.p = {0.2, 0.55, 0.8};
  s.n = {100, 100, 100};
  for (auto _ : st) benchmark::DoNotOptimize(spe_phase(s));
}
BENCHMARK(BM_SpePhase);

void BM_Bootstrap(benchmark::State& st) {
  const std::array<ShotRecord, 3> rec{{{900, 1000}, {600, 1000}, {350, 1000}}};
  const auto s = decay_sample();
  for (auto _ : st) {
    Rng rng(7);
    benchmark::DoNotOptimize(bootstrap(EstimatorId::ade_rate, rec, s.coords, static_cast<int>(st.range(0)), rng));
  }
}
BENCHMARK(BM_Bootstrap)->Arg(200)->Arg(2000);

void BM_NelderMeadQuadratic(benchmark::State& st) {
  NelderMeadOptions o;
  o.scale = {0.5, 0.5};
  o.x_tol = 1e-6;
  o.f_tol_rel = 1e-9;
  o.max_iter = 200;
  for (auto _ : st) {
    auto r = nelder_mead([](const std::vector<double>& x) {
      return (x[0] - 1) * (x[0] - 1) + 3 * (x[1] + 2) * (x[1] + 2);
    }, {0.0, 0.0}, o);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_NelderMeadQuadratic);

void BM_EstimateT1(benchmark::State& st) {
  const DeviceTruth t{};
  std::uint64_t seed = 1;
  for (auto _ : st) {
    Lab lab(t, LabConfig{}, seed++);
    benchmark::DoNotOptimize(estimate_t1(lab, 20.0, {}).estimate.value);
  }
}
BENCHMARK(BM_EstimateT1);

void BM_CampaignCycle(benchmark::State& st) {
  CampaignConfig cfg;
  cfg.drift = default_drift(cfg.device);
  Campaign camp(cfg);
  for (auto _ : st) benchmark::DoNotOptimize(camp.run_cycle().eps_b);
}
BENCHMARK(BM_CampaignCycle);

void BM_AllanDeviation(benchmark::State& st) {
  Rng rng(3);
  std::vector<double> v(static_cast<std::size_t>(st.range(0)));
  for (auto& x : v) x = rng.normal();
  const auto s = TimeSeries::uniform(v, 0.29);
  const auto taus = log_taus(s, 8);
  for (auto _ : st) benchmark::DoNotOptimize(allan_deviation(s, taus));
}
BENCHMARK(BM_AllanDeviation)->Arg(2000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
