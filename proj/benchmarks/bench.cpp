#include <benchmark/benchmark.h>

#include "starkecho/fit.hpp"
#include "starkecho/scan.hpp"

using namespace starkecho;

namespace {

struct Fixture {
  EchoSequence seq;
  StarkPulse stark;
  EnsembleSpec ens;
  DipoleSet dip;
  LightField light;
  DetectionBasis basis;

  Fixture() {
    stark.shift = mhz_to_rad_us(0.5);
    stark.t_on = 0.3;
    light.e0 = two_pi;
    basis = DetectionBasis::standard(light);
  }
};

void bm_pulse_propagator(benchmark::State& state) {
  PulseParams p{cplx(two_pi, 1.3), 4.2, 0.25};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pulse_propagator(p));
  }
}
BENCHMARK(bm_pulse_propagator);

void bm_simulate_echo(benchmark::State& state) {
  Fixture f;
  f.ens.count = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_echo(f.seq, f.stark, f.ens, f.dip,
                                           f.light, f.basis));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_simulate_echo)->Arg(500)->Arg(2000);

void bm_scan_sample(benchmark::State& state) {
  Fixture f;
  f.ens.count = 500;
  StarkConfig cfg;
  ScanSettings set;
  set.samples = 2;
  set.x_min = 0.0;
  set.x_max = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan(f.seq, cfg, f.stark, f.ens, f.dip, f.light,
                                  f.basis, {}, {}, set));
  }
}
BENCHMARK(bm_scan_sample);

void bm_fit_trace(benchmark::State& state) {
  FitModelParams truth;
  truth.A = 0.9;
  truth.delta_s = 15.35;
  truth.phi = 0.3;
  truth.W = 0.85;
  ModulationTrace t;
  t.meta.voltage = 10.0;
  t.meta.plate_cm = 0.515;
  const int n = 121;
  t.x.resize(n);
  t.I_parallel.resize(n);
  for (int i = 0; i < n; ++i) {
    t.x[i] = 10.0 * i / (n - 1);
    t.I_parallel[i] = model_eval(truth, t.x[i], 10.0, 0.515);
  }
  t.I_perp = t.I_parallel;
  t.I_total = t.I_parallel;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_trace(t));
  }
}
BENCHMARK(bm_fit_trace);

}  // namespace

BENCHMARK_MAIN();
