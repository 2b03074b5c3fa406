#include <benchmark/benchmark.h>

#include "trampoline/constants.hpp"
#include "trampoline/estimate.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/synth.hpp"

namespace {

using namespace trampoline;

TimeSeries envelope_record(std::size_t samples) {
  const mech::MechMode m = mech::design_point().inner;
  const double fwhm = m.f0_hz / m.q;
  synth::BrownianOptions o;
  o.sample_rate_hz = 32.0 * fwhm;
  o.duration_s = static_cast<double>(samples) / o.sample_rate_hz;
  o.center_freq_hz = m.f0_hz;
  o.seed = 1;
  return synth::synth_brownian(m, o);
}

void BM_SynthBrownian(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(envelope_record(static_cast<std::size_t>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthBrownian)->Arg(1 << 14)->Arg(1 << 17)->Arg(1 << 20);

void BM_Welch(benchmark::State& state) {
  const TimeSeries ts = envelope_record(1 << 18);
  estimate::WelchOptions o;
  o.segment_len = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate::welch_psd(ts, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ts.size()));
}
BENCHMARK(BM_Welch)->Arg(1 << 10)->Arg(1 << 13)->Arg(1 << 16);

void BM_AnalyzePeak(benchmark::State& state) {
  const TimeSeries ts = envelope_record(160'000);
  for (auto _ : state) benchmark::DoNotOptimize(estimate::analyze_peak(ts));
}
BENCHMARK(BM_AnalyzePeak)->Unit(benchmark::kMillisecond);

void BM_FitLorentzian(benchmark::State& state) {
  const TimeSeries ts = envelope_record(160'000);
  estimate::WelchOptions o;
  o.segment_len = 1 << 12;
  const auto spec = estimate::welch_psd(ts, o);
  for (auto _ : state) benchmark::DoNotOptimize(estimate::fit_lorentzian(spec));
}
BENCHMARK(BM_FitLorentzian)->Unit(benchmark::kMicrosecond);

void BM_ChainTransfer(benchmark::State& state) {
  const mech::NestedModel model = mech::design_point();
  double f = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mech::chain_transfer(constants::kTwoPi * f, model));
    f = f > 1e5 ? 1.0 : f * 1.01;
  }
}
BENCHMARK(BM_ChainTransfer);

}  // namespace

BENCHMARK_MAIN();
