#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <ostream>
#include <string>

#include "trampoline/cavity.hpp"
#include "trampoline/constants.hpp"
#include "trampoline/dsp.hpp"
#include "trampoline/errors.hpp"
#include "trampoline/estimate.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/servo.hpp"
#include "trampoline/synth.hpp"

namespace trampoline::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using constants::kTwoPi;

namespace {

constexpr double kMaxSamples = 2e8;

std::string printf_string(const char* fmt, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

void say(const Context& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

ResultDoc new_doc(const Context& ctx, std::string command) {
  ResultDoc doc;
  doc.command = std::move(command);
  doc.config = ctx.config.to_json();
  return doc;
}

fs::path finish(const Context& ctx, const ResultDoc& doc, const std::string& name) {
  const fs::path path = ctx.out_dir / (name + ".json");
  write_result_doc(path, doc);
  return path;
}

std::string record_name(const Context& ctx, const std::string& stem) {
  return stem + std::string(io::extension(ctx.format));
}

const mech::MechMode& pick_mode(const Config& cfg, const std::string& which) {
  return which == "outer" ? cfg.device.outer : cfg.device.inner;
}

void check_size(double fs, double duration, const char* what) {
  if (fs * duration > kMaxSamples) {
    throw ConfigError(std::string(what) + ": record would hold " + printf_string("%.3g", fs * duration) +
                      " samples; shorten it or use envelope mode");
  }
}

synth::BrownianOptions brownian_options(const Config& cfg) {
  const mech::MechMode& m = pick_mode(cfg, cfg.brownian.mode);
  const double fwhm = m.f0_hz / m.q;
  synth::BrownianOptions o;
  o.seed = cfg.seed;
  o.noise_floor = cfg.brownian.noise_floor_m2_per_hz;
  o.duration_s = cfg.brownian.duration_s > 0.0 ? cfg.brownian.duration_s : 2000.0 / fwhm;
  if (cfg.brownian.envelope) {
    o.center_freq_hz = m.f0_hz;
    o.sample_rate_hz = cfg.brownian.sample_rate_hz > 0.0 ? cfg.brownian.sample_rate_hz : 32.0 * fwhm;
  } else {
    o.sample_rate_hz = cfg.brownian.sample_rate_hz > 0.0 ? cfg.brownian.sample_rate_hz : 8.0 * m.f0_hz;
  }
  check_size(o.sample_rate_hz, o.duration_s, "synthesis.brownian");
  return o;
}

struct OpticalSettings {
  double sample_rate_hz;
  double duration_s;
};

OpticalSettings optical_settings(const Config& cfg) {
  const double tau = cfg.cavity.decay_tau();
  OpticalSettings s{cfg.ringdown_optical.sample_rate_hz > 0.0 ? cfg.ringdown_optical.sample_rate_hz : 200.0 / tau,
                    cfg.ringdown_optical.duration_s > 0.0 ? cfg.ringdown_optical.duration_s : 12.0 * tau};
  check_size(s.sample_rate_hz, s.duration_s, "synthesis.ringdown_optical");
  return s;
}

synth::MechRingdownOptions mech_ringdown_options(const Config& cfg) {
  const mech::MechMode& m = pick_mode(cfg, cfg.ringdown_mech.mode);
  synth::MechRingdownOptions o;
  o.seed = cfg.seed;
  o.x0_m = cfg.ringdown_mech.x0_m;
  o.snr = cfg.ringdown_mech.snr;
  o.envelope_rate_hz = cfg.ringdown_mech.envelope_rate_hz;
  o.sample_rate_hz = cfg.ringdown_mech.sample_rate_hz > 0.0 ? cfg.ringdown_mech.sample_rate_hz : 8.0 * m.f0_hz;
  o.duration_s = cfg.ringdown_mech.duration_s > 0.0 ? cfg.ringdown_mech.duration_s : 3.0 * 2.0 * m.q / m.omega0();
  check_size(o.sample_rate_hz, o.duration_s, "synthesis.ringdown_mech");
  return o;
}

synth::SweepOptions sweep_options(const Config& cfg) {
  synth::SweepOptions o;
  o.seed = cfg.seed;
  o.amplitude_m = cfg.sweep.amplitude_m;
  o.cycles_per_point = cfg.sweep.cycles_per_point;
  o.samples_per_cycle = cfg.sweep.samples_per_cycle;
  o.base_noise_m = cfg.sweep.base_noise_m;
  o.response_noise_m = cfg.sweep.response_noise_m;
  o.base_scale = cfg.sweep.base_scale;
  o.piezo_rolloff_hz = cfg.sweep.piezo_rolloff_hz;
  return o;
}

std::vector<double> sweep_freqs(const Config& cfg) {
  return synth::log_spaced(cfg.sweep.f_min_hz, cfg.sweep.f_max_hz, cfg.sweep.points_per_decade);
}

estimate::PeakAnalysisOptions peak_options(const Config& cfg) {
  estimate::PeakAnalysisOptions o;
  o.window = dsp::window_from_name(cfg.analysis.welch_window);
  o.overlap = cfg.analysis.welch_overlap;
  o.segment_s = cfg.analysis.welch_segment_s;
  o.fit_window_fwhm = cfg.analysis.fit_window_fwhm;
  o.weighting = cfg.analysis.weighting == "uniform" ? estimate::PeakWeighting::kUniform
                                                   : estimate::PeakWeighting::kRelative;
  return o;
}

estimate::TransferOptions transfer_options(const Config& cfg) {
  estimate::TransferOptions o;
  o.bins_per_decade = cfg.analysis.bins_per_decade;
  o.dc_cutoff_hz = cfg.analysis.dc_cutoff_fraction * cfg.device.outer.f0_hz;
  o.detection_threshold = cfg.analysis.detection_threshold;
  return o;
}

json series_summary(const TimeSeries& ts) {
  return {{"samples", ts.size()},
          {"sample_rate_hz", ts.sample_rate_hz},
          {"duration_s", ts.duration()},
          {"t0_s", ts.t0_s},
          {"center_freq_hz", ts.center_freq_hz},
          {"calibration_m_per_unit", ts.calibration},
          {"complex_envelope", ts.is_complex()},
          {"warnings", ts.warnings}};
}

// Runs fn over every input concurrently and returns results in input order.
template <typename Fn>
auto map_inputs(const std::vector<fs::path>& inputs, Fn fn) {
  using R = decltype(fn(inputs.front()));
  std::vector<std::future<R>> jobs;
  jobs.reserve(inputs.size());
  for (const auto& p : inputs) jobs.push_back(std::async(std::launch::async, fn, p));
  std::vector<R> out;
  out.reserve(inputs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

TimeSeries load_series(const fs::path& p) { return io::read_timeseries(p).series; }

std::string scaled_param(const char* label, const estimate::FitParam& p, double scale, const char* unit) {
  estimate::FitParam s = p;
  s.value *= scale;
  s.sigma *= scale;
  return format_param(label, s) + " " + unit;
}

std::string converged_note(const estimate::FitResult& fit) {
  return fit.converged ? "" : "  [not converged]";
}

std::vector<double> theory_db(std::span<const double> freqs, const mech::MechMode& outer) {
  std::vector<double> out;
  out.reserve(freqs.size());
  for (double f : freqs) out.push_back(-mech::isolation_db(kTwoPi * f, outer));
  return out;
}

std::vector<double> chain_db(std::span<const double> freqs, const mech::NestedModel& model) {
  std::vector<double> out;
  out.reserve(freqs.size());
  for (double f : freqs) out.push_back(10.0 * std::log10(mech::chain_transfer(kTwoPi * f, model)));
  return out;
}

// Bin-averages a point curve on the estimate's bin grid.
std::vector<double> binned_like(const estimate::TransferEstimate& est, std::span<const double> freqs,
                                std::span<const double> values, int bins_per_decade) {
  const auto bins = estimate::bin_log_frequency(freqs, values, bins_per_decade);
  std::vector<double> out;
  for (double c : est.bin_centers_hz) {
    double v = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < bins.centers_hz.size(); ++i) {
      if (std::abs(bins.centers_hz[i] / c - 1.0) < 1e-9) v = bins.mean[i];
    }
    out.push_back(v);
  }
  return out;
}

std::string transfer_table_csv(const estimate::TransferEstimate& est) {
  const std::vector<std::string> names = {"bin_center_hz", "magnitude_db", "errbar_db", "count"};
  std::vector<double> counts(est.counts.begin(), est.counts.end());
  const std::vector<std::vector<double>> cols = {est.bin_centers_hz, est.magnitude_db, est.errbar_db, counts};
  return io::columns_csv(names, cols);
}

void log_transfer(const Context& ctx, const estimate::TransferEstimate& est) {
  say(ctx, "bin_center_hz  magnitude_db  errbar_db  count");
  for (std::size_t i = 0; i < est.bin_centers_hz.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%13.1f  %12.2f  %9.2f  %5zu", est.bin_centers_hz[i], est.magnitude_db[i],
                  est.errbar_db[i], est.counts[i]);
    say(ctx, buf);
  }
  if (est.excluded > 0) say(ctx, std::to_string(est.excluded) + " record(s) excluded: base tone not detected");
}

json design_outputs(const Config& cfg, std::vector<std::string>* lines) {
  const auto& outer = cfg.device.outer;
  const auto& inner = cfg.device.inner;
  const double iso = mech::isolation_db(inner.omega0(), outer);
  const double fm = cfg.design.mech_freq_hz.value_or(inner.f0_hz);
  const double ratio = cavity::sideband_ratio(fm, cfg.cavity);
  const double nmin = cavity::min_phonons(fm, cfg.cavity);
  // An explicit product overrides the inner mode; only f * Q enters the test.
  const cavity::Feasibility feas =
      cfg.design.fq_hz ? cavity::ground_state_feasible(*cfg.design.fq_hz, 1.0, cfg.design.bath_temp_k)
                       : cavity::ground_state_feasible(inner.f0_hz, inner.q, cfg.design.bath_temp_k);
  const double fq = feas.fq_hz;
  const double outer_rms = mech::thermal_rms(outer);
  const double inner_rms = mech::thermal_rms(inner);
  const servo::CoolingConfig cc = cooling_config(cfg);
  const double gopt = servo::optical_damping_rate(cc, inner.omega0());
  json cooling = {{"g0_rad_per_s", cc.g0},
                  {"intracavity_photons", cc.n_cav},
                  {"detuning_hz", cc.detuning / kTwoPi},
                  {"optical_damping_rad_per_s", gopt}};
  std::string teff_text;
  try {
    const double teff = servo::effective_temperature(inner, gopt);
    cooling["effective_temperature_k"] = teff;
    teff_text = printf_string("%.4g K", teff);
  } catch (const std::domain_error&) {
    cooling["effective_temperature_k"] = nullptr;
    teff_text = "unstable (anti-damped)";
  }

  if (lines) {
    const auto row = [&](const std::string& name, const std::string& value, const std::string& formula) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-30s %-26s %s", name.c_str(), value.c_str(), formula.c_str());
      lines->emplace_back(buf);
    };
    row("quantity", "value", "formula");
    row("isolation at " + printf_string("%.4g", inner.f0_hz / 1e3) + " kHz", printf_string("%.1f dB", iso),
        "-10 log10[w0^4 / ((w0^2 - w^2)^2 + (w0/Q)^2 w^2)], outer stage");
    row("cavity linewidth", printf_string("%.5g Hz", cfg.cavity.linewidth_fwhm()), "c / (2 L F)");
    row("sideband ratio at " + printf_string("%.4g", fm / 1e3) + " kHz", printf_string("%.2f", ratio),
        "f_m / linewidth");
    row("minimum phonon number", printf_string("%.3e", nmin), "(sqrt(1 + (kappa / 2 w_m)^2) - 1) / 2");
    row("fQ product", printf_string("%.3e Hz", fq),
        printf_string("PASS if fQ > kB T / h = %.4e Hz", feas.threshold_hz) +
            printf_string(" at %g K", cfg.design.bath_temp_k));
    row("ground-state verdict", std::string(feas.pass ? "PASS" : "FAIL") + printf_string(" (margin %.3f)", feas.margin),
        "fQ / (kB T / h)");
    row("outer thermal rms", printf_string("%.1f pm", outer_rms * 1e12), "sqrt(kB T / (m w0^2))");
    row("inner thermal rms", printf_string("%.1f pm", inner_rms * 1e12), "sqrt(kB T / (m w0^2))");
    row("inner effective temperature", teff_text, "T gm / (gm + gamma_opt), red-detuned drive");
  }

  return {{"isolation_at_inner_db", iso},
          {"inner_freq_hz", inner.f0_hz},
          {"cavity_linewidth_hz", cfg.cavity.linewidth_fwhm()},
          {"sideband_freq_hz", fm},
          {"sideband_ratio", ratio},
          {"min_phonons", nmin},
          {"fq_hz", fq},
          {"bath_temp_k", cfg.design.bath_temp_k},
          {"fq_threshold_hz", feas.threshold_hz},
          {"fq_margin", feas.margin},
          {"ground_state_feasible", feas.pass},
          {"outer_thermal_rms_m", outer_rms},
          {"inner_thermal_rms_m", inner_rms},
          {"cooling", cooling}};
}

estimate::DecayOptions optical_decay_options(const Config& cfg) {
  estimate::DecayOptions o;
  o.cavity_length_m = cfg.cavity.length_m;
  return o;
}

// Envelope of a raw ringdown record; envelope records pass through.
TimeSeries as_envelope(const TimeSeries& ts, double f0_hz, double envelope_rate_hz) {
  if (ts.is_complex() || ts.sample_rate_hz <= 2.0 * f0_hz) return ts;
  const auto block = static_cast<std::size_t>(std::max(1.0, std::round(ts.sample_rate_hz / envelope_rate_hz)));
  const auto phasors = dsp::demodulate_blocks(ts.values, ts.sample_rate_hz, f0_hz, block);
  TimeSeries env;
  env.sample_rate_hz = ts.sample_rate_hz / static_cast<double>(block);
  env.t0_s = ts.t0_s + 0.5 * static_cast<double>(block - 1) / ts.sample_rate_hz;
  env.calibration = ts.calibration;
  for (const auto& p : phasors) env.values.push_back(std::abs(p));
  return env;
}

std::vector<double> decay_curve(const TimeSeries& ts, const estimate::FitResult& fit, double onset_fraction) {
  std::vector<double> y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    y[i] = (ts.is_complex() ? std::abs(ts.sample(i)) : ts.values[i]) * ts.calibration;
  }
  const std::size_t onset = estimate::find_decay_onset(y, onset_fraction);
  const double t_on = ts.time(onset);
  std::vector<double> out(ts.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = onset; i < ts.size(); ++i) {
    out[i] = fit.value("amplitude_au") * std::exp(-(ts.time(i) - t_on) / fit.value("tau_s")) +
             fit.value("offset_au");
  }
  return out;
}

std::vector<double> times(const TimeSeries& ts) {
  std::vector<double> t(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) t[i] = ts.time(i);
  return t;
}

}  // namespace

bool fit_failed(const ResultDoc& doc) {
  bool failed = false;
  const std::function<void(const json&)> walk = [&](const json& j) {
    if (j.is_object()) {
      auto it = j.find("converged");
      if (it != j.end() && it->is_boolean() && !it->get<bool>()) failed = true;
      for (const auto& [_, v] : j.items()) walk(v);
    } else if (j.is_array()) {
      for (const auto& v : j) walk(v);
    }
  };
  walk(doc.outputs);
  return failed;
}

// ---------------------------------------------------------------------------
// simulate

ResultDoc simulate_brownian(const Context& ctx) {
  const Config& cfg = ctx.config;
  const synth::BrownianOptions o = brownian_options(cfg);
  const mech::MechMode& m = pick_mode(cfg, cfg.brownian.mode);
  const TimeSeries ts = synth::synth_brownian(m, o);
  const std::string name = record_name(ctx, "brownian");
  io::write_timeseries(ctx.out_dir / name, ts, ctx.format);

  ResultDoc doc = new_doc(ctx, "simulate brownian");
  doc.outputs = {{"files", {name}},
                 {"mode", cfg.brownian.mode},
                 {"f0_hz", m.f0_hz},
                 {"q", m.q},
                 {"fwhm_hz", m.f0_hz / m.q},
                 {"thermal_rms_m", mech::thermal_rms(m)},
                 {"record", series_summary(ts)}};
  finish(ctx, doc, "simulate-brownian");
  say(ctx, "wrote " + (ctx.out_dir / name).string() + " (" + std::to_string(ts.size()) + " samples)");
  for (const auto& w : ts.warnings) say(ctx, "warning: " + w);
  return doc;
}

ResultDoc simulate_ringdown_optical(const Context& ctx) {
  const Config& cfg = ctx.config;
  const OpticalSettings s = optical_settings(cfg);
  const TimeSeries ts = synth::synth_optical_ringdown(cfg.cavity, s.sample_rate_hz, s.duration_s,
                                                      cfg.ringdown_optical.snr, cfg.seed,
                                                      cfg.ringdown_optical.pretrigger_fraction);
  const std::string name = record_name(ctx, "ringdown-optical");
  io::write_timeseries(ctx.out_dir / name, ts, ctx.format);
  ResultDoc doc = new_doc(ctx, "simulate ringdown-optical");
  doc.outputs = {{"files", {name}},
                 {"finesse", cfg.cavity.finesse},
                 {"tau_s", cfg.cavity.decay_tau()},
                 {"snr", cfg.ringdown_optical.snr},
                 {"record", series_summary(ts)}};
  finish(ctx, doc, "simulate-ringdown-optical");
  say(ctx, "wrote " + (ctx.out_dir / name).string() + printf_string(" (tau = %.4g us)", cfg.cavity.decay_tau() * 1e6));
  return doc;
}

ResultDoc simulate_ringdown_mech(const Context& ctx) {
  const Config& cfg = ctx.config;
  const synth::MechRingdownOptions o = mech_ringdown_options(cfg);
  const mech::MechMode& m = pick_mode(cfg, cfg.ringdown_mech.mode);
  const synth::MechRingdown rd = synth::synth_mech_ringdown(m, o);
  const std::string raw = record_name(ctx, "ringdown-mech-raw");
  const std::string env = record_name(ctx, "ringdown-mech-envelope");
  io::write_timeseries(ctx.out_dir / raw, rd.raw, ctx.format);
  io::write_timeseries(ctx.out_dir / env, rd.envelope, ctx.format);
  ResultDoc doc = new_doc(ctx, "simulate ringdown-mech");
  doc.outputs = {{"files", {raw, env}},
                 {"mode", cfg.ringdown_mech.mode},
                 {"f0_hz", m.f0_hz},
                 {"q", m.q},
                 {"amplitude_tau_s", 2.0 * m.q / m.omega0()},
                 {"raw", series_summary(rd.raw)},
                 {"envelope", series_summary(rd.envelope)}};
  finish(ctx, doc, "simulate-ringdown-mech");
  say(ctx, "wrote " + (ctx.out_dir / raw).string() + " and " + (ctx.out_dir / env).string());
  return doc;
}

ResultDoc simulate_sweep(const Context& ctx, bool nested) {
  const Config& cfg = ctx.config;
  const std::vector<double> freqs = sweep_freqs(cfg);
  const synth::SweepOptions o = sweep_options(cfg);
  const std::vector<DriveRecord> records =
      nested ? synth::synth_drive_sweep(cfg.device, freqs, o) : synth::synth_drive_sweep(cfg.device.inner, freqs, o);

  json list = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03zu", i);
    const std::string b = "sweep/" + record_name(ctx, std::string("base-") + idx);
    const std::string r = "sweep/" + record_name(ctx, std::string("response-") + idx);
    io::write_timeseries(ctx.out_dir / b, records[i].base, ctx.format, records[i].drive_freq_hz);
    io::write_timeseries(ctx.out_dir / r, records[i].response, ctx.format, records[i].drive_freq_hz);
    list.push_back({{"drive_freq_hz", records[i].drive_freq_hz}, {"base", b}, {"response", r}});
  }
  ResultDoc doc = new_doc(ctx, "simulate sweep");
  doc.outputs = {{"device", nested ? "nested" : "single"}, {"records", list}};
  finish(ctx, doc, "simulate-sweep");
  say(ctx, "wrote " + std::to_string(records.size()) + " drive records under " + (ctx.out_dir / "sweep").string());
  return doc;
}

ResultDoc simulate_lock(const Context& ctx) {
  const Config& cfg = ctx.config;
  const servo::LockConfig lc = lock_config(cfg);
  check_size(lc.loop_rate_hz, cfg.lock.duration_s, "synthesis.lock");
  const servo::LockResult r = servo::simulate_lock(cfg.device, cfg.cavity, lc, cfg.lock.duration_s, cfg.seed);
  const std::string err = record_name(ctx, "lock-error");
  const std::string act = record_name(ctx, "lock-actuator");
  const std::string det = record_name(ctx, "lock-detuning");
  io::write_timeseries(ctx.out_dir / err, r.error, ctx.format);
  io::write_timeseries(ctx.out_dir / act, r.actuator, ctx.format);
  io::write_timeseries(ctx.out_dir / det, r.residual_detuning, ctx.format);

  ResultDoc doc = new_doc(ctx, "simulate lock");
  doc.outputs = {{"files", {err, act, det}},
                 {"gains", {{"kp", lc.kp}, {"ki_per_s", lc.ki}, {"kd_s", lc.kd}}},
                 {"setpoint", lc.setpoint},
                 {"detuning_bias_hz", lc.detuning_bias_hz},
                 {"lock_acquired", r.lock_acquired},
                 {"saturated_fraction", r.saturated_fraction},
                 {"open_loop_error_rms", r.open_loop_error_rms},
                 {"closed_loop_error_rms", r.closed_loop_error_rms},
                 {"open_loop_excursion_hz", r.open_loop_excursion_hz},
                 {"closed_loop_excursion_hz", r.closed_loop_excursion_hz},
                 {"cavity_linewidth_hz", cfg.cavity.linewidth_fwhm()},
                 {"warnings", r.warnings}};
  finish(ctx, doc, "simulate-lock");
  say(ctx, std::string("lock ") + (r.lock_acquired ? "acquired" : "NOT acquired") +
               printf_string(": detuning excursion %.4g Hz rms", r.closed_loop_excursion_hz) +
               printf_string(" (open loop %.4g Hz,", r.open_loop_excursion_hz) +
               printf_string(" linewidth %.5g Hz)", cfg.cavity.linewidth_fwhm()));
  for (const auto& w : r.warnings) say(ctx, "warning: " + w);
  return doc;
}

// ---------------------------------------------------------------------------
// analyze

ResultDoc analyze_q(const Context& ctx, const std::vector<fs::path>& inputs) {
  const auto opts = peak_options(ctx.config);
  const auto results = map_inputs(inputs, [&](const fs::path& p) {
    return estimate::analyze_peak(load_series(p), opts);
  });
  ResultDoc doc = new_doc(ctx, "analyze q");
  json list = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& fit = results[i].fit;
    list.push_back({{"input", inputs[i].filename().string()},
                    {"resolution_hz", results[i].spectrum.resolution_hz},
                    {"averages", results[i].spectrum.n_avg},
                    {"fit", to_json(fit)}});
    say(ctx, inputs[i].filename().string() + ": " + format_param("Q", fit.get("q")) + converged_note(fit));
    say(ctx, "  " + scaled_param("f0", fit.get("center_hz"), 1.0, "Hz") + ", " +
                 scaled_param("fwhm", fit.get("fwhm_hz"), 1.0, "Hz"));
    for (const auto& w : fit.warnings) say(ctx, "  warning: " + w);
  }
  doc.outputs = {{"results", list}};
  finish(ctx, doc, "analyze-q");
  return doc;
}

ResultDoc analyze_finesse(const Context& ctx, const std::vector<fs::path>& inputs) {
  const auto opts = optical_decay_options(ctx.config);
  const auto fits = map_inputs(inputs, [&](const fs::path& p) { return estimate::fit_exp_decay(load_series(p), opts); });
  ResultDoc doc = new_doc(ctx, "analyze finesse");
  json list = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    list.push_back({{"input", inputs[i].filename().string()}, {"cavity_length_m", ctx.config.cavity.length_m},
                    {"fit", to_json(fits[i])}});
    say(ctx, inputs[i].filename().string() + ": " + format_param("F", fits[i].get("finesse")) +
                 converged_note(fits[i]));
    say(ctx, "  " + scaled_param("tau", fits[i].get("tau_s"), 1e6, "us"));
  }
  doc.outputs = {{"results", list}};
  finish(ctx, doc, "analyze-finesse");
  return doc;
}

ResultDoc analyze_mech_q(const Context& ctx, const std::vector<fs::path>& inputs) {
  const Config& cfg = ctx.config;
  const mech::MechMode& m = pick_mode(cfg, cfg.ringdown_mech.mode);
  estimate::DecayOptions opts;
  opts.mech_f0_hz = m.f0_hz;
  const auto fits = map_inputs(inputs, [&](const fs::path& p) {
    return estimate::fit_exp_decay(as_envelope(load_series(p), m.f0_hz, cfg.ringdown_mech.envelope_rate_hz), opts);
  });
  ResultDoc doc = new_doc(ctx, "analyze mech-q");
  json list = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    list.push_back({{"input", inputs[i].filename().string()}, {"f0_hz", m.f0_hz}, {"fit", to_json(fits[i])}});
    say(ctx, inputs[i].filename().string() + ": " + format_param("Q", fits[i].get("q")) + converged_note(fits[i]));
    say(ctx, "  " + scaled_param("tau", fits[i].get("tau_s"), 1.0, "s"));
  }
  doc.outputs = {{"results", list}};
  finish(ctx, doc, "analyze-mech-q");
  return doc;
}

ResultDoc analyze_psd(const Context& ctx, const std::vector<fs::path>& inputs) {
  const Config& cfg = ctx.config;
  const auto spectra = map_inputs(inputs, [&](const fs::path& p) {
    const TimeSeries ts = load_series(p);
    estimate::WelchOptions w;
    w.window = dsp::window_from_name(cfg.analysis.welch_window);
    w.overlap = cfg.analysis.welch_overlap;
    if (cfg.analysis.welch_segment_s > 0.0) {
      w.segment_len = std::min(ts.size(), static_cast<std::size_t>(std::llround(cfg.analysis.welch_segment_s * ts.sample_rate_hz)));
    }
    return estimate::welch_psd(ts, w);
  });
  ResultDoc doc = new_doc(ctx, "analyze psd");
  json list = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& sp = spectra[i];
    const std::string name = inputs[i].stem().string() + "-psd.csv";
    const std::vector<std::string> names = {"freq_hz", "psd_m2_per_hz"};
    const std::vector<std::vector<double>> cols = {sp.freqs_hz, sp.psd};
    io::write_file_atomic(ctx.out_dir / name, io::columns_csv(names, cols));
    double total = 0.0;
    for (double v : sp.psd) total += v * sp.resolution_hz;
    list.push_back({{"input", inputs[i].filename().string()},
                    {"file", name},
                    {"resolution_hz", sp.resolution_hz},
                    {"averages", sp.n_avg},
                    {"window", sp.window},
                    {"integrated_variance_m2", total}});
    say(ctx, "wrote " + (ctx.out_dir / name).string() + printf_string(" (resolution %.4g Hz,", sp.resolution_hz) +
                 " " + std::to_string(sp.n_avg) + " averages)");
  }
  doc.outputs = {{"results", list}};
  finish(ctx, doc, "analyze-psd");
  return doc;
}

ResultDoc analyze_transfer(const Context& ctx, const std::vector<fs::path>& base,
                           const std::vector<fs::path>& response) {
  if (base.size() != response.size() || base.empty()) {
    throw ConfigError("analyze transfer: need matching, non-empty base and response lists");
  }
  std::vector<DriveRecord> records(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const io::RecordFile b = io::read_timeseries(base[i]);
    const io::RecordFile r = io::read_timeseries(response[i]);
    const auto drive = b.drive_freq_hz ? b.drive_freq_hz : r.drive_freq_hz;
    if (!drive) throw IoError(base[i].string() + ": no '# drive_freq_hz=' header");
    records[i] = {*drive, b.series, r.series};
  }
  const estimate::TransferEstimate est = estimate::estimate_transfer(records, transfer_options(ctx.config));
  io::write_file_atomic(ctx.out_dir / "transfer.csv", transfer_table_csv(est));
  ResultDoc doc = new_doc(ctx, "analyze transfer");
  doc.outputs = {{"files", {"transfer.csv"}}, {"transfer", to_json(est)}};
  finish(ctx, doc, "analyze-transfer");
  log_transfer(ctx, est);
  return doc;
}

ResultDoc analyze_transfer(const Context& ctx, const fs::path& manifest) {
  const ResultDoc sweep = read_result_doc(manifest);
  if (!sweep.outputs.contains("records")) throw IoError(manifest.string() + ": not a sweep manifest");
  std::vector<fs::path> base;
  std::vector<fs::path> response;
  const fs::path dir = manifest.parent_path();
  for (const auto& r : sweep.outputs["records"]) {
    base.push_back(dir / r.at("base").get<std::string>());
    response.push_back(dir / r.at("response").get<std::string>());
  }
  return analyze_transfer(ctx, base, response);
}

// ---------------------------------------------------------------------------
// design-check and report

ResultDoc design_check(const Context& ctx) {
  std::vector<std::string> lines;
  ResultDoc doc = new_doc(ctx, "design-check");
  doc.outputs = design_outputs(ctx.config, &lines);
  finish(ctx, doc, "design-check");
  for (const auto& l : lines) say(ctx, l);
  return doc;
}

ResultDoc report(const Context& ctx) {
  const Config& cfg = ctx.config;
  ResultDoc doc = new_doc(ctx, "report");
  json files = json::array();
  const auto emit = [&](const std::string& name, const std::string& text) {
    io::write_file_atomic(ctx.out_dir / name, text);
    files.push_back(name);
  };

  // (a) transfer functions with the single-stage overlay from the configured outer mode
  const std::vector<double> freqs = sweep_freqs(cfg);
  const synth::SweepOptions so = sweep_options(cfg);
  const estimate::TransferOptions to = transfer_options(cfg);
  const auto single = estimate::estimate_transfer(synth::synth_drive_sweep(cfg.device.inner, freqs, so), to);
  const auto nested = estimate::estimate_transfer(synth::synth_drive_sweep(cfg.device, freqs, so), to);
  const auto theory = binned_like(nested, freqs, theory_db(freqs, cfg.device.outer), to.bins_per_decade);
  auto model = binned_like(nested, freqs, chain_db(freqs, cfg.device), to.bins_per_decade);
  double model_ref = 0.0;
  std::size_t nref = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (nested.bin_centers_hz[i] < *to.dc_cutoff_hz) {
      model_ref += model[i];
      ++nref;
    }
  }
  if (nref > 0) {
    model_ref /= static_cast<double>(nref);
    for (double& v : model) v -= model_ref;
  }
  if (single.bin_centers_hz != nested.bin_centers_hz) throw IoError("report: single and nested bins differ");
  {
    const std::vector<std::string> names = {"bin_center_hz", "single_db", "single_errbar_db", "nested_db",
                                            "nested_errbar_db", "theory_db", "model_db"};
    const std::vector<std::vector<double>> cols = {nested.bin_centers_hz, single.magnitude_db, single.errbar_db,
                                                   nested.magnitude_db, nested.errbar_db, theory, model};
    emit("transfer.csv", io::columns_csv(names, cols));
  }
  {
    const std::vector<double> grid = synth::log_spaced(cfg.sweep.f_min_hz, 10.0 * cfg.sweep.f_max_hz, 50);
    const std::vector<std::string> names = {"freq_hz", "theory_db", "model_db"};
    const std::vector<std::vector<double>> cols = {grid, theory_db(grid, cfg.device.outer), chain_db(grid, cfg.device)};
    emit("transfer_theory.csv", io::columns_csv(names, cols));
  }

  // (b) Lorentzian fit to the configured Brownian record
  const mech::MechMode& bm = pick_mode(cfg, cfg.brownian.mode);
  const auto peak = estimate::analyze_peak(synth::synth_brownian(bm, brownian_options(cfg)), peak_options(cfg));
  {
    const double c = peak.fit.value("center_hz");
    const double hw = 0.5 * peak.fit.value("fwhm_hz");
    const double half = cfg.analysis.fit_window_fwhm * 2.0 * hw;
    std::vector<double> f, s, m;
    for (std::size_t i = 0; i < peak.spectrum.freqs_hz.size(); ++i) {
      const double fi = peak.spectrum.freqs_hz[i];
      if (fi < c - half || fi > c + half) continue;
      f.push_back(fi);
      s.push_back(peak.spectrum.psd[i]);
      const double d = fi - c;
      m.push_back(peak.fit.value("amplitude_m2_per_hz") * hw * hw / (d * d + hw * hw) +
                  peak.fit.value("offset_m2_per_hz"));
    }
    const std::vector<std::string> names = {"freq_hz", "psd_m2_per_hz", "fit_m2_per_hz"};
    const std::vector<std::vector<double>> cols = {f, s, m};
    emit("lorentzian.csv", io::columns_csv(names, cols));
  }

  // (c) optical and mechanical ringdowns
  const OpticalSettings os = optical_settings(cfg);
  const TimeSeries optical = synth::synth_optical_ringdown(cfg.cavity, os.sample_rate_hz, os.duration_s,
                                                           cfg.ringdown_optical.snr, cfg.seed,
                                                           cfg.ringdown_optical.pretrigger_fraction);
  const estimate::DecayOptions od = optical_decay_options(cfg);
  const auto optical_fit = estimate::fit_exp_decay(optical, od);
  {
    const std::vector<std::string> names = {"t_s", "transmission_au", "fit_au"};
    const std::vector<std::vector<double>> cols = {times(optical), optical.values,
                                                   decay_curve(optical, optical_fit, od.onset_fraction)};
    emit("ringdown_optical.csv", io::columns_csv(names, cols));
  }
  const mech::MechMode& rm = pick_mode(cfg, cfg.ringdown_mech.mode);
  const auto mech_rd = synth::synth_mech_ringdown(rm, mech_ringdown_options(cfg));
  estimate::DecayOptions md;
  md.mech_f0_hz = rm.f0_hz;
  const auto mech_fit = estimate::fit_exp_decay(mech_rd.envelope, md);
  {
    const std::vector<std::string> names = {"t_s", "envelope_m", "fit_m"};
    const std::vector<std::vector<double>> cols = {times(mech_rd.envelope), mech_rd.envelope.values,
                                                   decay_curve(mech_rd.envelope, mech_fit, md.onset_fraction)};
    emit("ringdown_mech.csv", io::columns_csv(names, cols));
  }

  doc.outputs = {{"files", files},
                 {"transfer",
                  {{"single", to_json(single)},
                   {"nested", to_json(nested)},
                   {"theory_db", theory},
                   {"model_db", model},
                   {"theory_source", "outer f0 and Q from config; not fitted"}}},
                 {"lorentzian", {{"mode", cfg.brownian.mode}, {"true_q", bm.q}, {"fit", to_json(peak.fit)}}},
                 {"ringdown_optical", {{"true_finesse", cfg.cavity.finesse}, {"fit", to_json(optical_fit)}}},
                 {"ringdown_mech", {{"mode", cfg.ringdown_mech.mode}, {"true_q", rm.q}, {"fit", to_json(mech_fit)}}},
                 {"design_check", design_outputs(cfg, nullptr)}};
  finish(ctx, doc, "report");

  say(ctx, "Lorentzian:  " + format_param("Q", peak.fit.get("q")) + printf_string("   (true %.6g)", bm.q));
  say(ctx, "Optical:     " + format_param("F", optical_fit.get("finesse")) +
               printf_string("   (true %.6g)", cfg.cavity.finesse));
  say(ctx, "Mechanical:  " + format_param("Q", mech_fit.get("q")) + printf_string("   (true %.6g)", rm.q));
  say(ctx, "wrote " + std::to_string(files.size()) + " data files and report.json to " + ctx.out_dir.string());
  return doc;
}

}  // namespace trampoline::cli
