#include "trampoline/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "trampoline/constants.hpp"
#include "trampoline/dsp.hpp"
#include "trampoline/errors.hpp"
#include "trampoline/io.hpp"

namespace trampoline {

using nlohmann::json;

namespace {

// Reads fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path_ + "." + key + "'");
    }
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void number(const char* key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number or null");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      out = v->get<int>();
    }
  }

  void seed(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
        throw ConfigError(where(key) + ": expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  const json* object(const char* key) { return find(key); }
  std::string child(const char* key) const { return path_ + "." + key; }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const char* key) const { return path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_mode(const json& j, const std::string& path, mech::MechMode& m) {
  Section s(j, path);
  s.number("f0_hz", m.f0_hz);
  s.number("q", m.q);
  s.number("m_eff_kg", m.m_eff_kg);
  s.number("temp_k", m.temp_k);
}

json mode_json(const mech::MechMode& m) {
  return {{"f0_hz", m.f0_hz}, {"q", m.q}, {"m_eff_kg", m.m_eff_kg}, {"temp_k", m.temp_k}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

Config Config::from_json(const json& j) {
  Config c;
  Section root(j, "config");
  root.seed("seed", c.seed);
  if (const json* d = root.object("device")) {
    Section s(*d, "config.device");
    if (const json* m = s.object("outer")) read_mode(*m, s.child("outer"), c.device.outer);
    if (const json* m = s.object("inner")) read_mode(*m, s.child("inner"), c.device.inner);
  }
  if (const json* d = root.object("cavity")) {
    Section s(*d, "config.cavity");
    s.number("length_m", c.cavity.length_m);
    s.number("wavelength_m", c.cavity.wavelength_m);
    s.number("finesse", c.cavity.finesse);
  }
  if (const json* syn = root.object("synthesis")) {
    Section s(*syn, "config.synthesis");
    if (const json* d = s.object("brownian")) {
      Section b(*d, s.child("brownian"));
      b.string("mode", c.brownian.mode);
      b.boolean("envelope", c.brownian.envelope);
      b.number("sample_rate_hz", c.brownian.sample_rate_hz);
      b.number("duration_s", c.brownian.duration_s);
      b.number("noise_floor_m2_per_hz", c.brownian.noise_floor_m2_per_hz);
    }
    if (const json* d = s.object("ringdown_optical")) {
      Section b(*d, s.child("ringdown_optical"));
      b.number("sample_rate_hz", c.ringdown_optical.sample_rate_hz);
      b.number("duration_s", c.ringdown_optical.duration_s);
      b.number("snr", c.ringdown_optical.snr);
      b.number("pretrigger_fraction", c.ringdown_optical.pretrigger_fraction);
    }
    if (const json* d = s.object("ringdown_mech")) {
      Section b(*d, s.child("ringdown_mech"));
      b.string("mode", c.ringdown_mech.mode);
      b.number("sample_rate_hz", c.ringdown_mech.sample_rate_hz);
      b.number("duration_s", c.ringdown_mech.duration_s);
      b.number("x0_m", c.ringdown_mech.x0_m);
      b.number("snr", c.ringdown_mech.snr);
      b.number("envelope_rate_hz", c.ringdown_mech.envelope_rate_hz);
    }
    if (const json* d = s.object("sweep")) {
      Section b(*d, s.child("sweep"));
      b.number("f_min_hz", c.sweep.f_min_hz);
      b.number("f_max_hz", c.sweep.f_max_hz);
      b.integer("points_per_decade", c.sweep.points_per_decade);
      b.number("amplitude_m", c.sweep.amplitude_m);
      b.integer("cycles_per_point", c.sweep.cycles_per_point);
      b.integer("samples_per_cycle", c.sweep.samples_per_cycle);
      b.number("base_noise_m", c.sweep.base_noise_m);
      b.number("response_noise_m", c.sweep.response_noise_m);
      b.number("base_scale", c.sweep.base_scale);
      b.number("piezo_rolloff_hz", c.sweep.piezo_rolloff_hz);
    }
    if (const json* d = s.object("lock")) {
      Section b(*d, s.child("lock"));
      b.number("duration_s", c.lock.duration_s);
      b.number("loop_rate_hz", c.lock.loop_rate_hz);
      b.number("crossover_hz", c.lock.crossover_hz);
      b.number("actuator_range_m", c.lock.actuator_range_m);
      b.number("kp", c.lock.kp);
      b.number("ki", c.lock.ki);
      b.number("kd", c.lock.kd);
    }
  }
  if (const json* d = root.object("analysis")) {
    Section s(*d, "config.analysis");
    s.string("welch_window", c.analysis.welch_window);
    s.number("welch_overlap", c.analysis.welch_overlap);
    s.number("welch_segment_s", c.analysis.welch_segment_s);
    s.number("fit_window_fwhm", c.analysis.fit_window_fwhm);
    s.string("weighting", c.analysis.weighting);
    s.integer("bins_per_decade", c.analysis.bins_per_decade);
    s.number("dc_cutoff_fraction", c.analysis.dc_cutoff_fraction);
    s.number("detection_threshold", c.analysis.detection_threshold);
  }
  if (const json* d = root.object("cooling")) {
    Section s(*d, "config.cooling");
    s.number("g0_rad_s", c.cooling.g0_rad_s);
    s.number("n_cav", c.cooling.n_cav);
    s.number("detuning_hz", c.cooling.detuning_hz);
  }
  if (const json* d = root.object("design")) {
    Section s(*d, "config.design");
    s.number("bath_temp_k", c.design.bath_temp_k);
    s.number("mech_freq_hz", c.design.mech_freq_hz);
    s.number("fq_hz", c.design.fq_hz);
  }
  c.validate();
  return c;
}

json Config::to_json() const {
  return {
      {"seed", seed},
      {"device", {{"outer", mode_json(device.outer)}, {"inner", mode_json(device.inner)}}},
      {"cavity",
       {{"length_m", cavity.length_m}, {"wavelength_m", cavity.wavelength_m}, {"finesse", cavity.finesse}}},
      {"synthesis",
       {{"brownian",
         {{"mode", brownian.mode},
          {"envelope", brownian.envelope},
          {"sample_rate_hz", brownian.sample_rate_hz},
          {"duration_s", brownian.duration_s},
          {"noise_floor_m2_per_hz", brownian.noise_floor_m2_per_hz}}},
        {"ringdown_optical",
         {{"sample_rate_hz", ringdown_optical.sample_rate_hz},
          {"duration_s", ringdown_optical.duration_s},
          {"snr", ringdown_optical.snr},
          {"pretrigger_fraction", ringdown_optical.pretrigger_fraction}}},
        {"ringdown_mech",
         {{"mode", ringdown_mech.mode},
          {"sample_rate_hz", ringdown_mech.sample_rate_hz},
          {"duration_s", ringdown_mech.duration_s},
          {"x0_m", ringdown_mech.x0_m},
          {"snr", ringdown_mech.snr},
          {"envelope_rate_hz", ringdown_mech.envelope_rate_hz}}},
        {"sweep",
         {{"f_min_hz", sweep.f_min_hz},
          {"f_max_hz", sweep.f_max_hz},
          {"points_per_decade", sweep.points_per_decade},
          {"amplitude_m", sweep.amplitude_m},
          {"cycles_per_point", sweep.cycles_per_point},
          {"samples_per_cycle", sweep.samples_per_cycle},
          {"base_noise_m", sweep.base_noise_m},
          {"response_noise_m", sweep.response_noise_m},
          {"base_scale", sweep.base_scale},
          {"piezo_rolloff_hz", opt(sweep.piezo_rolloff_hz)}}},
        {"lock",
         {{"duration_s", lock.duration_s},
          {"loop_rate_hz", lock.loop_rate_hz},
          {"crossover_hz", lock.crossover_hz},
          {"actuator_range_m", lock.actuator_range_m},
          {"kp", opt(lock.kp)},
          {"ki", opt(lock.ki)},
          {"kd", opt(lock.kd)}}}}},
      {"analysis",
       {{"welch_window", analysis.welch_window},
        {"welch_overlap", analysis.welch_overlap},
        {"welch_segment_s", analysis.welch_segment_s},
        {"fit_window_fwhm", analysis.fit_window_fwhm},
        {"weighting", analysis.weighting},
        {"bins_per_decade", analysis.bins_per_decade},
        {"dc_cutoff_fraction", analysis.dc_cutoff_fraction},
        {"detection_threshold", analysis.detection_threshold}}},
      {"cooling",
       {{"g0_rad_s", opt(cooling.g0_rad_s)}, {"n_cav", cooling.n_cav}, {"detuning_hz", opt(cooling.detuning_hz)}}},
      {"design",
       {{"bath_temp_k", design.bath_temp_k},
        {"mech_freq_hz", opt(design.mech_freq_hz)},
        {"fq_hz", opt(design.fq_hz)}}},
  };
}

void Config::validate() const {
  try {
    device.validate();
    cavity.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(brownian.mode == "inner" || brownian.mode == "outer",
          "synthesis.brownian.mode must be \"inner\" or \"outer\"");
  require(ringdown_mech.mode == "inner" || ringdown_mech.mode == "outer",
          "synthesis.ringdown_mech.mode must be \"inner\" or \"outer\"");
  require(brownian.sample_rate_hz >= 0.0 && brownian.duration_s >= 0.0 &&
              brownian.noise_floor_m2_per_hz >= 0.0,
          "synthesis.brownian: rates, durations and noise must be non-negative");
  require(ringdown_optical.sample_rate_hz >= 0.0 && ringdown_optical.duration_s >= 0.0 &&
              ringdown_optical.snr > 0.0,
          "synthesis.ringdown_optical: invalid rate, duration or snr");
  require(ringdown_optical.pretrigger_fraction >= 0.0 && ringdown_optical.pretrigger_fraction < 0.5,
          "synthesis.ringdown_optical.pretrigger_fraction must lie in [0, 0.5)");
  require(ringdown_mech.sample_rate_hz >= 0.0 && ringdown_mech.duration_s >= 0.0 &&
              ringdown_mech.x0_m > 0.0 && ringdown_mech.snr > 0.0 && ringdown_mech.envelope_rate_hz > 0.0,
          "synthesis.ringdown_mech: invalid parameter");
  require(sweep.f_min_hz > 0.0 && sweep.f_max_hz > sweep.f_min_hz,
          "synthesis.sweep: need 0 < f_min_hz < f_max_hz");
  require(sweep.points_per_decade > 0 && sweep.cycles_per_point > 0 && sweep.samples_per_cycle >= 4,
          "synthesis.sweep: points_per_decade, cycles_per_point > 0 and samples_per_cycle >= 4");
  require(sweep.amplitude_m > 0.0 && sweep.base_noise_m >= 0.0 && sweep.response_noise_m >= 0.0 &&
              sweep.base_scale > 0.0,
          "synthesis.sweep: invalid amplitude, noise or scale");
  require(!sweep.piezo_rolloff_hz || *sweep.piezo_rolloff_hz > 0.0,
          "synthesis.sweep.piezo_rolloff_hz must be positive");
  require(lock.duration_s > 0.0 && lock.loop_rate_hz > 0.0 && lock.crossover_hz > 0.0 &&
              lock.actuator_range_m > 0.0,
          "synthesis.lock: durations, rates and range must be positive");
  require(lock.crossover_hz < lock.loop_rate_hz / 4.0,
          "synthesis.lock.crossover_hz must be below a quarter of the loop rate");
  try {
    dsp::window_from_name(analysis.welch_window);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("analysis.welch_window: ") + e.what());
  }
  require(analysis.welch_overlap >= 0.0 && analysis.welch_overlap <= 0.9,
          "analysis.welch_overlap must lie in [0, 0.9]");
  require(analysis.welch_segment_s >= 0.0, "analysis.welch_segment_s must be non-negative");
  require(analysis.fit_window_fwhm > 1.0, "analysis.fit_window_fwhm must exceed 1");
  require(analysis.weighting == "relative" || analysis.weighting == "uniform",
          "analysis.weighting must be \"relative\" or \"uniform\"");
  require(analysis.bins_per_decade > 0, "analysis.bins_per_decade must be positive");
  require(analysis.dc_cutoff_fraction > 0.0 && analysis.dc_cutoff_fraction < 1.0,
          "analysis.dc_cutoff_fraction must lie in (0, 1)");
  require(analysis.detection_threshold > 0.0, "analysis.detection_threshold must be positive");
  require(!cooling.g0_rad_s || *cooling.g0_rad_s > 0.0, "cooling.g0_rad_s must be positive");
  require(cooling.n_cav >= 0.0, "cooling.n_cav must be non-negative");
  require(design.bath_temp_k > 0.0, "design.bath_temp_k must be positive");
  require(!design.mech_freq_hz || *design.mech_freq_hz > 0.0, "design.mech_freq_hz must be positive");
  require(!design.fq_hz || *design.fq_hz > 0.0, "design.fq_hz must be positive");
}

Config load_config(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return Config::from_json(j);
}

double single_photon_coupling(const cavity::Cavity& cav, const mech::MechMode& mode) {
  const double x_zpf = std::sqrt(constants::kHbar / (2.0 * mode.m_eff_kg * mode.omega0()));
  return constants::kTwoPi * cav.frequency_pull() * x_zpf;
}

servo::LockConfig lock_config(const Config& cfg) {
  servo::LockConfig lc = servo::suggest_lock_config(cfg.cavity, cfg.lock.loop_rate_hz,
                                                    cfg.lock.crossover_hz, cfg.lock.actuator_range_m);
  if (cfg.lock.kp) lc.kp = *cfg.lock.kp;
  if (cfg.lock.ki) lc.ki = *cfg.lock.ki;
  if (cfg.lock.kd) lc.kd = *cfg.lock.kd;
  return lc;
}

servo::CoolingConfig cooling_config(const Config& cfg) {
  servo::CoolingConfig cc;
  cc.g0 = cfg.cooling.g0_rad_s.value_or(single_photon_coupling(cfg.cavity, cfg.device.inner));
  cc.n_cav = cfg.cooling.n_cav;
  cc.kappa = cfg.cavity.kappa();
  cc.detuning = constants::kTwoPi * cfg.cooling.detuning_hz.value_or(-cfg.device.inner.f0_hz);
  return cc;
}

}  // namespace trampoline
