#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "trampoline/errors.hpp"

namespace fs = std::filesystem;
using namespace trampoline;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<double> temp;
  std::optional<double> finesse;
  std::optional<double> q;
  std::optional<double> duration;
  std::optional<std::string> mode;
  std::optional<double> bath_temp;
  std::optional<double> mech_freq;
  std::optional<double> noise;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("TRAMPOLINE_OUT_DIR"); env && *env) return env;
  return "trampoline-out";
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config_path, "JSON configuration file");
  app->add_option("--seed", o.seed, "random seed (overrides the config)");
  app->add_option("--out", o.out, "output directory (default: $TRAMPOLINE_OUT_DIR or ./trampoline-out)");
}

Config build_config(const Options& o, const std::string& command) {
  Config cfg = o.config_path.empty() ? Config{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.temp) {
    cfg.device.outer.temp_k = *o.temp;
    cfg.device.inner.temp_k = *o.temp;
  }
  if (o.finesse) cfg.cavity.finesse = *o.finesse;
  if (o.mode) {
    cfg.brownian.mode = *o.mode;
    cfg.ringdown_mech.mode = *o.mode;
  }
  if (o.q) {
    const std::string& which = command == "ringdown-mech" || command == "mech-q" ? cfg.ringdown_mech.mode
                                                                                  : cfg.brownian.mode;
    (which == "outer" ? cfg.device.outer : cfg.device.inner).q = *o.q;
  }
  if (o.duration) {
    if (command == "brownian") cfg.brownian.duration_s = *o.duration;
    if (command == "ringdown-optical") cfg.ringdown_optical.duration_s = *o.duration;
    if (command == "ringdown-mech") cfg.ringdown_mech.duration_s = *o.duration;
    if (command == "lock") cfg.lock.duration_s = *o.duration;
  }
  if (o.noise) {
    cfg.sweep.base_noise_m = *o.noise;
    cfg.sweep.response_noise_m = *o.noise;
  }
  if (o.bath_temp) cfg.design.bath_temp_k = *o.bath_temp;
  if (o.mech_freq) cfg.design.mech_freq_hz = *o.mech_freq;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested trampoline resonator simulation and analysis toolkit", "trampoline"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "synthesize measurement records");
  simulate->require_subcommand(1);
  auto* sim_brownian = simulate->add_subcommand("brownian", "thermal motion record");
  auto* sim_optical = simulate->add_subcommand("ringdown-optical", "cavity transmission ringdown");
  auto* sim_mech = simulate->add_subcommand("ringdown-mech", "mechanical free decay");
  auto* sim_sweep = simulate->add_subcommand("sweep", "driven transfer-function records");
  auto* sim_lock = simulate->add_subcommand("lock", "side-of-fringe lock run");
  std::string device = "nested";
  sim_sweep->add_option("--device", device, "nested or single")->check(CLI::IsMember({"nested", "single"}));
  sim_sweep->add_option("--noise", o.noise, "per-sample rms noise on both channels, m");
  for (auto* s : {sim_brownian, sim_optical, sim_mech, sim_sweep, sim_lock}) {
    add_common(s, o);
    s->add_option("--format", o.format, "record format")->check(CLI::IsMember({"csv", "bin"}));
    s->add_option("--temp", o.temp, "temperature of both mechanical modes, K");
    s->add_option("--duration", o.duration, "record duration, s");
  }
  for (auto* s : {sim_brownian, sim_mech}) {
    s->add_option("--q", o.q, "quality factor of the selected mode");
    s->add_option("--mode", o.mode, "inner or outer")->check(CLI::IsMember({"inner", "outer"}));
  }
  for (auto* s : {sim_optical, sim_lock}) s->add_option("--finesse", o.finesse, "cavity finesse");

  auto* analyze = app.add_subcommand("analyze", "fit and estimate from records");
  analyze->require_subcommand(1);
  std::vector<std::string> inputs;
  std::vector<std::string> base_files;
  std::vector<std::string> response_files;
  std::string manifest;
  auto* an_q = analyze->add_subcommand("q", "Lorentzian fit of a thermal-motion spectrum");
  auto* an_finesse = analyze->add_subcommand("finesse", "optical ringdown fit");
  auto* an_mech = analyze->add_subcommand("mech-q", "mechanical ringdown fit (raw or envelope record)");
  auto* an_psd = analyze->add_subcommand("psd", "Welch power spectral density");
  auto* an_transfer = analyze->add_subcommand("transfer", "driven transfer-function estimate");
  for (auto* s : {an_q, an_finesse, an_mech, an_psd}) {
    add_common(s, o);
    s->add_option("inputs", inputs, "record files")->required()->check(CLI::ExistingFile);
  }
  an_finesse->add_option("--finesse", o.finesse, "unused by the fit; kept for config symmetry");
  an_mech->add_option("--mode", o.mode, "mode whose f0 is used")->check(CLI::IsMember({"inner", "outer"}));
  add_common(an_transfer, o);
  auto* opt_manifest = an_transfer->add_option("--manifest", manifest, "simulate-sweep.json")->check(CLI::ExistingFile);
  auto* opt_base = an_transfer->add_option("--base", base_files, "base-motion records")->check(CLI::ExistingFile);
  auto* opt_resp = an_transfer->add_option("--response", response_files, "response records")->check(CLI::ExistingFile);
  opt_manifest->excludes(opt_base)->excludes(opt_resp);
  opt_base->needs(opt_resp);
  opt_resp->needs(opt_base);

  auto* design = app.add_subcommand("design-check", "design-point arithmetic with formulas");
  add_common(design, o);
  design->add_option("--bath-temp", o.bath_temp, "bath temperature for the fQ test, K");
  design->add_option("--mech-freq", o.mech_freq, "mechanical frequency for sideband arithmetic, Hz");

  auto* report = app.add_subcommand("report", "end-to-end plot data for the transfer, Q and ringdown figures");
  add_common(report, o);
  report->add_option("--noise", o.noise, "sweep per-sample rms noise, m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  CLI::App* leaf = app.get_subcommands().front();
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
  const std::string command = leaf->get_name();

  try {
    cli::Context ctx;
    ctx.config = build_config(o, command);
    ctx.out_dir = o.out.empty() ? default_out_dir() : fs::path(o.out);
    ctx.format = io::format_from_name(o.format);
    ctx.log = &std::cout;

    const std::vector<fs::path> paths(inputs.begin(), inputs.end());
    ResultDoc doc;
    if (leaf == sim_brownian) doc = cli::simulate_brownian(ctx);
    else if (leaf == sim_optical) doc = cli::simulate_ringdown_optical(ctx);
    else if (leaf == sim_mech) doc = cli::simulate_ringdown_mech(ctx);
    else if (leaf == sim_sweep) doc = cli::simulate_sweep(ctx, device == "nested");
    else if (leaf == sim_lock) doc = cli::simulate_lock(ctx);
    else if (leaf == an_q) doc = cli::analyze_q(ctx, paths);
    else if (leaf == an_finesse) doc = cli::analyze_finesse(ctx, paths);
    else if (leaf == an_mech) doc = cli::analyze_mech_q(ctx, paths);
    else if (leaf == an_psd) doc = cli::analyze_psd(ctx, paths);
    else if (leaf == an_transfer) {
      if (!manifest.empty()) {
        doc = cli::analyze_transfer(ctx, fs::path(manifest));
      } else if (!base_files.empty()) {
        doc = cli::analyze_transfer(ctx, std::vector<fs::path>(base_files.begin(), base_files.end()),
                                    std::vector<fs::path>(response_files.begin(), response_files.end()));
      } else {
        std::cerr << "analyze transfer: give --manifest or --base/--response\n";
        return cli::kExitUsage;
      }
    } else if (leaf == design) doc = cli::design_check(ctx);
    else if (leaf == report) doc = cli::report(ctx);
    return cli::fit_failed(doc) ? cli::kExitFit : cli::kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return cli::kExitIo;
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return cli::kExitFit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return cli::kExitIo;
  }
}
