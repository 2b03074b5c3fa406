#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "trampoline/errors.hpp"
#include "trampoline/io.hpp"

namespace {

using namespace trampoline;
namespace fs = std::filesystem;
using nlohmann::json;

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("trampoline_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    ctx_.out_dir = root_ / "out";
    ctx_.config = small_config();
  }
  void TearDown() override { fs::remove_all(root_); }

  // Short records: low-Q modes so every command runs in well under a second.
  static Config small_config() {
    Config cfg;
    cfg.device.inner.q = 1e3;
    cfg.device.outer.q = 1e3;
    cfg.brownian.duration_s = 8.0;
    cfg.sweep.points_per_decade = 10;
    cfg.ringdown_mech.envelope_rate_hz = 1000.0;
    return cfg;
  }

  fs::path root_;
  cli::Context ctx_;
};

std::vector<std::string> sorted_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST_F(Commands, ReportIsByteIdenticalOnRerun) {
  cli::report(ctx_);
  cli::Context again = ctx_;
  again.out_dir = root_ / "again";
  cli::report(again);
  const auto a = sorted_files(ctx_.out_dir);
  ASSERT_EQ(a, sorted_files(again.out_dir));
  ASSERT_FALSE(a.empty());
  for (const auto& name : a) {
    EXPECT_EQ(io::read_file(ctx_.out_dir / name), io::read_file(again.out_dir / name)) << name;
  }
}

TEST_F(Commands, ReportModelColumnTracksNoiselessEstimate) {
  ctx_.config.sweep.base_noise_m = 0.0;
  ctx_.config.sweep.response_noise_m = 0.0;
  const ResultDoc doc = cli::report(ctx_);
  const json& t = doc.outputs.at("transfer");
  const auto model = t.at("model_db").get<std::vector<double>>();
  const auto measured = t.at("nested").at("magnitude_db").get<std::vector<double>>();
  ASSERT_EQ(model.size(), measured.size());
  for (std::size_t i = 0; i < model.size(); ++i) EXPECT_NEAR(model[i], measured[i], 0.1) << i;
  EXPECT_TRUE(fs::exists(ctx_.out_dir / "report.json"));
  EXPECT_TRUE(fs::exists(ctx_.out_dir / "transfer.csv"));
}

TEST_F(Commands, ZeroTemperatureGivesZeroRecord) {
  ctx_.config.device.inner.temp_k = 0.0;
  cli::simulate_brownian(ctx_);
  const auto rec = io::read_timeseries(ctx_.out_dir / "brownian.csv");
  ASSERT_GT(rec.series.size(), 0u);
  for (double v : rec.series.values) EXPECT_EQ(v, 0.0);
  for (double v : rec.series.quadrature) EXPECT_EQ(v, 0.0);
}

TEST_F(Commands, SimulateThenAnalyzeQ) {
  for (auto fmt : {io::Format::kCsv, io::Format::kBinary}) {
    ctx_.format = fmt;
    cli::simulate_brownian(ctx_);
    const fs::path rec = ctx_.out_dir / ("brownian" + std::string(io::extension(fmt)));
    const ResultDoc doc = cli::analyze_q(ctx_, {rec});
    const double q = doc.outputs.at("results").at(0).at("fit").at("derived").at("q").at("value");
    EXPECT_NEAR(q / 1e3, 1.0, 0.05);
    EXPECT_FALSE(cli::fit_failed(doc));
    EXPECT_TRUE(fs::exists(ctx_.out_dir / "analyze-q.json"));
  }
}

TEST_F(Commands, SimulateThenAnalyzeFinesse) {
  cli::simulate_ringdown_optical(ctx_);
  const ResultDoc doc = cli::analyze_finesse(ctx_, {ctx_.out_dir / "ringdown-optical.csv"});
  const double f = doc.outputs.at("results").at(0).at("fit").at("derived").at("finesse").at("value");
  EXPECT_NEAR(f / ctx_.config.cavity.finesse, 1.0, 0.02);
}

TEST_F(Commands, MechQFromRawAndEnvelope) {
  cli::simulate_ringdown_mech(ctx_);
  const ResultDoc doc = cli::analyze_mech_q(
      ctx_, {ctx_.out_dir / "ringdown-mech-raw.csv", ctx_.out_dir / "ringdown-mech-envelope.csv"});
  for (int i = 0; i < 2; ++i) {
    const double q = doc.outputs.at("results").at(i).at("fit").at("derived").at("q").at("value");
    EXPECT_NEAR(q / 1e3, 1.0, 0.02) << i;
  }
}

TEST_F(Commands, TransferOfIdenticalChannelsIsFlat) {
  cli::simulate_sweep(ctx_, true);
  std::vector<fs::path> base;
  for (const auto& name : sorted_files(ctx_.out_dir / "sweep")) {
    if (name.rfind("base-", 0) == 0) base.push_back(ctx_.out_dir / "sweep" / name);
  }
  ASSERT_FALSE(base.empty());
  const ResultDoc doc = cli::analyze_transfer(ctx_, base, base);
  for (double v : doc.outputs.at("transfer").at("magnitude_db").get<std::vector<double>>()) {
    EXPECT_NEAR(v, 0.0, 1e-9);
  }
}

TEST_F(Commands, TransferFromManifestAndSchemaCheck) {
  cli::simulate_sweep(ctx_, false);
  const fs::path manifest = ctx_.out_dir / "simulate-sweep.json";
  EXPECT_NO_THROW(cli::analyze_transfer(ctx_, manifest));
  json j = json::parse(io::read_file(manifest));
  j["schema"] = "something-else/9";
  io::write_file_atomic(manifest, j.dump());
  EXPECT_THROW(cli::analyze_transfer(ctx_, manifest), ConfigError);
}

TEST_F(Commands, OversizedRecordIsConfigError) {
  ctx_.config.brownian.envelope = false;
  ctx_.config.brownian.duration_s = 1e6;
  EXPECT_THROW(cli::simulate_brownian(ctx_), ConfigError);
}

TEST_F(Commands, DesignCheckPrintsFormulas) {
  std::ostringstream log;
  ctx_.config = Config{};
  ctx_.log = &log;
  const ResultDoc doc = cli::design_check(ctx_);
  EXPECT_NEAR(doc.outputs.at("isolation_at_inner_db").get<double>(), 80.0, 0.01);
  EXPECT_TRUE(doc.outputs.at("ground_state_feasible").get<bool>());
  EXPECT_NE(log.str().find("c / (2 L F)"), std::string::npos);
}

TEST(Binary, DesignCheckExitsCleanly) {
  const char* bin = std::getenv("TRAMPOLINE_BIN");
  if (!bin) GTEST_SKIP() << "TRAMPOLINE_BIN not set";
  const fs::path out = fs::temp_directory_path() / "trampoline_cli_binary";
  const std::string cmd = std::string(bin) + " design-check --out " + out.string() + " > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "design-check.json"));
  fs::remove_all(out);
}

}  // namespace
