#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "acrl/cli/commands.hpp"
#include "acrl/cli/config.hpp"
#include "support.hpp"

namespace acrl::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("acrl_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Small planted-regime run that finishes in well under a second.
std::vector<std::string> small_settings(const fs::path& out) {
  return {"out=" + out.string(), "seed=42", "synth_days=12", "synth_unf_spread=0.3", "V=5000", "T=2",
          "H=10",  "I=6",        "B=2",     "W=2",          "beta_incr=0.5",        "lambda=0.0001",
          "trace_stride=10"};
}

Outcome stage(const std::string& name, const std::vector<std::string>& settings) {
  std::vector<std::string> args{name};
  args.insert(args.end(), settings.begin(), settings.end());
  return invoke(args);
}

TEST(Config, ListsRangesAndZippedGranularities) {
  ExperimentConfig cfg;
  apply_setting(cfg, "V", "100000,1000000");
  apply_setting(cfg, "T", "4,8,12");
  apply_setting(cfg, "H", "9-16");
  apply_setting(cfg, "IBW", "5,10");
  finalize(cfg);
  EXPECT_EQ(cfg.hours.size(), 8u);
  EXPECT_EQ(cfg.runs().size(), 2u * 3u * 2u * 8u);

  ExperimentConfig zipped;
  apply_setting(zipped, "I", "12,6");
  apply_setting(zipped, "B", "2");
  apply_setting(zipped, "W", "2,3");
  finalize(zipped);
  const auto runs = zipped.runs();
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].dims, (StateDims{4, 12, 2, 2}));
  EXPECT_EQ(runs[1].dims, (StateDims{4, 6, 2, 3}));
  EXPECT_EQ(run_key(runs[0]), "V100000_T4_I12B2W2_H9");

  ExperimentConfig mismatch;
  apply_setting(mismatch, "I", "2,3");
  EXPECT_THROW(apply_setting(mismatch, "B", "2,3,4"), Error);
}

TEST(Config, GammaIsForcedToOneWithWarning) {
  ExperimentConfig cfg;
  apply_setting(cfg, "gamma", "0.9");
  finalize(cfg);
  EXPECT_EQ(cfg.gamma, 1.0);
  ASSERT_EQ(cfg.warnings.size(), 1u);
  EXPECT_NE(cfg.warnings[0].find("gamma=0.9"), std::string::npos);
}

TEST(Config, ErrorsCarryConfigCategoryAndLocation) {
  ExperimentConfig cfg;
  try {
    apply_setting(cfg, "colour", "blue");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Config);
  }
  std::istringstream in("V = 100\n# fine\nT = four\n");
  try {
    apply_config_stream(cfg, in, "exp.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Config);
    EXPECT_NE(std::string(e.what()).find("exp.cfg:3"), std::string::npos);
  }
  ExperimentConfig bad_cap;
  apply_setting(bad_cap, "cap", "1.5");
  EXPECT_THROW(finalize(bad_cap), Error);
  ExperimentConfig bad_buckets;
  apply_setting(bad_buckets, "IBW", "1");
  EXPECT_THROW(finalize(bad_buckets), Error);
}

TEST(Config, EchoIsSortedAndOmitsOutput) {
  ExperimentConfig cfg;
  finalize(cfg);
  const auto echo = cfg.echo();
  ASSERT_FALSE(echo.empty());
  for (std::size_t k = 1; k < echo.size(); ++k) EXPECT_LT(echo[k - 1].first, echo[k].first);
  for (const auto& [k, v] : echo) EXPECT_NE(k, "out");
}

TEST(Cli, FullPipelineWritesEveryArtifact) {
  TempDir dir;
  const auto settings = small_settings(dir.path());
  for (const char* s : {"synth", "calibrate", "train", "backtest", "report"}) {
    const auto o = stage(s, settings);
    ASSERT_EQ(o.code, 0) << s << ": " << o.err;
    EXPECT_NE(o.out.find("wrote "), std::string::npos) << s;
  }
  const std::string key = "V5000_T2_I6B2W2_H10";
  for (const std::string& name : std::vector<std::string>{"snapshots.csv", "snapshots.fnv1a", "params.txt", "qtable_" + key + ".csv",
                                 "trace_" + key + ".csv", "records_" + key + ".csv", "table1.csv", "table2.csv",
                                 "fig2_trace.csv"}) {
    EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
  }
  const std::string table1 = slurp(dir.path() / "table1.csv");
  EXPECT_NE(table1.find("# seed=42"), std::string::npos);
  EXPECT_NE(table1.find("V,T,IBW,H10,Average"), std::string::npos);
}

TEST(Cli, TwoRunsAreByteIdentical) {
  TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    for (const char* s : {"synth", "calibrate", "train", "backtest", "report"}) {
      ASSERT_EQ(stage(s, small_settings(dir->path())).code, 0) << s;
    }
  }
  for (const char* name : {"table1.csv", "table2.csv", "fig2_trace.csv", "snapshots.csv"}) {
    EXPECT_EQ(file_digest(a.path() / name), file_digest(b.path() / name)) << name;
    EXPECT_EQ(slurp(a.path() / name), slurp(b.path() / name)) << name;
  }
}

TEST(Cli, BacktestWithoutQTableIsMissingArtifact) {
  TempDir dir;
  const auto settings = small_settings(dir.path());
  ASSERT_EQ(stage("synth", settings).code, 0);
  ASSERT_EQ(stage("calibrate", settings).code, 0);
  const auto o = stage("backtest", settings);
  EXPECT_EQ(o.code, exit_code(ErrorCategory::MissingArtifact));
  EXPECT_NE(o.err.find("error: category=missing_artifact"), std::string::npos);
}

TEST(Cli, CalibrateWithoutStoreIsMissingArtifact) {
  TempDir dir;
  const auto o = stage("calibrate", small_settings(dir.path()));
  EXPECT_EQ(o.code, exit_code(ErrorCategory::MissingArtifact));
}

TEST(Cli, IngestValidCsvAndReingestDigest) {
  TempDir dir;
  const fs::path data = dir.path() / "depth.csv";
  {
    std::vector<BookSnapshot> snaps;
    for (int k = 0; k < 40; ++k) {
      snaps.push_back(acrl::testing::symmetric_snapshot(15341, 9 * acrl::testing::kHourMs + k * 30'000, 100.0,
                                                        0.02, 1000 + k));
    }
    std::ofstream out(data);
    write_depth_csv(out, snaps);
  }
  const std::vector<std::string> settings{"data=" + data.string(), "out=" + (dir.path() / "store").string()};
  const auto first = stage("ingest", settings);
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_TRUE(fs::exists(dir.path() / "store" / "snapshots.csv"));
  const auto digest = first.out.substr(first.out.find("digest="));
  const auto second = stage("ingest", settings);
  ASSERT_EQ(second.code, 0);
  EXPECT_EQ(second.out.substr(second.out.find("digest=")), digest);
  EXPECT_EQ(digest, "digest=" + file_digest(dir.path() / "store" / "snapshots.csv") + "\n");
}

TEST(Cli, EmptyDirectoryReportsZeroFiles) {
  TempDir dir;
  fs::create_directories(dir.path() / "empty");
  const auto o = stage("ingest", {"data=" + (dir.path() / "empty").string(), "out=" + (dir.path() / "o").string()});
  EXPECT_EQ(o.code, exit_code(ErrorCategory::Io));
  EXPECT_NE(o.err.find("0 files found"), std::string::npos);
}

TEST(Cli, ArgumentAndConfigErrors) {
  EXPECT_EQ(invoke({}).code, exit_code(ErrorCategory::InvalidArgument));
  EXPECT_EQ(invoke({"bogus"}).code, exit_code(ErrorCategory::InvalidArgument));
  const auto unknown = invoke({"synth", "colour=blue"});
  EXPECT_EQ(unknown.code, exit_code(ErrorCategory::Config));
  EXPECT_NE(unknown.err.find("category=config"), std::string::npos);
  EXPECT_EQ(invoke({"synth", "novalue"}).code, exit_code(ErrorCategory::Config));
  EXPECT_EQ(invoke({"synth", "-c", "/nonexistent/exp.cfg"}).code, exit_code(ErrorCategory::Io));
}

TEST(Digest, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace acrl::cli
