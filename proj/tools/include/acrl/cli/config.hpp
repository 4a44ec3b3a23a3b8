#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acrl/backtest.hpp"
#include "acrl/synthetic.hpp"

namespace acrl::cli {

/// One (I, B, W) triple from the grid.
struct Granularity {
  std::size_t inventory = 5;
  std::size_t spread = 5;
  std::size_t volume = 5;
};

/// Resolved experiment configuration. Every list key expands into the run
/// grid V x T x IBW x H.
struct ExperimentConfig {
  std::string data;                 // CSV file or directory for `ingest`
  std::filesystem::path out = "out";
  std::uint64_t seed = 42;
  std::optional<std::int64_t> split_day;  // first testing day
  double train_fraction = 0.5;

  std::vector<double> volumes{100000.0};
  std::vector<std::size_t> periods{4};
  std::vector<int> hours{9};
  std::vector<Granularity> granularities{Granularity{}};

  double beta_lb = 0.0;
  double beta_ub = 2.0;
  double beta_incr = 0.25;
  double lambda = 0.01;
  double tau_s = 300.0;
  double gamma = 1.0;
  double alpha0 = 1.0;
  double cap = 0.2;
  Side side = Side::Buy;
  ReferencePrice reference = ReferencePrice::Mid;
  std::size_t trace_stride = 1;

  int synth_days = 60;
  RegimeSchedule regime;
  SyntheticOptions synth;

  std::vector<std::string> warnings;

  /// Every combination, in report order.
  std::vector<RunConfig> runs() const;
  LearningSchedule schedule() const { return {alpha0, gamma}; }
  /// key=value pairs, sorted by key, for report headers.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Applies one `key=value` setting. Unknown keys and malformed values throw
/// Error{Config}.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; `#` starts a comment.
void apply_config_stream(ExperimentConfig& cfg, std::istream& in, const std::string& source);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Checks cross-key invariants and forces gamma to 1 (with a warning).
void finalize(ExperimentConfig& cfg);

/// File-name friendly key for one run, e.g. V5000_T4_I12B2W2_H10.
std::string run_key(const RunConfig& run);

}  // namespace acrl::cli
