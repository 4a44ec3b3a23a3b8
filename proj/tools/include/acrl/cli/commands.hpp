#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "acrl/cli/config.hpp"

namespace acrl::cli {

/// Artifact names inside the output directory.
namespace artifact {
inline constexpr std::string_view kSnapshots = "snapshots.csv";
inline constexpr std::string_view kDigest = "snapshots.fnv1a";
inline constexpr std::string_view kIngestDiagnostics = "ingest_diagnostics.txt";
inline constexpr std::string_view kParams = "params.txt";
std::string qtable(const RunConfig& run);
std::string trace(const RunConfig& run);
std::string records(const RunConfig& run);
}  // namespace artifact

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

struct StageSummary {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> notes;  // printed as `note: ...`
  std::string digest;              // ingest/synth only
};

StageSummary cmd_ingest(const ExperimentConfig& cfg);
StageSummary cmd_synth(const ExperimentConfig& cfg);
StageSummary cmd_calibrate(const ExperimentConfig& cfg);
StageSummary cmd_train(const ExperimentConfig& cfg);
StageSummary cmd_backtest(const ExperimentConfig& cfg);
StageSummary cmd_report(const ExperimentConfig& cfg);

void write_params(std::ostream& out, const Calibration& calibration, const DataSplit& split);
ACParams read_params(std::istream& in);

std::vector<TracePoint> read_trace_csv(std::istream& in);

/// Parses argv, dispatches, and maps errors to `error: category=... message="..."`
/// plus the category's exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acrl::cli
