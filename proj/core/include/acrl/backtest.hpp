#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acrl/ac_model.hpp"
#include "acrl/execution.hpp"
#include "acrl/market_data.hpp"
#include "acrl/rl_agent.hpp"

namespace acrl {

struct RunConfig {
  double volume = 100000.0;  // V
  StateDims dims;            // T, I, B, W
  int hour = 9;              // H
  ActionGrid grid;
  double lambda = 0.01;
  double tau_s = 300.0;
  double cap = 0.2;
  Side side = Side::Buy;
  ReferencePrice reference = ReferencePrice::Mid;

  void validate() const;
  TrainingConfig training(const LearningSchedule& schedule = {}, std::size_t trace_stride = 1) const;
};

/// One run's worth of consecutive bars on a single day.
struct DayWindow {
  std::int64_t day = 0;
  std::vector<IntervalBar> bars;
};

/// Windows of `periods` consecutive bars starting exactly at hour:00 on
/// each day. Days without a complete window are skipped and noted.
std::vector<DayWindow> day_windows(std::span<const IntervalBar> bars, std::size_t periods, int hour,
                                   std::vector<std::string>* diagnostics = nullptr);

/// Training episodes: every complete window whose first bar starts inside
/// `hour`, on every day.
std::vector<Episode> training_episodes(std::span<const IntervalBar> bars, std::size_t periods, int hour,
                                       Side side, ReferencePrice reference = ReferencePrice::Mid);

/// Executes one day under `policy`. Each period requests
/// round(beta * rescaled AC child) plus whatever the previous period could
/// not fill; the rescaling uses the inventory net of that carried residual.
ISRecord execute_policy(const RunConfig& cfg, const DayWindow& window, const ACTrajectory& ac,
                        const Policy& policy, const std::map<int, HistoricalDistribution>& dists);

std::vector<ISRecord> run_ac(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, std::vector<std::string>* diagnostics = nullptr);

std::vector<ISRecord> run_rl(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, const Policy& policy,
                             const std::map<int, HistoricalDistribution>& dists,
                             std::vector<std::string>* diagnostics = nullptr);

std::vector<ISRecord> run_rl(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, const QTable& q,
                             const std::map<int, HistoricalDistribution>& dists,
                             std::vector<std::string>* diagnostics = nullptr);

struct ISStatistics {
  std::vector<std::int64_t> days;
  std::vector<double> ac_bps;
  std::vector<double> rl_bps;
  double median_ac = 0.0;
  double median_rl = 0.0;
  std::optional<double> median_improvement_pct;  // empty when median_ac == 0
  double std_ac = 0.0;  // percent
  double std_rl = 0.0;  // percent
  std::size_t n_days = 0;
};

double median(std::span<const double> values);
/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

/// Pairs AC and RL records by day, dropping failed runs and unmatched days
/// from both sides.
ISStatistics compare(std::span<const ISRecord> ac, std::span<const ISRecord> rl);

struct ReportKey {
  double volume = 0.0;
  std::size_t periods = 0;
  std::string ibw;
  int hour = 0;

  friend auto operator<=>(const ReportKey&, const ReportKey&) = default;
};

std::string ibw_label(const StateDims& dims);

struct ReportRow {
  ReportKey key;
  ISStatistics stats;
};

struct TraceSeries {
  ReportKey key;
  std::vector<TracePoint> trace;
};

struct ReportBundle {
  std::string table1;
  std::string table2;
  std::string fig2_trace;
};

/// Renders table1 (improvement by hour), table2 (dispersion) and the
/// correct-action trace. `config_echo` lines lead every file as comments.
ReportBundle render_report(std::span<const ReportRow> rows, std::span<const TraceSeries> traces,
                           std::span<const std::pair<std::string, std::string>> config_echo);

void write_report(const std::filesystem::path& dir, const ReportBundle& bundle);

}  // namespace acrl
