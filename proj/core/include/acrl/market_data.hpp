#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acrl/common.hpp"

namespace acrl {

inline constexpr std::size_t kBookDepth = 5;

struct Level {
  double price = 0.0;
  double volume = 0.0;

  friend bool operator==(const Level&, const Level&) = default;
};

using SideLevels = std::array<Level, kBookDepth>;

/// One 5-level depth observation. Bids descend, asks ascend.
struct BookSnapshot {
  Timestamp ts;
  SideLevels bids{};
  SideLevels asks{};

  double mid() const { return 0.5 * (asks[0].price + bids[0].price); }
  double spread() const { return asks[0].price - bids[0].price; }

  friend bool operator==(const BookSnapshot&, const BookSnapshot&) = default;
};

/// Returns an empty string when the snapshot is valid, otherwise the reason
/// it violates the book invariants.
std::string validate(const BookSnapshot& snapshot);

/// Average of the snapshots that fell into [start, start + duration).
struct IntervalBar {
  Timestamp start;
  double duration_s = 300.0;
  SideLevels avg_bids{};
  SideLevels avg_asks{};
  double spread = 0.0;
  double quote_volume = 0.0;
  int hour = 0;
  std::size_t snapshot_count = 0;

  std::int64_t day() const { return start.local_day(); }
  double mid() const { return 0.5 * (avg_asks[0].price + avg_bids[0].price); }
  /// Levels an order on `side` consumes: asks for BUY, bids for SELL.
  const SideLevels& liquidity(Side side) const { return side == Side::Buy ? avg_asks : avg_bids; }
};

/// Level-1 volume on the side a `side` order consumes.
double quote_volume(const IntervalBar& bar, Side side);

struct HistoricalDistribution {
  int hour = 0;
  std::vector<double> spread_samples;
  std::vector<double> volume_samples;
};

enum class DistributionField { Spread, Volume };

struct DataSplit {
  std::vector<IntervalBar> training;
  std::vector<IntervalBar> testing;
};

/// Header names for each CSV column. Columns are located by name so the
/// file may order them freely.
struct ColumnSchema {
  std::string timestamp = "ts";
  std::array<std::string, kBookDepth> bid_price{"bp1", "bp2", "bp3", "bp4", "bp5"};
  std::array<std::string, kBookDepth> bid_volume{"bv1", "bv2", "bv3", "bv4", "bv5"};
  std::array<std::string, kBookDepth> ask_price{"ap1", "ap2", "ap3", "ap4", "ap5"};
  std::array<std::string, kBookDepth> ask_volume{"av1", "av2", "av3", "av4", "av5"};
};

struct RowDiagnostic {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<BookSnapshot> snapshots;
  std::size_t rejected_rows = 0;
  std::vector<RowDiagnostic> diagnostics;
};

IngestResult ingest_csv(std::istream& in, const ColumnSchema& schema = {},
                        const std::string& source = "<stream>");
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema = {});

/// Writes snapshots in the canonical depth CSV layout. Prices use the
/// shortest round-trip decimal form so re-ingesting is lossless.
void write_depth_csv(std::ostream& out, std::span<const BookSnapshot> snapshots);
std::string depth_csv_header();

std::vector<IntervalBar> aggregate_intervals(std::span<const BookSnapshot> snapshots,
                                             double tau_s, Side side = Side::Buy);

std::map<int, HistoricalDistribution> build_distributions(std::span<const IntervalBar> bars);

/// Inclusive empirical CDF (count <= value) / n, clamped below at 1/n.
double percentile_of(const HistoricalDistribution& dist, DistributionField field, double value);

/// Bars on local days before `first_test_day` train; the rest test.
DataSplit split_by_day(std::span<const IntervalBar> bars, std::int64_t first_test_day);
/// Splits on the day boundary closest to `fraction` of the distinct days.
DataSplit split_by_fraction(std::span<const IntervalBar> bars, double fraction);

}  // namespace acrl
