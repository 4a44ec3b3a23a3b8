#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "acrl/market_data.hpp"

namespace acrl {

/// Result of one market order walked through visible depth.
struct Fill {
  double requested = 0.0;
  double executed = 0.0;
  double vwap = 0.0;  // 0 when nothing executed
  double residual = 0.0;
  int levels_consumed = 0;
};

/// Walks `levels` (price priority order for the consuming side) with a
/// market order for `volume` shares. At most floor(cap * visible depth)
/// shares execute; the rest is returned as residual.
Fill walk_book(std::span<const Level> levels, double volume, double cap = 1.0);

/// Uncapped clean-up order that starts below the `already_consumed` shares
/// taken from the same book in the same period. Volume beyond the visible
/// depth fills at the deepest visible price. Executes nothing if the side
/// is empty.
Fill sweep_book(std::span<const Level> levels, double volume, double already_consumed = 0.0);

struct PeriodFill {
  std::size_t period = 0;  // 1-based
  Fill fill;
  bool terminal = false;
};

enum class ReferencePrice { Mid, Touch };

struct ISRecord {
  std::string run_id;
  std::string model;
  std::int64_t day = 0;
  int hour = 0;
  Side side = Side::Buy;
  double reference_price = 0.0;
  double total_volume = 0.0;
  std::vector<PeriodFill> fills;
  double shortfall_bps = 0.0;
  bool failed = false;
  std::string failure;

  double executed() const;
  /// Shortfall signed so that larger is better for either side.
  double performance_bps() const { return side == Side::Buy ? shortfall_bps : -shortfall_bps; }
};

/// (V * ref - sum executed * vwap) / (V * ref) in basis points. Negative
/// is a cost for a BUY program.
double implementation_shortfall(double reference, std::span<const PeriodFill> fills, double total);

/// One fill's additive share of implementation_shortfall.
double shortfall_contribution_bps(double reference, const Fill& fill, double total);

/// Executes a static schedule over per-period books (already the consuming
/// side). Unfilled volume rolls into the next period's request; after the
/// last period the remainder is swept from the final book with the cap
/// lifted.
ISRecord execute_schedule(std::span<const SideLevels> books, std::span<const double> schedule,
                          double cap, double reference, Side side = Side::Buy);

/// Convenience overload over interval bars; the reference is taken from the
/// first bar.
ISRecord execute_schedule(std::span<const IntervalBar> bars, std::span<const double> schedule,
                          double cap, Side side, ReferencePrice reference = ReferencePrice::Mid);

double reference_price(const IntervalBar& first_bar, Side side, ReferencePrice mode);

/// Appends the clean-up order (if any volume remains) and computes the
/// shortfall. Shared by every executor so the bookkeeping is identical.
void finalize_record(ISRecord& record, const SideLevels& final_book, double remaining,
                     std::size_t final_period);

// Report CSV: run_id,day,hour,model,side,reference,total,shortfall_bps,status,
// then p<k>_req,p<k>_exec,p<k>_vwap for each period and term_exec,term_vwap.
std::string records_csv_header(std::size_t periods);
std::string to_csv_row(const ISRecord& record, std::size_t periods);
void write_records_csv(std::ostream& out, std::span<const ISRecord> records, std::size_t periods);
std::vector<ISRecord> read_records_csv(std::istream& in);

}  // namespace acrl
