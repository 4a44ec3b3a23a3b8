#include "acrl/execution.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace acrl {

namespace {

double visible_depth(std::span<const Level> levels) {
  double total = 0.0;
  for (const auto& l : levels) total += l.volume;
  return total;
}

// Consumes `volume` shares after skipping `skip` shares from the top. Any
// volume left over after the last level is reported through `overflow`.
Fill consume(std::span<const Level> levels, double volume, double skip, double& overflow) {
  Fill fill;
  fill.requested = volume;
  double value = 0.0;
  double remaining = volume;
  for (const auto& level : levels) {
    double available = level.volume;
    if (skip > 0.0) {
      const double skipped = std::min(skip, available);
      skip -= skipped;
      available -= skipped;
    }
    if (remaining <= 0.0 || available <= 0.0) continue;
    const double take = std::min(remaining, available);
    value += take * level.price;
    remaining -= take;
    ++fill.levels_consumed;
  }
  overflow = remaining > 0.0 ? remaining : 0.0;
  fill.executed = volume - overflow;
  fill.vwap = fill.executed > 0.0 ? value / fill.executed : 0.0;
  fill.residual = overflow;
  return fill;
}

double deepest_price(std::span<const Level> levels) {
  double price = 0.0;
  for (const auto& l : levels) {
    if (l.volume > 0.0) price = l.price;
  }
  return price;
}

}  // namespace

double ISRecord::executed() const {
  double total = 0.0;
  for (const auto& pf : fills) total += pf.fill.executed;
  return total;
}

Fill walk_book(std::span<const Level> levels, double volume, double cap) {
  if (volume < 0.0) throw Error(ErrorCategory::InvalidArgument, "walk_book: negative volume");
  if (!(cap > 0.0) || cap > 1.0) {
    throw Error(ErrorCategory::InvalidArgument, "walk_book: cap must be in (0, 1]");
  }
  const double depth = visible_depth(levels);
  const double limit = std::floor(cap * depth + 1e-9);
  const double executable = std::min(volume, limit);

  double overflow = 0.0;
  Fill fill = consume(levels, executable, 0.0, overflow);
  if (overflow > 0.0) {
    // Fractional averaged depth can leave a sliver after flooring; it
    // trades at the deepest level.
    const double price = deepest_price(levels);
    fill.vwap = (fill.vwap * fill.executed + overflow * price) / executable;
    fill.executed = executable;
  }
  fill.requested = volume;
  fill.residual = volume - fill.executed;
  return fill;
}

Fill sweep_book(std::span<const Level> levels, double volume, double already_consumed) {
  if (volume < 0.0) throw Error(ErrorCategory::InvalidArgument, "sweep_book: negative volume");
  const double price = deepest_price(levels);
  if (price <= 0.0 || volume == 0.0) {
    Fill empty;
    empty.requested = volume;
    empty.residual = volume;
    return empty;
  }
  double overflow = 0.0;
  Fill fill = consume(levels, volume, already_consumed, overflow);
  if (overflow > 0.0) {
    const double value = fill.vwap * fill.executed + overflow * price;
    fill.executed = volume;
    fill.vwap = value / volume;
    fill.residual = 0.0;
  }
  return fill;
}

double shortfall_contribution_bps(double reference, const Fill& fill, double total) {
  return fill.executed * (reference - fill.vwap) / (total * reference) * 1e4;
}

double implementation_shortfall(double reference, std::span<const PeriodFill> fills, double total) {
  if (!(reference > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "implementation_shortfall: reference must be positive");
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "implementation_shortfall: total must be positive");
  }
  double cost = 0.0;
  for (const auto& pf : fills) cost += pf.fill.executed * pf.fill.vwap;
  return (total * reference - cost) / (total * reference) * 1e4;
}

double reference_price(const IntervalBar& first_bar, Side side, ReferencePrice mode) {
  if (mode == ReferencePrice::Mid) return first_bar.mid();
  return first_bar.liquidity(side)[0].price;
}

void finalize_record(ISRecord& record, const SideLevels& final_book, double remaining,
                     std::size_t final_period) {
  if (remaining > 0.0) {
    double consumed = 0.0;
    for (const auto& pf : record.fills) {
      if (pf.period == final_period && !pf.terminal) consumed += pf.fill.executed;
    }
    Fill terminal = sweep_book(final_book, remaining, consumed);
    record.fills.push_back({final_period, terminal, true});
    if (terminal.executed < remaining) {
      record.failed = true;
      record.failure = "final book empty; cannot complete liquidation";
    }
  }
  record.shortfall_bps =
      record.failed ? std::nan("") : implementation_shortfall(record.reference_price, record.fills,
                                                              record.total_volume);
}

ISRecord execute_schedule(std::span<const SideLevels> books, std::span<const double> schedule,
                          double cap, double reference, Side side) {
  if (books.empty() || books.size() != schedule.size()) {
    throw Error(ErrorCategory::InvalidArgument,
                fmt::format("execute_schedule: {} books for {} scheduled periods", books.size(),
                            schedule.size()));
  }
  ISRecord record;
  record.side = side;
  record.reference_price = reference;
  for (double v : schedule) {
    if (v < 0.0) throw Error(ErrorCategory::InvalidArgument, "execute_schedule: negative volume");
    record.total_volume += v;
  }

  double carry = 0.0;
  double remaining = record.total_volume;
  for (std::size_t k = 0; k < books.size(); ++k) {
    const Fill fill = walk_book(books[k], schedule[k] + carry, cap);
    carry = fill.residual;
    remaining -= fill.executed;
    record.fills.push_back({k + 1, fill, false});
  }
  finalize_record(record, books.back(), remaining, books.size());
  return record;
}

ISRecord execute_schedule(std::span<const IntervalBar> bars, std::span<const double> schedule,
                          double cap, Side side, ReferencePrice reference) {
  if (bars.empty()) throw Error(ErrorCategory::InvalidArgument, "execute_schedule: no bars");
  std::vector<SideLevels> books;
  books.reserve(bars.size());
  for (const auto& bar : bars) books.push_back(bar.liquidity(side));
  ISRecord record = execute_schedule(books, schedule, cap, reference_price(bars.front(), side, reference), side);
  record.day = bars.front().day();
  record.hour = bars.front().hour;
  return record;
}

std::string records_csv_header(std::size_t periods) {
  std::string header = "run_id,day,hour,model,side,reference,total,shortfall_bps,status";
  for (std::size_t p = 1; p <= periods; ++p) header += fmt::format(",p{0}_req,p{0}_exec,p{0}_vwap", p);
  header += ",term_exec,term_vwap";
  return header;
}

std::string to_csv_row(const ISRecord& r, std::size_t periods) {
  std::string row = fmt::format("{},{},{},{},{},{},{},{},{}", r.run_id, format_date(r.day), r.hour,
                                r.model, to_string(r.side), r.reference_price, r.total_volume,
                                r.failed ? std::string("NA") : fmt::format("{}", r.shortfall_bps),
                                r.failed ? "failed" : "ok");
  for (std::size_t p = 1; p <= periods; ++p) {
    auto it = std::find_if(r.fills.begin(), r.fills.end(),
                           [p](const PeriodFill& pf) { return pf.period == p && !pf.terminal; });
    if (it == r.fills.end()) {
      row += ",0,0,0";
    } else {
      row += fmt::format(",{},{},{}", it->fill.requested, it->fill.executed, it->fill.vwap);
    }
  }
  auto term = std::find_if(r.fills.begin(), r.fills.end(), [](const PeriodFill& pf) { return pf.terminal; });
  if (term == r.fills.end()) {
    row += ",0,0";
  } else {
    row += fmt::format(",{},{}", term->fill.executed, term->fill.vwap);
  }
  return row;
}

void write_records_csv(std::ostream& out, std::span<const ISRecord> records, std::size_t periods) {
  out << records_csv_header(periods) << '\n';
  for (const auto& r : records) out << to_csv_row(r, periods) << '\n';
}

std::vector<ISRecord> read_records_csv(std::istream& in) {
  auto num = [](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw Error(ErrorCategory::Format, fmt::format("records csv: bad number '{}'", s));
    }
    return v;
  };

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCategory::Format, "records csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 11 || (header.size() - 11) % 3 != 0) {
    throw Error(ErrorCategory::Format, "records csv: unexpected header layout");
  }
  const std::size_t periods = (header.size() - 11) / 3;

  std::vector<ISRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw Error(ErrorCategory::Format, fmt::format("records csv: row has {} cells", cells.size()));
    }
    ISRecord r;
    r.run_id = cells[0];
    r.day = parse_date(cells[1]);
    r.hour = static_cast<int>(num(cells[2]));
    r.model = cells[3];
    r.side = parse_side(cells[4]);
    r.reference_price = num(cells[5]);
    r.total_volume = num(cells[6]);
    r.failed = cells[8] != "ok";
    r.shortfall_bps = r.failed ? std::nan("") : num(cells[7]);
    if (r.failed) r.failure = cells[8];
    for (std::size_t p = 0; p < periods; ++p) {
      Fill f;
      f.requested = num(cells[9 + 3 * p]);
      f.executed = num(cells[10 + 3 * p]);
      f.vwap = num(cells[11 + 3 * p]);
      f.residual = f.requested - f.executed;
      r.fills.push_back({p + 1, f, false});
    }
    Fill term;
    term.executed = num(cells[9 + 3 * periods]);
    term.vwap = num(cells[10 + 3 * periods]);
    term.requested = term.executed;
    if (term.executed > 0.0) r.fills.push_back({periods, term, true});
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace acrl
