#include "acrl/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>

namespace acrl {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

struct ColumnIndex {
  std::size_t ts = 0;
  std::array<std::size_t, kBookDepth> bp{}, bv{}, ap{}, av{};
  std::size_t width = 0;
};

ColumnIndex locate_columns(std::string_view header, const ColumnSchema& schema,
                           const std::string& source) {
  const auto names = split_fields(header);
  std::unordered_map<std::string_view, std::size_t> by_name;
  for (std::size_t i = 0; i < names.size(); ++i) by_name.emplace(names[i], i);

  auto find = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorCategory::Format,
                  fmt::format("{}: header is missing column '{}'", source, name));
    }
    return it->second;
  };

  ColumnIndex idx;
  idx.width = names.size();
  idx.ts = find(schema.timestamp);
  for (std::size_t k = 0; k < kBookDepth; ++k) {
    idx.bp[k] = find(schema.bid_price[k]);
    idx.bv[k] = find(schema.bid_volume[k]);
    idx.ap[k] = find(schema.ask_price[k]);
    idx.av[k] = find(schema.ask_volume[k]);
  }
  return idx;
}

std::string parse_row(std::string_view line, const ColumnIndex& idx, BookSnapshot& out) {
  const auto fields = split_fields(line);
  if (fields.size() != idx.width) {
    return fmt::format("expected {} fields, found {}", idx.width, fields.size());
  }
  try {
    out.ts = parse_timestamp(fields[idx.ts]);
  } catch (const Error& e) {
    return e.what();
  }
  auto read = [&](std::size_t col, double& dst) -> bool {
    auto v = parse_number(fields[col]);
    if (!v) return false;
    dst = *v;
    return true;
  };
  for (std::size_t k = 0; k < kBookDepth; ++k) {
    if (!read(idx.bp[k], out.bids[k].price) || !read(idx.bv[k], out.bids[k].volume) ||
        !read(idx.ap[k], out.asks[k].price) || !read(idx.av[k], out.asks[k].volume)) {
      return fmt::format("non-numeric level {} field", k + 1);
    }
  }
  return validate(out);
}

double side_depth(const SideLevels& levels) {
  double total = 0.0;
  for (const auto& l : levels) total += l.volume;
  return total;
}

}  // namespace

std::string validate(const BookSnapshot& s) {
  for (std::size_t k = 0; k < kBookDepth; ++k) {
    if (!(s.bids[k].price > 0.0) || !(s.asks[k].price > 0.0)) {
      return fmt::format("non-positive price at level {}", k + 1);
    }
    if (s.bids[k].volume < 0.0 || s.asks[k].volume < 0.0) {
      return fmt::format("negative volume at level {}", k + 1);
    }
    if (k > 0 && !(s.bids[k].price < s.bids[k - 1].price)) {
      return fmt::format("bid prices not strictly descending at level {}", k + 1);
    }
    if (k > 0 && !(s.asks[k].price > s.asks[k - 1].price)) {
      return fmt::format("ask prices not strictly ascending at level {}", k + 1);
    }
  }
  if (side_depth(s.bids) > 0.0 && side_depth(s.asks) > 0.0 &&
      !(s.asks[0].price > s.bids[0].price)) {
    return "crossed or locked book";
  }
  return {};
}

double quote_volume(const IntervalBar& bar, Side side) {
  return bar.liquidity(side)[0].volume;
}

IngestResult ingest_csv(std::istream& in, const ColumnSchema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCategory::Format, fmt::format("{}: missing header row", source));
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const ColumnIndex idx = locate_columns(line, schema, source);

  IngestResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    BookSnapshot snap;
    std::string reason = parse_row(line, idx, snap);
    if (!reason.empty()) {
      ++result.rejected_rows;
      result.diagnostics.push_back({line_no, std::move(reason)});
      continue;
    }
    result.snapshots.push_back(snap);
  }
  if (in.bad()) throw Error(ErrorCategory::Io, fmt::format("{}: read failure", source));
  if (result.snapshots.empty()) {
    throw Error(ErrorCategory::Data, fmt::format("{}: no valid rows ({} rejected)", source,
                                                 result.rejected_rows));
  }
  std::stable_sort(result.snapshots.begin(), result.snapshots.end(),
                   [](const BookSnapshot& a, const BookSnapshot& b) { return a.ts.utc_ms < b.ts.utc_ms; });
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, fmt::format("cannot open '{}'", path.string()));
  return ingest_csv(in, schema, path.string());
}

std::string depth_csv_header() {
  std::string header = "ts";
  for (std::size_t k = 1; k <= kBookDepth; ++k) header += fmt::format(",bp{0},bv{0}", k);
  for (std::size_t k = 1; k <= kBookDepth; ++k) header += fmt::format(",ap{0},av{0}", k);
  return header;
}

void write_depth_csv(std::ostream& out, std::span<const BookSnapshot> snapshots) {
  out << depth_csv_header() << '\n';
  fmt::memory_buffer buf;
  for (const auto& s : snapshots) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{}", format_timestamp(s.ts));
    for (const auto& l : s.bids) fmt::format_to(std::back_inserter(buf), ",{},{}", l.price, l.volume);
    for (const auto& l : s.asks) fmt::format_to(std::back_inserter(buf), ",{},{}", l.price, l.volume);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

std::vector<IntervalBar> aggregate_intervals(std::span<const BookSnapshot> snapshots, double tau_s,
                                             Side side) {
  if (snapshots.empty()) {
    throw Error(ErrorCategory::InvalidArgument, "aggregate_intervals: no snapshots");
  }
  if (!(tau_s > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "aggregate_intervals: tau must be positive");
  }
  const auto tau_ms = static_cast<std::int64_t>(std::llround(tau_s * 1000.0));
  if (tau_ms <= 0) throw Error(ErrorCategory::InvalidArgument, "aggregate_intervals: tau below 1ms");

  struct Accumulator {
    std::int32_t offset = 0;
    std::size_t count = 0;
    std::array<double, kBookDepth> bp{}, bv{}, ap{}, av{};
  };
  // Keyed by local-clock interval index so bars align to wall-clock boundaries.
  std::map<std::int64_t, Accumulator> buckets;
  for (const auto& s : snapshots) {
    const std::int64_t local = s.ts.local_ms();
    std::int64_t key = local / tau_ms;
    if (local % tau_ms != 0 && local < 0) --key;
    auto& acc = buckets[key];
    if (acc.count == 0) acc.offset = s.ts.offset_minutes;
    ++acc.count;
    for (std::size_t k = 0; k < kBookDepth; ++k) {
      acc.bp[k] += s.bids[k].price;
      acc.bv[k] += s.bids[k].volume;
      acc.ap[k] += s.asks[k].price;
      acc.av[k] += s.asks[k].volume;
    }
  }

  std::vector<IntervalBar> bars;
  bars.reserve(buckets.size());
  for (const auto& [key, acc] : buckets) {
    IntervalBar bar;
    const double n = static_cast<double>(acc.count);
    bar.start.offset_minutes = acc.offset;
    bar.start.utc_ms = key * tau_ms - std::int64_t{acc.offset} * 60'000;
    bar.duration_s = tau_s;
    bar.snapshot_count = acc.count;
    for (std::size_t k = 0; k < kBookDepth; ++k) {
      bar.avg_bids[k] = {acc.bp[k] / n, acc.bv[k] / n};
      bar.avg_asks[k] = {acc.ap[k] / n, acc.av[k] / n};
    }
    bar.spread = bar.avg_asks[0].price - bar.avg_bids[0].price;
    bar.quote_volume = quote_volume(bar, side);
    bar.hour = bar.start.local_hour();
    bars.push_back(bar);
  }
  return bars;
}

std::map<int, HistoricalDistribution> build_distributions(std::span<const IntervalBar> bars) {
  std::map<int, HistoricalDistribution> out;
  for (const auto& bar : bars) {
    auto& dist = out[bar.hour];
    dist.hour = bar.hour;
    dist.spread_samples.push_back(bar.spread);
    dist.volume_samples.push_back(bar.quote_volume);
  }
  for (auto& [hour, dist] : out) {
    std::sort(dist.spread_samples.begin(), dist.spread_samples.end());
    std::sort(dist.volume_samples.begin(), dist.volume_samples.end());
  }
  return out;
}

double percentile_of(const HistoricalDistribution& dist, DistributionField field, double value) {
  const auto& samples = field == DistributionField::Spread ? dist.spread_samples : dist.volume_samples;
  if (samples.empty()) {
    throw Error(ErrorCategory::Data,
                fmt::format("empty {} distribution for hour {}",
                            field == DistributionField::Spread ? "spread" : "volume", dist.hour));
  }
  const auto n = static_cast<double>(samples.size());
  const auto at_or_below = std::upper_bound(samples.begin(), samples.end(), value) - samples.begin();
  return std::max(static_cast<double>(at_or_below), 1.0) / n;
}

DataSplit split_by_day(std::span<const IntervalBar> bars, std::int64_t first_test_day) {
  DataSplit split;
  for (const auto& bar : bars) {
    (bar.day() < first_test_day ? split.training : split.testing).push_back(bar);
  }
  return split;
}

DataSplit split_by_fraction(std::span<const IntervalBar> bars, double fraction) {
  std::set<std::int64_t> days;
  for (const auto& bar : bars) days.insert(bar.day());
  if (days.size() < 2) {
    throw Error(ErrorCategory::Data, "need at least two trading days to split train/test");
  }
  const auto n = static_cast<long>(days.size());
  long k = std::lround(fraction * static_cast<double>(n));
  k = std::clamp(k, 1L, n - 1);
  return split_by_day(bars, *std::next(days.begin(), k));
}

}  // namespace acrl
