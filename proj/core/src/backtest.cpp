#include "acrl/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace acrl {

namespace {

std::int64_t tau_ms(const IntervalBar& bar) { return std::llround(bar.duration_s * 1000.0); }

// Index range [first, first + periods) is contiguous on one day.
bool contiguous(std::span<const IntervalBar> bars, std::size_t first, std::size_t periods) {
  if (first + periods > bars.size()) return false;
  const auto step = tau_ms(bars[first]);
  for (std::size_t m = 1; m < periods; ++m) {
    const auto& b = bars[first + m];
    if (b.day() != bars[first].day() ||
        b.start.utc_ms != bars[first].start.utc_ms + static_cast<std::int64_t>(m) * step) {
      return false;
    }
  }
  return true;
}

std::string format_value(double v) { return fmt::format("{:.4f}", v); }

std::string format_optional(const std::optional<double>& v) { return v ? format_value(*v) : "NA"; }

std::string echo_block(std::span<const std::pair<std::string, std::string>> config_echo) {
  std::string out;
  for (const auto& [k, v] : config_echo) out += fmt::format("# {}={}\n", k, v);
  return out;
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCategory::Config, "RunConfig: " + what); };
  if (!(volume > 0.0)) fail("V must be > 0");
  if (dims.periods < 1) fail("T must be >= 1");
  if (hour < 0 || hour > 23) fail("H must be an hour of the day");
  if (dims.inventory < 2 || dims.spread < 2 || dims.volume < 2) fail("I, B and W must be >= 2");
  if (!(cap > 0.0) || cap > 1.0) fail("cap must be in (0, 1]");
  if (!(tau_s > 0.0)) fail("tau must be > 0");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
}

TrainingConfig RunConfig::training(const LearningSchedule& schedule, std::size_t trace_stride) const {
  TrainingConfig t;
  t.dims = dims;
  t.grid = grid;
  t.schedule = schedule;
  t.volume = volume;
  t.cap = cap;
  t.side = side;
  t.trace_stride = trace_stride;
  return t;
}

std::vector<DayWindow> day_windows(std::span<const IntervalBar> bars, std::size_t periods, int hour,
                                   std::vector<std::string>* diagnostics) {
  std::vector<DayWindow> out;
  std::set<std::int64_t> days;
  std::set<std::int64_t> found;
  for (std::size_t j = 0; j < bars.size(); ++j) {
    days.insert(bars[j].day());
    const auto tod = bars[j].start.local_time_of_day_ms();
    if (tod != std::int64_t{hour} * 3'600'000 || found.count(bars[j].day())) continue;
    if (!contiguous(bars, j, periods)) continue;
    found.insert(bars[j].day());
    DayWindow w;
    w.day = bars[j].day();
    w.bars.assign(bars.begin() + static_cast<std::ptrdiff_t>(j),
                  bars.begin() + static_cast<std::ptrdiff_t>(j + periods));
    out.push_back(std::move(w));
  }
  if (diagnostics) {
    for (auto d : days) {
      if (!found.count(d)) {
        diagnostics->push_back(fmt::format("{}: no {} consecutive bars from {:02}:00; day skipped",
                                           format_date(d), periods, hour));
      }
    }
  }
  return out;
}

std::vector<Episode> training_episodes(std::span<const IntervalBar> bars, std::size_t periods, int hour,
                                       Side side, ReferencePrice reference) {
  std::vector<Episode> out;
  for (std::size_t j = 0; j < bars.size(); ++j) {
    if (bars[j].hour != hour || !contiguous(bars, j, periods)) continue;
    Episode e;
    e.bars.assign(bars.begin() + static_cast<std::ptrdiff_t>(j),
                  bars.begin() + static_cast<std::ptrdiff_t>(j + periods));
    e.reference = reference_price(e.bars.front(), side, reference);
    out.push_back(std::move(e));
  }
  return out;
}

ISRecord execute_policy(const RunConfig& cfg, const DayWindow& window, const ACTrajectory& ac,
                        const Policy& policy, const std::map<int, HistoricalDistribution>& dists) {
  const std::size_t T = cfg.dims.periods;
  if (window.bars.size() != T || ac.trades.size() != T) {
    throw Error(ErrorCategory::InvalidArgument, "execute_policy: window/trajectory length differs from T");
  }
  ISRecord record;
  record.model = "RL";
  record.day = window.day;
  record.hour = window.bars.front().hour;
  record.side = cfg.side;
  record.total_volume = cfg.volume;
  record.reference_price = reference_price(window.bars.front(), cfg.side, cfg.reference);

  double remaining = cfg.volume;
  double carry = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    const auto& bar = window.bars[k];
    const StateTuple x = encode_state(T - k, remaining, cfg.volume, bar, distribution_for(dists, bar.hour), cfg.dims);
    const double base = rescaled_child_volume(ac, k, remaining - carry);
    const double request = std::clamp(std::round(policy.beta(x) * base) + carry, 0.0, remaining);
    const Fill fill = walk_book(bar.liquidity(cfg.side), request, cfg.cap);
    carry = fill.residual;
    remaining -= fill.executed;
    record.fills.push_back({k + 1, fill, false});
  }
  finalize_record(record, window.bars.back().liquidity(cfg.side), remaining, T);
  return record;
}

std::vector<ISRecord> run_ac(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, std::vector<std::string>* diagnostics) {
  cfg.validate();
  std::vector<ISRecord> out;
  for (const auto& w : day_windows(test_bars, cfg.dims.periods, cfg.hour, diagnostics)) {
    ISRecord r = execute_schedule(w.bars, ac.trades, cfg.cap, cfg.side, cfg.reference);
    r.model = "AC";
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ISRecord> run_rl(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, const Policy& policy,
                             const std::map<int, HistoricalDistribution>& dists,
                             std::vector<std::string>* diagnostics) {
  cfg.validate();
  std::vector<ISRecord> out;
  for (const auto& w : day_windows(test_bars, cfg.dims.periods, cfg.hour, diagnostics)) {
    out.push_back(execute_policy(cfg, w, ac, policy, dists));
  }
  return out;
}

std::vector<ISRecord> run_rl(const RunConfig& cfg, std::span<const IntervalBar> test_bars,
                             const ACTrajectory& ac, const QTable& q,
                             const std::map<int, HistoricalDistribution>& dists,
                             std::vector<std::string>* diagnostics) {
  return run_rl(cfg, test_bars, ac, extract_policy(q), dists, diagnostics);
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCategory::InvalidArgument, "median of empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

ISStatistics compare(std::span<const ISRecord> ac, std::span<const ISRecord> rl) {
  if (ac.empty() || rl.empty()) throw Error(ErrorCategory::Data, "compare: empty record list");
  std::map<std::int64_t, const ISRecord*> rl_by_day;
  for (const auto& r : rl) {
    if (!r.failed) rl_by_day[r.day] = &r;
  }
  std::map<std::int64_t, const ISRecord*> ac_by_day;
  for (const auto& r : ac) {
    if (!r.failed && rl_by_day.count(r.day)) ac_by_day[r.day] = &r;
  }
  if (ac_by_day.empty()) throw Error(ErrorCategory::Data, "compare: no day has both AC and RL results");

  ISStatistics s;
  std::vector<double> ac_perf, rl_perf;
  for (const auto& [day, a] : ac_by_day) {
    const ISRecord* r = rl_by_day.at(day);
    s.days.push_back(day);
    s.ac_bps.push_back(a->shortfall_bps);
    s.rl_bps.push_back(r->shortfall_bps);
    ac_perf.push_back(a->performance_bps());
    rl_perf.push_back(r->performance_bps());
  }
  s.n_days = s.days.size();
  s.median_ac = median(s.ac_bps);
  s.median_rl = median(s.rl_bps);
  const double pa = median(ac_perf);
  const double pr = median(rl_perf);
  if (pa != 0.0) s.median_improvement_pct = (pr - pa) / std::abs(pa) * 100.0;
  s.std_ac = sample_stddev(s.ac_bps) / 100.0;
  s.std_rl = sample_stddev(s.rl_bps) / 100.0;
  return s;
}

std::string ibw_label(const StateDims& dims) {
  if (dims.inventory == dims.spread && dims.spread == dims.volume) return fmt::format("{}", dims.inventory);
  return fmt::format("{}/{}/{}", dims.inventory, dims.spread, dims.volume);
}

ReportBundle render_report(std::span<const ReportRow> rows, std::span<const TraceSeries> traces,
                           std::span<const std::pair<std::string, std::string>> config_echo) {
  using GroupKey = std::tuple<double, std::size_t, std::string>;
  std::set<int> hours;
  std::map<GroupKey, std::map<int, const ISStatistics*>> groups;
  for (const auto& row : rows) {
    hours.insert(row.key.hour);
    groups[{row.key.volume, row.key.periods, row.key.ibw}][row.key.hour] = &row.stats;
  }

  const std::string echo = echo_block(config_echo);
  ReportBundle bundle;

  std::string t1 = echo + "V,T,IBW";
  for (int h : hours) t1 += fmt::format(",H{}", h);
  t1 += ",Average\n";
  std::string t2 = echo + "V,T,IBW,std_ac_pct,std_rl_pct,improvement_pct\n";
  std::vector<double> col_ac, col_rl, col_imp;

  for (const auto& [gk, by_hour] : groups) {
    const auto& [volume, periods, ibw] = gk;
    t1 += fmt::format("{},{},{}", volume, periods, ibw);
    std::vector<double> improvements, std_ac, std_rl;
    for (int h : hours) {
      auto it = by_hour.find(h);
      std::optional<double> imp;
      if (it != by_hour.end()) {
        imp = it->second->median_improvement_pct;
        std_ac.push_back(it->second->std_ac);
        std_rl.push_back(it->second->std_rl);
      }
      if (imp) improvements.push_back(*imp);
      t1 += "," + format_optional(imp);
    }
    const auto avg_imp = mean_of(improvements);
    t1 += "," + format_optional(avg_imp) + "\n";

    const auto avg_ac = mean_of(std_ac);
    const auto avg_rl = mean_of(std_rl);
    t2 += fmt::format("{},{},{},{},{},{}\n", volume, periods, ibw, format_optional(avg_ac),
                      format_optional(avg_rl), format_optional(avg_imp));
    if (avg_ac) col_ac.push_back(*avg_ac);
    if (avg_rl) col_rl.push_back(*avg_rl);
    if (avg_imp) col_imp.push_back(*avg_imp);
  }
  t2 += fmt::format("Average,,,{},{},{}\n", format_optional(mean_of(col_ac)),
                    format_optional(mean_of(col_rl)), format_optional(mean_of(col_imp)));

  std::vector<const TraceSeries*> sorted;
  for (const auto& t : traces) sorted.push_back(&t);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->key < b->key; });
  std::string f2 = echo + "V,T,IBW,H,tuple_visit_index,pct_correct_actions\n";
  for (const auto* series : sorted) {
    for (const auto& p : series->trace) {
      f2 += fmt::format("{},{},{},{},{},{}\n", series->key.volume, series->key.periods, series->key.ibw,
                        series->key.hour, p.visit, format_value(100.0 * p.correct_fraction));
    }
  }

  bundle.table1 = std::move(t1);
  bundle.table2 = std::move(t2);
  bundle.fig2_trace = std::move(f2);
  return bundle;
}

void write_report(const std::filesystem::path& dir, const ReportBundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  auto put = [&](const char* name, const std::string& content) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error(ErrorCategory::Io, fmt::format("cannot write '{}'", path.string()));
  };
  put("table1.csv", bundle.table1);
  put("table2.csv", bundle.table2);
  put("fig2_trace.csv", bundle.fig2_trace);
}

}  // namespace acrl
