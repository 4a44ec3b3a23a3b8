// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>

#include "acrl/ac_model.hpp"
#include "acrl/backtest.hpp"
#include "acrl/execution.hpp"
#include "acrl/pipeline.hpp"
#include "acrl/rl_agent.hpp"
#include "acrl/synthetic.hpp"
#include "../mdp_oracle.hpp"
#include "../support.hpp"

namespace {

using namespace acrl;
using Big = boost::multiprecision::cpp_bin_float_50;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

// ---- planted-regime scenario shared by criteria 4, 5 and 7 ----

constexpr int kSeeds = 10;

std::vector<IntervalBar> planted_bars(std::uint64_t seed) {
  RegimeSchedule regime;
  regime.default_probability = 0.5;
  regime.unfavourable.spread = 0.3;
  return aggregate_intervals(generate_synthetic(seed, 60, regime), 300);
}

RunConfig planted_config(std::size_t periods) {
  RunConfig cfg;
  cfg.volume = 5000;
  cfg.dims = StateDims{periods, 12, 2, 2};
  cfg.grid = ActionGrid::uniform(0.0, 2.0, 0.5);
  cfg.hour = 10;
  cfg.lambda = 1e-4;
  return cfg;
}

PipelineResult planted_run(std::uint64_t seed, std::size_t periods) {
  PipelineOptions options;
  options.trace_stride = 1;
  return run_pipeline(split_by_fraction(planted_bars(seed), 0.5), planted_config(periods), options);
}

// ---- criteria ----

Verdict worked_example() {
  Verdict v;
  const Fill a = walk_book(testing::first_book(), 10000);
  const Fill b = walk_book(testing::second_book(), 10000);
  // The first VWAP is 100.89 exactly and is printed at one decimal.
  v.require(std::round(a.vwap * 10) / 10 == 100.9, fmt::format("first VWAP {}", a.vwap));
  v.require(std::abs(b.vwap - 100.12) < 1e-12, fmt::format("second VWAP {}", b.vwap));

  const std::vector<PeriodFill> even{{1, a, false}, {2, b, false}};
  const std::vector<PeriodFill> skewed{{1, walk_book(testing::first_book(), 8000), false},
                                       {2, walk_book(testing::second_book(), 12000), false}};
  const double is_even = implementation_shortfall(99.5, even, 20000);
  const double is_skewed = implementation_shortfall(99.5, skewed, 20000);
  v.require(std::abs(is_even + 101) <= 0.5, fmt::format("even schedule IS {:.3f}", is_even));
  v.require(std::abs(is_skewed + 91) <= 0.5, fmt::format("skewed schedule IS {:.3f}", is_skewed));
  v.detail = v.pass ? fmt::format("vwap {:.4f} {:.4f}, IS {:.3f} {:.3f} bps", a.vwap, b.vwap, is_even, is_skewed)
                    : v.detail;
  return v;
}

Verdict trajectory_identities() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_kappa = 0.0;
  for (int draw = 0; draw < 1000 && v.pass; ++draw) {
    ACParams p;
    p.sigma = 1e-3 + 2.0 * u(rng);
    p.eta = 1e-5 + u(rng);
    p.lambda = std::pow(10.0, -8.0 + 10.0 * u(rng));
    p.periods = 1 + static_cast<std::size_t>(u(rng) * 40);
    p.volume = 1.0 + std::floor(u(rng) * 1e6);

    const auto traj = compute_trajectory(p);
    v.require(traj.holdings.front() == p.volume && traj.holdings.back() == 0.0, fmt::format("draw {} boundary", draw));
    const double sum = std::accumulate(traj.trades.begin(), traj.trades.end(), 0.0);
    v.require(std::abs(sum - p.volume) <= 1e-9 * p.volume, fmt::format("draw {} sum {}", draw, sum));
    const auto rounded = round_to_shares(traj);
    v.require(std::accumulate(rounded.trades.begin(), rounded.trades.end(), 0.0) == p.volume,
              fmt::format("draw {} rounded sum", draw));
    for (std::size_t j = 1; j < traj.holdings.size(); ++j) {
      v.require(traj.holdings[j] < traj.holdings[j - 1], fmt::format("draw {} not decreasing at {}", draw, j));
    }

    const Big kt2 = Big(p.lambda) * Big(p.sigma) * Big(p.sigma) / (Big(p.eta) * (1 - Big(p.rho) / (2 * Big(p.eta))));
    const double oracle = static_cast<double>(boost::multiprecision::acosh(1 + kt2 / 2));
    const double rel = std::abs(traj.kappa - oracle) / oracle;
    worst_kappa = std::max(worst_kappa, rel);
    v.require(rel <= 1e-12, fmt::format("draw {} kappa rel err {:.3g}", draw, rel));

    // Tiny-lambda copy must sit on the straight line.
    ACParams flat = p;
    flat.lambda = 1e-24;
    flat.sigma = 1e-3;
    const auto lin = compute_trajectory(flat);
    for (std::size_t j = 0; j < lin.holdings.size(); ++j) {
      const double expected = p.volume * (1.0 - static_cast<double>(j) / static_cast<double>(p.periods));
      v.require(std::abs(lin.holdings[j] - expected) <= 1e-6 * p.volume, fmt::format("draw {} linear limit", draw));
    }
  }
  if (v.pass) v.detail = fmt::format("1000 draws, worst kappa rel err {:.2g}", worst_kappa);
  return v;
}

Verdict dp_oracle() {
  Verdict v;
  const auto mdp = testing::SyntheticMdp::make(StateDims{4, 2, 2, 2}, ActionGrid::uniform(0.0, 2.0, 0.25), 11);
  if (mdp.grid.size() != 9) return {false, "expected 9 actions"};
  QTable q = mdp.blank();
  const auto episodes = testing::train_until(q, mdp, 500, 12);
  const auto optimal = mdp.optimal_policy();
  const std::size_t A = mdp.grid.size();
  std::size_t mismatched = 0;
  double worst = 0.0;
  std::size_t worst_t = 0;
  for (std::size_t idx = 0; idx < optimal.size(); ++idx) {
    mismatched += greedy_action(q, idx) != optimal[idx];
    for (std::size_t a = 0; a < A; ++a) {
      const double truth = mdp.optimal_q[idx * A + a];
      const double rel = std::abs(q.row(idx)[a] - truth) / std::abs(truth);
      if (rel > worst) {
        worst = rel;
        worst_t = q.state(idx).t;
      }
    }
  }
  v.require(mismatched == 0, "greedy policy disagrees with DP");
  v.require(worst <= 0.05, "Q outside 5% of DP");
  v.detail = fmt::format("{} ({}/{} states agree with DP, worst Q rel err {:.4f} at t={}, {} episodes)",
                         v.pass ? "ok" : v.detail, optimal.size() - mismatched, optimal.size(), worst, worst_t,
                         episodes);
  return v;
}

Verdict planted_improvement(const std::vector<PipelineResult>& runs) {
  int wins = 0;
  for (const auto& r : runs) wins += r.stats.median_rl > r.stats.median_ac;
  return {wins >= 8, fmt::format("RL median better in {}/{} seeds", wins, runs.size())};
}

// First trace visit after which the fraction stays within 0.05 of its final value.
std::uint64_t plateau_visit(const std::vector<TracePoint>& trace) {
  const double final_value = trace.back().correct_fraction;
  for (std::size_t k = trace.size(); k-- > 0;) {
    if (std::abs(trace[k].correct_fraction - final_value) > 0.05) return trace[k].visit + 1;
  }
  return 0;
}

Verdict convergence(const std::vector<PipelineResult>& runs) {
  int good = 0;
  std::string seeds;
  for (const auto& r : runs) {
    const auto& trace = r.training.trace;
    if (trace.empty()) continue;
    const double final_value = trace.back().correct_fraction;
    const auto plateau = plateau_visit(trace);
    const bool ok = final_value >= 0.9 && plateau <= 1500;
    good += ok;
    seeds += fmt::format(" {:.3f}@{}", final_value, plateau);
  }
  return {good >= 8, fmt::format("{}/{} seeds reach >=0.9 and settle by 1500 visits; final@plateau:{}", good,
                                 runs.size(), seeds)};
}

Verdict dispersion(const std::vector<PipelineResult>& runs) {
  double ac = 0.0, rl = 0.0;
  for (const auto& r : runs) {
    ac += r.stats.std_ac;
    rl += r.stats.std_rl;
  }
  ac /= static_cast<double>(runs.size());
  rl /= static_cast<double>(runs.size());
  return {rl >= ac, fmt::format("mean std AC {:.4f}%, RL {:.4f}%", ac, rl)};
}

std::string normalised_row(ISRecord r, std::size_t periods) {
  r.model = "AC";
  return to_csv_row(r, periods);
}

Verdict liquidation_invariants() {
  Verdict v;
  std::mt19937_64 rng(77);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::size_t records = 0;
  for (int trial = 0; trial < 12 && v.pass; ++trial) {
    RegimeSchedule regime;
    regime.default_probability = 0.2 + 0.6 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto bars = aggregate_intervals(generate_synthetic(1000 + trial, 8, regime), 300);
    const auto split = split_by_fraction(bars, 0.5);

    RunConfig cfg;
    cfg.volume = std::vector<double>{1000, 5000, 20000, 100000}[pick(0, 3)];
    cfg.dims = StateDims{static_cast<std::size_t>(pick(1, 6)), static_cast<std::size_t>(pick(2, 6)),
                         static_cast<std::size_t>(pick(2, 4)), static_cast<std::size_t>(pick(2, 4))};
    cfg.grid = ActionGrid::uniform(0.0, 2.0, std::vector<double>{0.25, 0.5, 1.0}[pick(0, 2)]);
    cfg.hour = pick(9, 13);
    cfg.lambda = std::pow(10.0, -pick(2, 6));
    cfg.cap = std::vector<double>{0.1, 0.2, 1.0}[pick(0, 2)];
    const std::string label = fmt::format("trial {} V={} T={}", trial, cfg.volume, cfg.dims.periods);

    PipelineOptions options;
    options.trace_stride = 25;
    const auto first = run_pipeline(split, cfg, options);
    for (const auto* side : {&first.ac, &first.rl}) {
      for (const auto& r : *side) {
        ++records;
        v.require(!r.failed && r.executed() == cfg.volume, fmt::format("{} day {} executed {}", label, r.day,
                                                                        r.executed()));
      }
    }

    const auto identity = Policy::constant(cfg.dims, cfg.grid, *cfg.grid.identity());
    const auto same = run_rl(cfg, split.testing, first.trajectory, identity, first.distributions);
    v.require(same.size() == first.ac.size(), label + " identity run size");
    for (std::size_t d = 0; d < std::min(same.size(), first.ac.size()); ++d) {
      v.require(normalised_row(same[d], cfg.dims.periods) == normalised_row(first.ac[d], cfg.dims.periods),
                fmt::format("{} identity differs on day {}", label, first.ac[d].day));
    }

    auto report = [&](const PipelineResult& r) {
      const ReportKey key{cfg.volume, cfg.dims.periods, ibw_label(cfg.dims), cfg.hour};
      const std::vector<ReportRow> rows{{key, r.stats}};
      const std::vector<TraceSeries> traces{{key, r.training.trace}};
      const std::vector<std::pair<std::string, std::string>> echo{{"trial", std::to_string(trial)}};
      const auto b = render_report(rows, traces, echo);
      std::string records_csv;
      for (const auto& rec : r.ac) records_csv += to_csv_row(rec, cfg.dims.periods);
      for (const auto& rec : r.rl) records_csv += to_csv_row(rec, cfg.dims.periods);
      return b.table1 + b.table2 + b.fig2_trace + records_csv;
    };
    v.require(report(first) == report(run_pipeline(split, cfg, options)), label + " rerun not byte-identical");
  }
  if (v.pass) v.detail = fmt::format("12 random configs, {} records fully liquidated", records);
  return v;
}

int report_line(int id, const char* name, const Verdict& v, double seconds, double budget_s) {
  const bool in_time = budget_s <= 0 || seconds < budget_s;
  const bool ok = v.pass && in_time;
  std::string detail = v.detail;
  if (!in_time) detail += fmt::format(" (over {:.0f}s budget)", budget_s);
  std::printf("%s criterion %d %s: %s [%.2fs]\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
  return ok ? 0 : 1;
}

template <class F>
std::pair<Verdict, double> timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = f();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  return {v, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

std::vector<PipelineResult> planted_runs(std::size_t periods) {
  std::vector<PipelineResult> out;
  for (int seed = 1; seed <= kSeeds; ++seed) out.push_back(planted_run(static_cast<std::uint64_t>(seed), periods));
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  {
    auto [v, s] = timed(worked_example);
    failures += report_line(1, "worked-example exactness", v, s, 1.0);
  }
  {
    auto [v, s] = timed(trajectory_identities);
    failures += report_line(2, "trajectory identities", v, s, 10.0);
  }
  {
    auto [v, s] = timed(dp_oracle);
    failures += report_line(3, "DP-oracle policy equivalence", v, s, 120.0);
  }

  std::vector<PipelineResult> four, two;
  auto [v4, s4] = timed([&] {
    four = planted_runs(4);
    return planted_improvement(four);
  });
  failures += report_line(4, "planted-regime improvement", v4, s4, 0);

  auto [v5, s5] = timed([&] {
    two = planted_runs(2);
    return convergence(two);
  });
  failures += report_line(5, "correct-action convergence", v5, s5, 120.0);

  {
    auto [v, s] = timed(liquidation_invariants);
    failures += report_line(6, "liquidation and identity invariants", v, s, 0);
  }
  {
    auto [v, s] = timed([&] { return four.empty() ? Verdict{false, "no planted runs"} : dispersion(four); });
    failures += report_line(7, "dispersion direction", v, s + s4, 0);
  }
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
