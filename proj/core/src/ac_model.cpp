#include "acrl/ac_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "acrl/execution.hpp"

namespace acrl {

void validate(const ACParams& p) {
  auto fail = [](const std::string& what) { throw Error(ErrorCategory::InvalidArgument, "ACParams: " + what); };
  if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) fail("sigma must be >= 0");
  if (!(p.eta > 0.0) || !std::isfinite(p.eta)) fail("eta must be > 0");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) fail("lambda must be >= 0");
  if (!(p.tau_s > 0.0)) fail("tau must be > 0");
  if (p.periods < 1) fail("periods must be >= 1");
  if (!(p.volume > 0.0)) fail("volume must be > 0");
  if (!(1.0 - p.rho / (2.0 * p.eta) > 0.0)) fail("1 - rho*tau/(2 eta) must be positive");
}

double compute_kappa(const ACParams& p) {
  validate(p);
  const double risk = p.lambda * p.sigma * p.sigma;
  if (risk == 0.0) return 0.0;
  const double kappa_tilde_sq = risk / (p.eta * (1.0 - p.rho / (2.0 * p.eta)));
  // acosh(1 + y) without forming 1 + y, which loses y's low bits.
  const double y = 0.5 * kappa_tilde_sq;
  return std::log1p(y + std::sqrt(y * (y + 2.0)));
}

ACTrajectory compute_trajectory(const ACParams& p) {
  ACTrajectory traj;
  traj.kappa = compute_kappa(p);
  const std::size_t n = p.periods;
  const double X = p.volume;
  const double N = static_cast<double>(n);
  traj.holdings.resize(n + 1);
  traj.trades.resize(n);

  if (traj.kappa == 0.0) {
    for (std::size_t j = 0; j <= n; ++j) traj.holdings[j] = X * (1.0 - static_cast<double>(j) / N);
    for (std::size_t j = 0; j < n; ++j) traj.trades[j] = X / N;
  } else {
    // sinh ratios rewritten over exp(-kappa * ...) so nothing overflows.
    const double k = traj.kappa;
    const double denom = -std::expm1(-2.0 * k * N);
    for (std::size_t j = 0; j <= n; ++j) {
      const double jd = static_cast<double>(j);
      traj.holdings[j] = X * std::exp(-k * jd) * (-std::expm1(-2.0 * k * (N - jd))) / denom;
    }
    const double step = -std::expm1(-k);
    for (std::size_t j = 1; j <= n; ++j) {
      const double jd = static_cast<double>(j);
      traj.trades[j - 1] = X * step * (std::exp(-k * (jd - 1.0)) + std::exp(-k * (2.0 * N - jd))) / denom;
    }
  }
  traj.holdings.front() = X;
  traj.holdings.back() = 0.0;
  return traj;
}

ACTrajectory round_to_shares(const ACTrajectory& traj) {
  ACTrajectory out;
  out.kappa = traj.kappa;
  out.holdings.reserve(traj.holdings.size());
  for (double x : traj.holdings) out.holdings.push_back(std::round(x));
  out.trades.reserve(traj.trades.size());
  for (std::size_t j = 1; j < out.holdings.size(); ++j) {
    out.trades.push_back(out.holdings[j - 1] - out.holdings[j]);
  }
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCategory::InvalidArgument, "least_squares_slope: need >= 2 paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

Calibration calibrate(std::span<const IntervalBar> bars, double lambda, double tau_s,
                      const CalibrationOptions& options) {
  if (bars.size() < 2) throw Error(ErrorCategory::Data, "calibrate: need at least 2 bars");

  Calibration out;
  out.params.lambda = lambda;
  out.params.tau_s = tau_s;
  out.params.rho = 0.0;

  std::vector<double> changes;
  for (std::size_t i = 1; i < bars.size(); ++i) {
    const auto& prev = bars[i - 1];
    const auto& cur = bars[i];
    const auto gap_ms = cur.start.utc_ms - prev.start.utc_ms;
    if (cur.day() == prev.day() && gap_ms == std::llround(prev.duration_s * 1000.0)) {
      changes.push_back(cur.mid() - prev.mid());
    }
  }
  out.sigma_samples = changes.size();
  if (changes.size() >= 2) {
    double mean = 0.0;
    for (double c : changes) mean += c;
    mean /= static_cast<double>(changes.size());
    double ss = 0.0;
    for (double c : changes) ss += (c - mean) * (c - mean);
    out.params.sigma = std::sqrt(ss / static_cast<double>(changes.size() - 1));
  } else {
    out.warnings.push_back("calibrate: fewer than 2 consecutive bar pairs; sigma set to 0");
  }

  // Within-bar regression: each bar gets its own intercept (its half
  // spread), so the slope only reflects how price deteriorates with size.
  double sxy = 0.0;
  double sxx = 0.0;
  std::vector<double> rates;
  std::vector<double> impacts;
  for (const auto& bar : bars) {
    const auto& levels = bar.liquidity(options.side);
    double depth = 0.0;
    for (const auto& l : levels) depth += l.volume;
    const double mid = bar.mid();
    rates.clear();
    impacts.clear();
    for (double f : options.probe_fractions) {
      const double probe = std::floor(f * depth);
      if (probe < 1.0) continue;
      const Fill fill = walk_book(levels, probe, 1.0);
      if (fill.executed <= 0.0) continue;
      rates.push_back(fill.executed);
      impacts.push_back(options.side == Side::Buy ? fill.vwap - mid : mid - fill.vwap);
    }
    out.probe_points += rates.size();
    if (rates.size() < 2) continue;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      mx += rates[i];
      my += impacts[i];
    }
    mx /= static_cast<double>(rates.size());
    my /= static_cast<double>(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
      sxy += (rates[i] - mx) * (impacts[i] - my);
      sxx += (rates[i] - mx) * (rates[i] - mx);
    }
  }
  double eta = sxx > 0.0 ? sxy / sxx : 0.0;
  if (!(eta > options.eta_floor) || !std::isfinite(eta)) {
    out.warnings.push_back(fmt::format(
        "calibrate: degenerate impact fit (slope {}); eta floored at {}", eta, options.eta_floor));
    eta = options.eta_floor;
  }
  out.params.eta = eta;
  return out;
}

}  // namespace acrl
