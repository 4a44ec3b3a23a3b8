#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acrl/common.hpp"
#include "acrl/market_data.hpp"

namespace acrl {

/// Almgren-Chriss inputs. Every rate is per trading period: the formulas
/// run with the period length as the unit of time, so `tau_s` only records
/// how long a period is on the wall clock.
struct ACParams {
  double sigma = 0.0;   // mid-price sd per period
  double eta = 1e-6;    // temporary impact per (share / period)
  double rho = 0.0;     // permanent impact
  double lambda = 0.01; // risk aversion
  double tau_s = 300.0;
  std::size_t periods = 1;
  double volume = 1.0;
};

/// Throws Error{InvalidArgument} if any invariant is violated.
void validate(const ACParams& p);

struct ACTrajectory {
  std::vector<double> holdings;  // x_0..x_N
  std::vector<double> trades;    // n_1..n_N
  double kappa = 0.0;
};

double compute_kappa(const ACParams& p);

/// Closed-form holdings and trade list, real valued.
ACTrajectory compute_trajectory(const ACParams& p);

/// Rounds holdings to whole shares; trades become holding differences, so
/// the total is preserved exactly and the final period takes the residual.
ACTrajectory round_to_shares(const ACTrajectory& traj);

struct CalibrationOptions {
  Side side = Side::Buy;
  /// Probe sizes as fractions of each bar's visible depth on `side`.
  std::vector<double> probe_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double eta_floor = 1e-9;
};

struct Calibration {
  ACParams params;
  std::size_t sigma_samples = 0;
  std::size_t probe_points = 0;
  std::vector<std::string> warnings;
};

/// Least-squares slope of y on x (with intercept).
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// sigma from consecutive same-day bar mid changes; eta from a linear fit of
/// walked-book temporary impact (vwap vs pre-trade mid) against trade rate.
Calibration calibrate(std::span<const IntervalBar> bars, double lambda, double tau_s,
                      const CalibrationOptions& options = {});

}  // namespace acrl
