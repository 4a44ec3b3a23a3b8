#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "acrl/market_data.hpp"

namespace acrl {

/// Shape of one side of the book while a regime is active. Both sides are
/// built symmetrically around the mid.
struct LiquidityRegime {
  double spread = 0.05;
  double level_gap = 0.02;
  double l1_volume = 5000.0;
  double depth_growth = 1.0;  // volume multiplier per deeper level
};

/// Which liquidity regime is active when. Each aligned interval of
/// `interval_s` seconds independently draws the favourable regime with the
/// probability configured for its hour, so tight/deep periods land at
/// planted, seed-determined times. With `alternating` set the draw is
/// replaced by clock parity: even intervals favourable, odd ones not.
struct RegimeSchedule {
  LiquidityRegime favourable{0.02, 0.01, 8000.0, 1.2};
  LiquidityRegime unfavourable{0.12, 0.05, 2000.0, 1.0};
  std::map<int, double> favourable_probability;
  double default_probability = 0.5;
  double interval_s = 300.0;
  double spread_jitter = 0.1;  // relative, uniform in [-j, j] per snapshot
  double volume_jitter = 0.1;
  bool alternating = false;

  double probability_for(int hour) const;
  /// Every interval uses `regime`, no jitter.
  static RegimeSchedule constant(const LiquidityRegime& regime);
};

struct SyntheticOptions {
  std::int64_t first_day = 15341;  // 2012-01-02, a Monday
  int open_hour = 9;
  int close_hour = 17;
  double snapshot_interval_s = 30.0;
  double initial_mid = 100.0;
  double mid_step_sd = 0.005;  // arithmetic random walk increment per snapshot
  std::int32_t offset_minutes = 120;
  bool skip_weekends = true;
};

/// Deterministic per (seed, days, regime, options).
std::vector<BookSnapshot> generate_synthetic(std::uint64_t seed, int days,
                                             const RegimeSchedule& regime,
                                             const SyntheticOptions& options = {});

}  // namespace acrl
