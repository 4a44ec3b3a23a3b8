#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

#include "acrl/market_data.hpp"

namespace acrl::testing {

inline SideLevels levels(std::initializer_list<std::pair<double, double>> pv) {
  SideLevels out{};
  std::size_t k = 0;
  for (const auto& [p, v] : pv) out[k++] = {p, v};
  return out;
}

// The two books from the worked example.
inline SideLevels first_book() {
  return levels({{100.00, 3000}, {100.50, 4000}, {102.30, 5000}, {103.00, 6000}, {105.50, 2000}});
}
inline SideLevels second_book() {
  return levels({{99.80, 6000}, {99.90, 2000}, {101.30, 7000}, {107.00, 3000}, {108.50, 1000}});
}

/// Symmetric book around `mid`: level k sits half_spread + k * gap away.
inline BookSnapshot symmetric_snapshot(std::int64_t day, std::int64_t tod_ms, double mid, double spread,
                                       double l1, double gap = 0.01, double growth = 1.0,
                                       std::int32_t offset = 0) {
  BookSnapshot s;
  s.ts = make_timestamp(day, tod_ms, offset);
  double v = l1;
  for (std::size_t k = 0; k < kBookDepth; ++k) {
    const double off = 0.5 * spread + static_cast<double>(k) * gap;
    s.asks[k] = {mid + off, v};
    s.bids[k] = {mid - off, v};
    v *= growth;
  }
  return s;
}

/// Bar built directly from one snapshot's levels.
inline IntervalBar bar_from(const BookSnapshot& s, double duration_s = 300.0, Side side = Side::Buy) {
  IntervalBar b;
  b.start = s.ts;
  b.duration_s = duration_s;
  b.avg_bids = s.bids;
  b.avg_asks = s.asks;
  b.spread = s.spread();
  b.quote_volume = side == Side::Buy ? s.asks[0].volume : s.bids[0].volume;
  b.hour = s.ts.local_hour();
  b.snapshot_count = 1;
  return b;
}

inline constexpr std::int64_t kHourMs = 3'600'000;
inline constexpr std::int64_t kMinuteMs = 60'000;

}  // namespace acrl::testing
