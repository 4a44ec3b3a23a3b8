#include <gtest/gtest.h>

#include <cstring>
#include <map>

#include "acrl/synthetic.hpp"

namespace acrl {
namespace {

TEST(Synthetic, SameSeedIsBitwiseIdentical) {
  const RegimeSchedule regime;
  const auto a = generate_synthetic(42, 3, regime);
  const auto b = generate_synthetic(42, 3, regime);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(BookSnapshot)), 0);
  EXPECT_NE(generate_synthetic(43, 3, regime), a);
}

TEST(Synthetic, ConstantRegimeHasConstantSpread) {
  const auto regime = RegimeSchedule::constant({0.10, 0.02, 1000.0, 1.0});
  for (const auto& s : generate_synthetic(1, 2, regime)) {
    EXPECT_NEAR(s.spread(), 0.10, 1e-9);
    EXPECT_EQ(validate(s), "");
  }
}

TEST(Synthetic, PlantedTightHourHasLowestMeanSpread) {
  RegimeSchedule regime;
  regime.default_probability = 0.1;
  regime.favourable_probability[11] = 0.95;
  std::map<int, std::pair<double, int>> by_hour;
  for (const auto& s : generate_synthetic(7, 20, regime)) {
    auto& [sum, n] = by_hour[s.ts.local_hour()];
    sum += s.spread();
    ++n;
  }
  const double planted = by_hour.at(11).first / by_hour.at(11).second;
  for (const auto& [h, acc] : by_hour) {
    if (h == 11) continue;
    EXPECT_LT(planted, acc.first / acc.second) << "hour " << h;
  }
}

TEST(Synthetic, SessionCalendarAndSnapshotCount) {
  SyntheticOptions opts;
  opts.snapshot_interval_s = 60.0;
  const auto snaps = generate_synthetic(2, 6, RegimeSchedule{}, opts);
  // 8 hours of one-minute snapshots per day, weekends skipped.
  EXPECT_EQ(snaps.size(), 6u * 8u * 60u);
  for (const auto& s : snaps) {
    EXPECT_LT(weekday(s.ts.local_day()), 5);
    EXPECT_GE(s.ts.local_hour(), 9);
    EXPECT_LT(s.ts.local_hour(), 17);
    EXPECT_EQ(s.ts.offset_minutes, 120);
  }
  EXPECT_EQ(format_date(snaps.back().ts.local_day()), "2012-01-09");
}

TEST(Synthetic, AlternatingFlipsOnClockParity) {
  RegimeSchedule regime;
  regime.alternating = true;
  regime.spread_jitter = 0.0;
  for (const auto& s : generate_synthetic(3, 1, regime)) {
    const auto block = s.ts.local_time_of_day_ms() / 300'000;
    const double expected = block % 2 == 0 ? regime.favourable.spread : regime.unfavourable.spread;
    EXPECT_NEAR(s.spread(), expected, 1e-9);
  }
}

TEST(Synthetic, RejectsBadArguments) {
  EXPECT_THROW(generate_synthetic(1, 0, RegimeSchedule{}), Error);
  SyntheticOptions opts;
  opts.close_hour = opts.open_hour;
  EXPECT_THROW(generate_synthetic(1, 1, RegimeSchedule{}, opts), Error);
}

}  // namespace
}  // namespace acrl
