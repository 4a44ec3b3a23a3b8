#include "acrl/synthetic.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace acrl {

double RegimeSchedule::probability_for(int hour) const {
  auto it = favourable_probability.find(hour);
  return it == favourable_probability.end() ? default_probability : it->second;
}

RegimeSchedule RegimeSchedule::constant(const LiquidityRegime& regime) {
  RegimeSchedule s;
  s.favourable = regime;
  s.unfavourable = regime;
  s.spread_jitter = 0.0;
  s.volume_jitter = 0.0;
  return s;
}

std::vector<BookSnapshot> generate_synthetic(std::uint64_t seed, int days,
                                             const RegimeSchedule& regime,
                                             const SyntheticOptions& options) {
  if (days < 1) throw Error(ErrorCategory::InvalidArgument, "generate_synthetic: days must be >= 1");
  if (!(options.snapshot_interval_s > 0.0) || !(regime.interval_s > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "generate_synthetic: intervals must be positive");
  }
  if (options.close_hour <= options.open_hour) {
    throw Error(ErrorCategory::InvalidArgument, "generate_synthetic: empty session");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shock(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto jitter = [&](double amount) { return amount > 0.0 ? 1.0 + amount * (2.0 * unit(rng) - 1.0) : 1.0; };

  const auto step_ms = static_cast<std::int64_t>(std::llround(options.snapshot_interval_s * 1000.0));
  const auto regime_ms = static_cast<std::int64_t>(std::llround(regime.interval_s * 1000.0));
  const std::int64_t open_ms = std::int64_t{options.open_hour} * 3'600'000;
  const std::int64_t close_ms = std::int64_t{options.close_hour} * 3'600'000;

  std::vector<BookSnapshot> out;
  out.reserve(static_cast<std::size_t>(days) *
              static_cast<std::size_t>((close_ms - open_ms) / step_ms + 1));

  double mid = options.initial_mid;
  std::int64_t day = options.first_day;
  for (int emitted = 0; emitted < days; ++day) {
    if (options.skip_weekends && weekday(day) >= 5) continue;
    ++emitted;

    std::int64_t current_block = -1;
    const LiquidityRegime* active = &regime.unfavourable;
    for (std::int64_t tod = open_ms; tod < close_ms; tod += step_ms) {
      const std::int64_t block = tod / regime_ms;
      if (block != current_block) {
        current_block = block;
        const int hour = static_cast<int>(tod / 3'600'000);
        const bool favourable =
            regime.alternating ? block % 2 == 0 : unit(rng) < regime.probability_for(hour);
        active = favourable ? &regime.favourable : &regime.unfavourable;
      }
      mid += options.mid_step_sd * shock(rng);

      BookSnapshot snap;
      snap.ts = make_timestamp(day, tod, options.offset_minutes);
      const double half_spread = 0.5 * active->spread * jitter(regime.spread_jitter);
      const double l1 = active->l1_volume * jitter(regime.volume_jitter);
      double volume = l1;
      for (std::size_t k = 0; k < kBookDepth; ++k) {
        const double offset = half_spread + static_cast<double>(k) * active->level_gap;
        const double shares = std::max(1.0, std::round(volume));
        snap.asks[k] = {mid + offset, shares};
        snap.bids[k] = {mid - offset, shares};
        volume *= active->depth_growth;
      }
      if (!(snap.bids[kBookDepth - 1].price > 0.0)) {
        throw Error(ErrorCategory::Numeric,
                    fmt::format("generate_synthetic: random walk drove bid below zero on {}",
                                format_date(day)));
      }
      out.push_back(snap);
    }
  }
  return out;
}

}  // namespace acrl
