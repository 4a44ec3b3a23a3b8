#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "acrl/rl_agent.hpp"

namespace acrl::testing {

/// Enumerable finite-horizon MDP for checking Q-learning against backward
/// induction. Market buckets (s, v) are drawn uniformly and independently
/// each period; the next inventory bucket is a fixed function of (t, i, a);
/// rewards are the true mean plus uniform noise.
///
/// Means are built backwards so every state's best action beats the
/// runner-up by at least `min_gap` in true Q, which keeps the comparison
/// free of near-ties.
struct SyntheticMdp {
  StateDims dims;
  ActionGrid grid;
  double noise = 5.0;
  std::vector<double> mean;             // QTable slot order
  std::vector<double> optimal_q;        // backward-induction Q*, same order
  std::vector<std::size_t> next_inventory;  // by (t, i, a)

  QTable blank() const { return QTable(dims, grid); }

  std::size_t slot(const QTable& layout, const StateTuple& x, std::size_t a) const {
    return layout.index(x) * grid.size() + a;
  }
  std::size_t next_of(std::size_t t, std::size_t i, std::size_t a) const {
    return next_inventory[((t - 1) * dims.inventory + (i - 1)) * grid.size() + a];
  }

  /// Optimal action per state index under Q*.
  std::vector<std::size_t> optimal_policy() const {
    std::vector<std::size_t> out(dims.state_count());
    const std::size_t A = grid.size();
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      auto first = optimal_q.begin() + static_cast<std::ptrdiff_t>(idx * A);
      out[idx] = static_cast<std::size_t>(std::max_element(first, first + static_cast<std::ptrdiff_t>(A)) - first);
    }
    return out;
  }

  static SyntheticMdp make(StateDims dims, ActionGrid grid, std::uint64_t seed, double min_gap = 2.0) {
    SyntheticMdp m;
    m.dims = dims;
    m.grid = grid;
    const std::size_t A = grid.size();
    const QTable layout(dims, grid);
    m.mean.assign(dims.state_count() * A, 0.0);
    m.optimal_q.assign(m.mean.size(), 0.0);
    m.next_inventory.resize(dims.periods * dims.inventory * A);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> bucket(1, dims.inventory);
    std::uniform_real_distribution<double> base(-60.0, -20.0);
    std::uniform_real_distribution<double> wiggle(0.0, 0.5);
    for (auto& n : m.next_inventory) n = bucket(rng);

    std::vector<std::size_t> ranks(A);
    const double markets = static_cast<double>(dims.spread * dims.volume);
    for (std::size_t t = 1; t <= dims.periods; ++t) {
      for (std::size_t i = 1; i <= dims.inventory; ++i) {
        for (std::size_t s = 1; s <= dims.spread; ++s) {
          for (std::size_t v = 1; v <= dims.volume; ++v) {
            const StateTuple x{t, i, s, v};
            std::iota(ranks.begin(), ranks.end(), 0);
            std::shuffle(ranks.begin(), ranks.end(), rng);
            const double b = base(rng);
            for (std::size_t a = 0; a < A; ++a) {
              double continuation = 0.0;
              if (t > 1) {
                const std::size_t ni = m.next_of(t, i, a);
                for (std::size_t ns = 1; ns <= dims.spread; ++ns) {
                  for (std::size_t nv = 1; nv <= dims.volume; ++nv) {
                    const StateTuple y{t - 1, ni, ns, nv};
                    double best = m.optimal_q[m.slot(layout, y, 0)];
                    for (std::size_t c = 1; c < A; ++c) best = std::max(best, m.optimal_q[m.slot(layout, y, c)]);
                    continuation += best / markets;
                  }
                }
              }
              const double target = b - (min_gap + 0.5) * static_cast<double>(ranks[a]) - wiggle(rng);
              m.optimal_q[m.slot(layout, x, a)] = target;
              m.mean[m.slot(layout, x, a)] = target - continuation;
            }
          }
        }
      }
    }
    return m;
  }
};

class MdpEpisode final : public EpisodeModel {
 public:
  MdpEpisode(const SyntheticMdp& mdp, std::mt19937_64& rng) : mdp_(mdp), layout_(mdp.blank()), rng_(rng) {
    std::uniform_int_distribution<std::size_t> s(1, mdp.dims.spread), v(1, mdp.dims.volume);
    for (std::size_t k = 0; k < mdp.dims.periods; ++k) market_.emplace_back(s(rng), v(rng));
  }

  std::size_t periods() const override { return market_.size(); }
  std::pair<std::size_t, std::size_t> market_state(std::size_t period) const override { return market_.at(period); }

  Transition step(std::size_t period, std::size_t inventory_bucket, std::size_t action) override {
    const std::size_t t = mdp_.dims.periods - period;
    const auto [s, v] = market_[period];
    std::uniform_real_distribution<double> noise(-mdp_.noise, mdp_.noise);
    Transition tr;
    tr.reward = mdp_.mean[mdp_.slot(layout_, StateTuple{t, inventory_bucket, s, v}, action)] + noise(rng_);
    tr.next_inventory = mdp_.next_of(t, inventory_bucket, action);
    return tr;
  }

 private:
  const SyntheticMdp& mdp_;
  QTable layout_;
  std::mt19937_64& rng_;
  std::vector<std::pair<std::size_t, std::size_t>> market_;
};

inline std::uint64_t min_visits(const QTable& q) {
  std::uint64_t lo = UINT64_MAX;
  for (std::size_t idx = 0; idx < q.dims().state_count(); ++idx) {
    for (auto c : q.visit_row(idx)) lo = std::min(lo, c);
  }
  return lo;
}

/// Sweeps fresh episodes until every (state, action) pair has `visits` updates.
inline std::size_t train_until(QTable& q, const SyntheticMdp& mdp, std::uint64_t visits, std::uint64_t seed,
                               const LearningSchedule& schedule = {}) {
  std::mt19937_64 rng(seed);
  std::uint64_t counter = 0;
  std::size_t episodes = 0;
  while (min_visits(q) < visits) {
    MdpEpisode episode(mdp, rng);
    sweep_episode(q, episode, schedule, counter);
    ++episodes;
  }
  return episodes;
}

}  // namespace acrl::testing
