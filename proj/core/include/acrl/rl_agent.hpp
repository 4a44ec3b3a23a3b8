#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acrl/ac_model.hpp"
#include "acrl/execution.hpp"
#include "acrl/market_data.hpp"

namespace acrl {

struct StateDims {
  std::size_t periods = 4;    // T
  std::size_t inventory = 5;  // I
  std::size_t spread = 5;     // B
  std::size_t volume = 5;     // W

  std::size_t state_count() const { return periods * inventory * spread * volume; }
  friend bool operator==(const StateDims&, const StateDims&) = default;
};

/// <t, i, s, v>, all 1-based. `t` counts remaining periods, so t == 1 is
/// the final period before the absorbing state.
struct StateTuple {
  std::size_t t = 1;
  std::size_t i = 1;
  std::size_t s = 1;
  std::size_t v = 1;

  friend bool operator==(const StateTuple&, const StateTuple&) = default;
};

class ActionGrid {
 public:
  ActionGrid() : ActionGrid(uniform(0.0, 2.0, 0.25)) {}
  explicit ActionGrid(std::vector<double> betas);

  /// lb, lb + incr, ..., up to ub inclusive.
  static ActionGrid uniform(double lb, double ub, double incr);

  std::size_t size() const { return betas_.size(); }
  double beta(std::size_t action) const { return betas_.at(action); }
  std::span<const double> betas() const { return betas_; }
  /// Index of beta == 1 if the grid contains it.
  std::optional<std::size_t> identity() const;

  friend bool operator==(const ActionGrid&, const ActionGrid&) = default;

 private:
  std::vector<double> betas_;
};

struct LearningSchedule {
  double alpha0 = 1.0;
  double gamma = 1.0;

  /// Harmonic per-pair decay: alpha0 / (1 + prior visits).
  double alpha(std::uint64_t visits) const { return alpha0 / (1.0 + static_cast<double>(visits)); }
};

class QTable {
 public:
  QTable(StateDims dims, ActionGrid grid);

  const StateDims& dims() const { return dims_; }
  const ActionGrid& grid() const { return grid_; }
  std::size_t actions() const { return grid_.size(); }

  std::size_t index(const StateTuple& x) const;
  StateTuple state(std::size_t index) const;
  bool contains(const StateTuple& x) const;

  double& value(const StateTuple& x, std::size_t a) { return values_[slot(x, a)]; }
  double value(const StateTuple& x, std::size_t a) const { return values_[slot(x, a)]; }
  std::uint64_t& visits(const StateTuple& x, std::size_t a) { return visits_[slot(x, a)]; }
  std::uint64_t visits(const StateTuple& x, std::size_t a) const { return visits_[slot(x, a)]; }

  std::span<const double> row(std::size_t state_index) const;
  std::span<const std::uint64_t> visit_row(std::size_t state_index) const;
  bool visited(std::size_t state_index) const;

  double max_value(const StateTuple& x) const;
  std::uint64_t total_visits() const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t slot(const StateTuple& x, std::size_t a) const { return index(x) * grid_.size() + a; }

  StateDims dims_;
  ActionGrid grid_;
  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;
};

/// ceil(fraction * buckets) clamped to 1..buckets.
std::size_t bucket_of(double fraction, std::size_t buckets);

const HistoricalDistribution& distribution_for(const std::map<int, HistoricalDistribution>& dists,
                                               int hour);

StateTuple encode_state(std::size_t remaining_periods, double remaining_shares, double total_volume,
                        const IntervalBar& bar, const HistoricalDistribution& dist,
                        const StateDims& dims);

/// One finite-horizon Q-learning step. States with t == 1 lead to the
/// reward-free absorbing state, so `next` is ignored for them; every other
/// state needs `next`.
void q_update(QTable& q, const StateTuple& x, std::size_t action, double reward,
              const std::optional<StateTuple>& next, const LearningSchedule& schedule);

/// Child volume for the period at `period` (0-based) when `inventory`
/// shares remain on the AC plan: inventory * AC_k / sum_{m >= k} AC_m.
double rescaled_child_volume(const ACTrajectory& ac, std::size_t period, double inventory);

struct Transition {
  double reward = 0.0;
  std::size_t next_inventory = 1;
};

/// What the exhaustive sweep needs from one training episode.
class EpisodeModel {
 public:
  virtual ~EpisodeModel() = default;
  virtual std::size_t periods() const = 0;
  /// (spread bucket, volume bucket) observed in 0-based period `period`.
  virtual std::pair<std::size_t, std::size_t> market_state(std::size_t period) const = 0;
  virtual Transition step(std::size_t period, std::size_t inventory_bucket, std::size_t action) = 0;
};

using UpdateObserver = std::function<void(const QTable&, std::uint64_t update_index)>;

/// Sweeps t = T..1, every inventory bucket, every action, applying one
/// q_update per triple. Returns the number of updates applied.
std::size_t sweep_episode(QTable& q, EpisodeModel& episode, const LearningSchedule& schedule,
                          std::uint64_t& update_counter, const UpdateObserver& observer = {});

/// T consecutive bars on one day plus the price the run is measured against.
struct Episode {
  std::vector<IntervalBar> bars;
  double reference = 0.0;
};

struct TrainingConfig {
  StateDims dims;
  ActionGrid grid;
  LearningSchedule schedule;
  double volume = 100000.0;
  double cap = 0.2;
  Side side = Side::Buy;
  std::size_t trace_stride = 1;
};

struct TracePoint {
  std::uint64_t visit = 0;
  double correct_fraction = 0.0;
};

struct TrainingReport {
  std::size_t updates = 0;
  std::size_t episodes_used = 0;
  std::size_t episodes_skipped = 0;
  std::vector<std::string> diagnostics;
  std::vector<TracePoint> trace;
};

/// Market-backed episode: inventory bucket i stands for its midpoint
/// holding, actions scale the rescaled AC child volume, fills come from
/// walking the period's bar.
class MarketEpisode final : public EpisodeModel {
 public:
  MarketEpisode(const Episode& episode, const ACTrajectory& ac,
                const std::map<int, HistoricalDistribution>& dists, const TrainingConfig& config);

  std::size_t periods() const override { return market_.size(); }
  std::pair<std::size_t, std::size_t> market_state(std::size_t period) const override {
    return market_.at(period);
  }
  Transition step(std::size_t period, std::size_t inventory_bucket, std::size_t action) override;

 private:
  const Episode& episode_;
  const ACTrajectory& ac_;
  const TrainingConfig& config_;
  std::vector<std::pair<std::size_t, std::size_t>> market_;
};

TrainingReport train(QTable& q, std::span<const Episode> episodes, const ACTrajectory& ac,
                     const std::map<int, HistoricalDistribution>& dists, const TrainingConfig& config);

class Policy {
 public:
  Policy(StateDims dims, ActionGrid grid, std::vector<std::size_t> actions);

  std::size_t action(const StateTuple& x) const;
  double beta(const StateTuple& x) const { return grid_.beta(action(x)); }
  const StateDims& dims() const { return dims_; }
  const ActionGrid& grid() const { return grid_; }

  /// Same action everywhere; handy for identity and degenerate checks.
  static Policy constant(StateDims dims, ActionGrid grid, std::size_t action);

 private:
  StateDims dims_;
  ActionGrid grid_;
  std::vector<std::size_t> actions_;
};

/// Greedy action for one row. Only visited actions compete when any were
/// visited; values within a small tolerance of the best tie, and ties go to
/// the beta closest to 1, then the smaller beta.
std::size_t greedy_action(const QTable& q, std::size_t state_index);

Policy extract_policy(const QTable& q);

/// Share of visited non-final states in the two diagnostic regions (wide
/// spread with thin volume, tight spread with deep volume) whose greedy beta
/// trades less, respectively more, than AC. Empty when no state qualifies.
std::optional<double> correct_action_fraction(const QTable& q);

void write_qtable_csv(std::ostream& out, const QTable& q, const LearningSchedule& schedule);
QTable read_qtable_csv(std::istream& in, LearningSchedule* schedule = nullptr);

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

}  // namespace acrl
