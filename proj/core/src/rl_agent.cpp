#include "acrl/rl_agent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace acrl {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr const char* kQTableMagic = "# acrl-qtable";
constexpr int kQTableVersion = 1;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

template <typename T>
T parse_cell(const std::string& s, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCategory::Format, fmt::format("qtable: bad {} '{}'", what, s));
  }
  return value;
}

}  // namespace

ActionGrid::ActionGrid(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw Error(ErrorCategory::InvalidArgument, "ActionGrid: no actions");
  for (std::size_t k = 0; k < betas_.size(); ++k) {
    if (!(betas_[k] >= 0.0) || !std::isfinite(betas_[k])) {
      throw Error(ErrorCategory::InvalidArgument, "ActionGrid: betas must be finite and >= 0");
    }
    if (k > 0 && !(betas_[k] > betas_[k - 1])) {
      throw Error(ErrorCategory::InvalidArgument, "ActionGrid: betas must be strictly increasing");
    }
  }
}

ActionGrid ActionGrid::uniform(double lb, double ub, double incr) {
  if (!(incr > 0.0) || !(ub >= lb)) {
    throw Error(ErrorCategory::InvalidArgument,
                fmt::format("ActionGrid: bad bounds lb={} ub={} incr={}", lb, ub, incr));
  }
  const auto steps = static_cast<std::size_t>(std::floor((ub - lb) / incr + 1e-9));
  std::vector<double> betas;
  betas.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) betas.push_back(lb + static_cast<double>(k) * incr);
  return ActionGrid(std::move(betas));
}

std::optional<std::size_t> ActionGrid::identity() const {
  for (std::size_t k = 0; k < betas_.size(); ++k) {
    if (std::abs(betas_[k] - 1.0) < 1e-12) return k;
  }
  return std::nullopt;
}

QTable::QTable(StateDims dims, ActionGrid grid) : dims_(dims), grid_(std::move(grid)) {
  if (dims_.periods < 1 || dims_.inventory < 1 || dims_.spread < 1 || dims_.volume < 1) {
    throw Error(ErrorCategory::InvalidArgument, "QTable: every dimension must be >= 1");
  }
  values_.assign(dims_.state_count() * grid_.size(), 0.0);
  visits_.assign(values_.size(), 0);
}

bool QTable::contains(const StateTuple& x) const {
  return x.t >= 1 && x.t <= dims_.periods && x.i >= 1 && x.i <= dims_.inventory && x.s >= 1 &&
         x.s <= dims_.spread && x.v >= 1 && x.v <= dims_.volume;
}

std::size_t QTable::index(const StateTuple& x) const {
  if (!contains(x)) {
    throw Error(ErrorCategory::InvalidArgument,
                fmt::format("state <{},{},{},{}> outside table", x.t, x.i, x.s, x.v));
  }
  return (((x.t - 1) * dims_.inventory + (x.i - 1)) * dims_.spread + (x.s - 1)) * dims_.volume + (x.v - 1);
}

StateTuple QTable::state(std::size_t index) const {
  StateTuple x;
  x.v = index % dims_.volume + 1;
  index /= dims_.volume;
  x.s = index % dims_.spread + 1;
  index /= dims_.spread;
  x.i = index % dims_.inventory + 1;
  x.t = index / dims_.inventory + 1;
  return x;
}

std::span<const double> QTable::row(std::size_t state_index) const {
  return std::span<const double>(values_).subspan(state_index * grid_.size(), grid_.size());
}

std::span<const std::uint64_t> QTable::visit_row(std::size_t state_index) const {
  return std::span<const std::uint64_t>(visits_).subspan(state_index * grid_.size(), grid_.size());
}

bool QTable::visited(std::size_t state_index) const {
  const auto counts = visit_row(state_index);
  return std::any_of(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; });
}

double QTable::max_value(const StateTuple& x) const {
  const auto r = row(index(x));
  return *std::max_element(r.begin(), r.end());
}

std::uint64_t QTable::total_visits() const {
  std::uint64_t total = 0;
  for (auto c : visits_) total += c;
  return total;
}

std::size_t bucket_of(double fraction, std::size_t buckets) {
  const double scaled = std::ceil(fraction * static_cast<double>(buckets) - 1e-9);
  if (!(scaled >= 1.0)) return 1;
  return std::min(static_cast<std::size_t>(scaled), buckets);
}

const HistoricalDistribution& distribution_for(const std::map<int, HistoricalDistribution>& dists,
                                               int hour) {
  auto it = dists.find(hour);
  if (it == dists.end()) {
    throw Error(ErrorCategory::Data, fmt::format("no historical distribution for hour {}", hour));
  }
  return it->second;
}

StateTuple encode_state(std::size_t remaining_periods, double remaining_shares, double total_volume,
                        const IntervalBar& bar, const HistoricalDistribution& dist,
                        const StateDims& dims) {
  if (remaining_periods < 1 || remaining_periods > dims.periods) {
    throw Error(ErrorCategory::InvalidArgument,
                fmt::format("encode_state: remaining periods {} outside 1..{}", remaining_periods, dims.periods));
  }
  if (!(total_volume > 0.0) || remaining_shares < 0.0 || remaining_shares > total_volume) {
    throw Error(ErrorCategory::InvalidArgument, "encode_state: remaining shares outside [0, V]");
  }
  StateTuple x;
  x.t = remaining_periods;
  x.i = bucket_of(remaining_shares / total_volume, dims.inventory);
  x.s = bucket_of(percentile_of(dist, DistributionField::Spread, bar.spread), dims.spread);
  x.v = bucket_of(percentile_of(dist, DistributionField::Volume, bar.quote_volume), dims.volume);
  return x;
}

void q_update(QTable& q, const StateTuple& x, std::size_t action, double reward,
              const std::optional<StateTuple>& next, const LearningSchedule& schedule) {
  double target = reward;
  if (x.t > 1) {
    if (!next) throw Error(ErrorCategory::InvalidArgument, "q_update: interior state needs a successor");
    target += schedule.gamma * q.max_value(*next);
  }
  auto& visits = q.visits(x, action);
  double& value = q.value(x, action);
  value += schedule.alpha(visits) * (target - value);
  ++visits;
}

double rescaled_child_volume(const ACTrajectory& ac, std::size_t period, double inventory) {
  if (period >= ac.trades.size()) {
    throw Error(ErrorCategory::InvalidArgument, "rescaled_child_volume: period beyond trajectory");
  }
  double remaining_plan = 0.0;
  for (std::size_t m = period; m < ac.trades.size(); ++m) remaining_plan += ac.trades[m];
  if (remaining_plan <= 0.0) return inventory;
  return inventory * ac.trades[period] / remaining_plan;
}

std::size_t sweep_episode(QTable& q, EpisodeModel& episode, const LearningSchedule& schedule,
                          std::uint64_t& update_counter, const UpdateObserver& observer) {
  const auto& dims = q.dims();
  const std::size_t T = dims.periods;
  if (episode.periods() < T) {
    throw Error(ErrorCategory::Data,
                fmt::format("episode has {} periods, need {}", episode.periods(), T));
  }
  std::size_t applied = 0;
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = T - k;
    const auto [s, v] = episode.market_state(k);
    for (std::size_t i = 1; i <= dims.inventory; ++i) {
      for (std::size_t a = 0; a < q.actions(); ++a) {
        const StateTuple x{t, i, s, v};
        const Transition tr = episode.step(k, i, a);
        std::optional<StateTuple> y;
        if (t > 1) {
          const auto [ns, nv] = episode.market_state(k + 1);
          y = StateTuple{t - 1, tr.next_inventory, ns, nv};
        }
        q_update(q, x, a, tr.reward, y, schedule);
        ++applied;
        ++update_counter;
        if (observer) observer(q, update_counter);
      }
    }
  }
  return applied;
}

MarketEpisode::MarketEpisode(const Episode& episode, const ACTrajectory& ac,
                             const std::map<int, HistoricalDistribution>& dists,
                             const TrainingConfig& config)
    : episode_(episode), ac_(ac), config_(config) {
  const auto& dims = config.dims;
  market_.reserve(episode.bars.size());
  for (const auto& bar : episode.bars) {
    const auto& dist = distribution_for(dists, bar.hour);
    // Inventory and time are private attributes; only s and v matter here.
    const StateTuple x = encode_state(1, 0.0, 1.0, bar, dist, dims);
    market_.emplace_back(x.s, x.v);
  }
}

Transition MarketEpisode::step(std::size_t period, std::size_t inventory_bucket, std::size_t action) {
  const auto& dims = config_.dims;
  const double V = config_.volume;
  const double inventory =
      std::round(V * (static_cast<double>(inventory_bucket) - 0.5) / static_cast<double>(dims.inventory));
  const double base = rescaled_child_volume(ac_, period, inventory);
  const double request = std::clamp(std::round(config_.grid.beta(action) * base), 0.0, inventory);

  const auto& book = episode_.bars[period].liquidity(config_.side);
  const Fill fill = walk_book(book, request, config_.cap);
  double contribution = shortfall_contribution_bps(episode_.reference, fill, V);
  double left = inventory - fill.executed;
  if (period + 1 == dims.periods && left > 0.0) {
    const Fill terminal = sweep_book(book, left, fill.executed);
    contribution += shortfall_contribution_bps(episode_.reference, terminal, V);
    left -= terminal.executed;
  }
  Transition tr;
  tr.reward = config_.side == Side::Buy ? contribution : -contribution;
  tr.next_inventory = bucket_of(left / V, dims.inventory);
  return tr;
}

TrainingReport train(QTable& q, std::span<const Episode> episodes, const ACTrajectory& ac,
                     const std::map<int, HistoricalDistribution>& dists, const TrainingConfig& config) {
  if (!(q.dims() == config.dims)) throw Error(ErrorCategory::InvalidArgument, "train: QTable dims mismatch");
  if (ac.trades.size() != config.dims.periods) {
    throw Error(ErrorCategory::InvalidArgument, "train: trajectory length differs from T");
  }
  TrainingReport report;
  std::uint64_t counter = q.total_visits();
  const std::size_t stride = std::max<std::size_t>(1, config.trace_stride);
  UpdateObserver observer = [&](const QTable& table, std::uint64_t n) {
    if (n % stride != 0) return;
    if (auto f = correct_action_fraction(table)) report.trace.push_back({n, *f});
  };

  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& episode = episodes[e];
    if (episode.bars.size() < config.dims.periods) {
      ++report.episodes_skipped;
      report.diagnostics.push_back(fmt::format("episode {}: {} bars, need {}", e, episode.bars.size(),
                                               config.dims.periods));
      continue;
    }
    MarketEpisode model(episode, ac, dists, config);
    report.updates += sweep_episode(q, model, config.schedule, counter, observer);
    ++report.episodes_used;
  }
  return report;
}

Policy::Policy(StateDims dims, ActionGrid grid, std::vector<std::size_t> actions)
    : dims_(dims), grid_(std::move(grid)), actions_(std::move(actions)) {
  if (actions_.size() != dims_.state_count()) {
    throw Error(ErrorCategory::InvalidArgument, "Policy: one action per state required");
  }
}

std::size_t Policy::action(const StateTuple& x) const {
  const std::size_t idx =
      (((x.t - 1) * dims_.inventory + (x.i - 1)) * dims_.spread + (x.s - 1)) * dims_.volume + (x.v - 1);
  return actions_.at(idx);
}

Policy Policy::constant(StateDims dims, ActionGrid grid, std::size_t action) {
  std::vector<std::size_t> actions(dims.state_count(), action);
  return Policy(dims, std::move(grid), std::move(actions));
}

std::size_t greedy_action(const QTable& q, std::size_t state_index) {
  const auto values = q.row(state_index);
  const auto counts = q.visit_row(state_index);
  const bool any_visited = std::any_of(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  auto eligible = [&](std::size_t a) { return !any_visited || counts[a] > 0; };

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (eligible(a)) best = std::max(best, values[a]);
  }
  const double tolerance = kTieTolerance * std::max(1.0, std::abs(best));
  const auto& grid = q.grid();
  std::optional<std::size_t> choice;
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (!eligible(a) || values[a] < best - tolerance) continue;
    if (!choice) {
      choice = a;
      continue;
    }
    const double d_new = std::abs(grid.beta(a) - 1.0);
    const double d_old = std::abs(grid.beta(*choice) - 1.0);
    if (d_new < d_old - 1e-12) choice = a;  // equal distance keeps the smaller beta
  }
  return *choice;
}

Policy extract_policy(const QTable& q) {
  std::vector<std::size_t> actions(q.dims().state_count());
  for (std::size_t idx = 0; idx < actions.size(); ++idx) actions[idx] = greedy_action(q, idx);
  return Policy(q.dims(), q.grid(), std::move(actions));
}

std::optional<double> correct_action_fraction(const QTable& q) {
  const auto& dims = q.dims();
  const double mid_s = 0.5 * static_cast<double>(dims.spread + 1);
  const double mid_v = 0.5 * static_cast<double>(dims.volume + 1);
  std::size_t qualifying = 0;
  std::size_t correct = 0;
  for (std::size_t idx = 0; idx < dims.state_count(); ++idx) {
    const StateTuple x = q.state(idx);
    if (x.t < 2 || !q.visited(idx)) continue;
    const auto s = static_cast<double>(x.s);
    const auto v = static_cast<double>(x.v);
    const bool unfavourable = s > mid_s && v < mid_v;
    const bool favourable = s < mid_s && v > mid_v;
    if (!unfavourable && !favourable) continue;
    ++qualifying;
    const double beta = q.grid().beta(greedy_action(q, idx));
    if ((unfavourable && beta < 1.0) || (favourable && beta > 1.0)) ++correct;
  }
  if (qualifying == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(qualifying);
}

void write_qtable_csv(std::ostream& out, const QTable& q, const LearningSchedule& schedule) {
  const auto& d = q.dims();
  out << kQTableMagic << ',' << kQTableVersion << '\n';
  out << fmt::format("dims,{},{},{},{}\n", d.periods, d.inventory, d.spread, d.volume);
  out << "betas";
  for (double b : q.grid().betas()) out << fmt::format(",{}", b);
  out << '\n';
  out << fmt::format("schedule,{},{}\n", schedule.alpha0, schedule.gamma);
  out << "t,i,s,v,action,beta,q,visits\n";
  for (std::size_t idx = 0; idx < d.state_count(); ++idx) {
    const StateTuple x = q.state(idx);
    for (std::size_t a = 0; a < q.actions(); ++a) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", x.t, x.i, x.s, x.v, a, q.grid().beta(a),
                         q.value(x, a), q.visits(x, a));
    }
  }
}

QTable read_qtable_csv(std::istream& in, LearningSchedule* schedule) {
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw Error(ErrorCategory::Format, fmt::format("qtable: missing {}", what));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_csv(line);
  };

  auto magic = next_line("header");
  if (magic.size() != 2 || magic[0] != kQTableMagic) throw Error(ErrorCategory::Format, "qtable: not a Q-table file");
  if (parse_cell<int>(magic[1], "version") != kQTableVersion) {
    throw Error(ErrorCategory::Format, fmt::format("qtable: unsupported version {}", magic[1]));
  }
  auto dims_cells = next_line("dims");
  if (dims_cells.size() != 5 || dims_cells[0] != "dims") throw Error(ErrorCategory::Format, "qtable: bad dims row");
  StateDims dims{parse_cell<std::size_t>(dims_cells[1], "T"), parse_cell<std::size_t>(dims_cells[2], "I"),
                 parse_cell<std::size_t>(dims_cells[3], "B"), parse_cell<std::size_t>(dims_cells[4], "W")};
  auto beta_cells = next_line("betas");
  if (beta_cells.size() < 2 || beta_cells[0] != "betas") throw Error(ErrorCategory::Format, "qtable: bad betas row");
  std::vector<double> betas;
  for (std::size_t k = 1; k < beta_cells.size(); ++k) betas.push_back(parse_cell<double>(beta_cells[k], "beta"));
  auto sched_cells = next_line("schedule");
  if (sched_cells.size() != 3 || sched_cells[0] != "schedule") throw Error(ErrorCategory::Format, "qtable: bad schedule row");
  if (schedule) {
    schedule->alpha0 = parse_cell<double>(sched_cells[1], "alpha0");
    schedule->gamma = parse_cell<double>(sched_cells[2], "gamma");
  }
  next_line("column header");

  QTable q(dims, ActionGrid(std::move(betas)));
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 8) throw Error(ErrorCategory::Format, fmt::format("qtable: bad row '{}'", line));
    StateTuple x{parse_cell<std::size_t>(cells[0], "t"), parse_cell<std::size_t>(cells[1], "i"),
                 parse_cell<std::size_t>(cells[2], "s"), parse_cell<std::size_t>(cells[3], "v")};
    const auto a = parse_cell<std::size_t>(cells[4], "action");
    if (!q.contains(x) || a >= q.actions()) throw Error(ErrorCategory::Format, fmt::format("qtable: row out of range '{}'", line));
    q.value(x, a) = parse_cell<double>(cells[6], "q");
    q.visits(x, a) = parse_cell<std::uint64_t>(cells[7], "visits");
    ++rows;
  }
  if (rows != dims.state_count() * q.actions()) {
    throw Error(ErrorCategory::Format,
                fmt::format("qtable: expected {} rows, read {}", dims.state_count() * q.actions(), rows));
  }
  return q;
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
  out << "tuple_visit_index,pct_correct_actions\n";
  for (const auto& p : trace) out << fmt::format("{},{}\n", p.visit, 100.0 * p.correct_fraction);
}

}  // namespace acrl
