#include "acrl/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include <fmt/format.h>

namespace acrl::cli {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCategory::Config, fmt::format("{}={}: {}", key, value, why));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(std::string_view(value).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) bad(key, text, "not a number");
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) bad(key, text, "not an integer");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const long long v = to_int(key, text);
  if (v < 1) bad(key, text, "must be >= 1");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  bad(key, text, "expected true/false");
}

/// Integer list with optional inclusive ranges: "9-16" or "4,8,12".
std::vector<long long> int_list(const std::string& key, const std::string& value) {
  std::vector<long long> out;
  for (const auto& item : split_list(value)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_int(key, item));
      continue;
    }
    const long long lo = to_int(key, trim(item.substr(0, dash)));
    const long long hi = to_int(key, trim(item.substr(dash + 1)));
    if (hi < lo) bad(key, value, "empty range");
    for (long long k = lo; k <= hi; ++k) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> count_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (long long v : int_list(key, value)) {
    if (v < 1) bad(key, value, "entries must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string join_numbers(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    out += fmt::format("{}", v);
  }
  return out;
}

// I, B and W are zipped; a single value broadcasts against a longer list.
void set_granularity(ExperimentConfig& cfg, char which, const std::vector<std::size_t>& values) {
  auto& g = cfg.granularities;
  if (values.size() > 1 && g.size() == 1) g.resize(values.size(), g.front());
  if (values.size() == 1) {
    for (auto& x : g) (which == 'I' ? x.inventory : which == 'B' ? x.spread : x.volume) = values.front();
    return;
  }
  if (values.size() != g.size()) {
    throw Error(ErrorCategory::Config,
                fmt::format("{}: list of {} does not match {} granularities", which, values.size(), g.size()));
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    (which == 'I' ? g[k].inventory : which == 'B' ? g[k].spread : g[k].volume) = values[k];
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [](double ExperimentConfig::*field) {
      return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*field = to_double(k, v);
      });
    };
    t["data"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.data = v; };
    t["out"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = v; };
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const long long s = to_int(k, v);
      if (s < 0) bad(k, v, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["split_date"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.split_day = parse_date(v);
      } catch (const Error& e) {
        bad(k, v, e.what());
      }
    };
    t["train_fraction"] = dbl(&ExperimentConfig::train_fraction);
    t["V"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.volumes.clear();
      for (const auto& item : split_list(v)) c.volumes.push_back(to_double(k, item));
    };
    t["T"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.periods = count_list(k, v); };
    t["H"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.hours.clear();
      for (long long h : int_list(k, v)) c.hours.push_back(static_cast<int>(h));
    };
    for (char which : {'I', 'B', 'W'}) {
      t[std::string(1, which)] = [which](ExperimentConfig& c, const std::string& k, const std::string& v) {
        set_granularity(c, which, count_list(k, v));
      };
    }
    t["IBW"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const auto values = count_list(k, v);
      c.granularities.clear();
      for (auto n : values) c.granularities.push_back({n, n, n});
    };
    t["beta_lb"] = dbl(&ExperimentConfig::beta_lb);
    t["beta_ub"] = dbl(&ExperimentConfig::beta_ub);
    t["beta_incr"] = dbl(&ExperimentConfig::beta_incr);
    t["lambda"] = dbl(&ExperimentConfig::lambda);
    t["tau"] = dbl(&ExperimentConfig::tau_s);
    t["gamma"] = dbl(&ExperimentConfig::gamma);
    t["alpha0"] = dbl(&ExperimentConfig::alpha0);
    t["cap"] = dbl(&ExperimentConfig::cap);
    t["side"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.side = parse_side(v);
      } catch (const Error& e) {
        bad(k, v, e.what());
      }
    };
    t["reference"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "mid") {
        c.reference = ReferencePrice::Mid;
      } else if (v == "touch") {
        c.reference = ReferencePrice::Touch;
      } else {
        bad(k, v, "expected mid or touch");
      }
    };
    t["trace_stride"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.trace_stride = to_count(k, v);
    };

    t["synth_days"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.synth_days = static_cast<int>(to_count(k, v));
    };
    t["synth_first_date"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.synth.first_day = parse_date(v);
      } catch (const Error& e) {
        bad(k, v, e.what());
      }
    };
    t["synth_open_hour"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.synth.open_hour = static_cast<int>(to_int(k, v));
    };
    t["synth_close_hour"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.synth.close_hour = static_cast<int>(to_int(k, v));
    };
    t["synth_offset_minutes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.synth.offset_minutes = static_cast<std::int32_t>(to_int(k, v));
    };
    auto opt_dbl = [](double SyntheticOptions::*field) {
      return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.synth.*field = to_double(k, v);
      });
    };
    t["synth_snapshot_s"] = opt_dbl(&SyntheticOptions::snapshot_interval_s);
    t["synth_mid"] = opt_dbl(&SyntheticOptions::initial_mid);
    t["synth_mid_sd"] = opt_dbl(&SyntheticOptions::mid_step_sd);
    t["synth_skip_weekends"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.synth.skip_weekends = to_bool(k, v);
    };
    auto reg_dbl = [](double RegimeSchedule::*field) {
      return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.regime.*field = to_double(k, v);
      });
    };
    t["synth_regime_s"] = reg_dbl(&RegimeSchedule::interval_s);
    t["synth_p_fav"] = reg_dbl(&RegimeSchedule::default_probability);
    t["synth_spread_jitter"] = reg_dbl(&RegimeSchedule::spread_jitter);
    t["synth_volume_jitter"] = reg_dbl(&RegimeSchedule::volume_jitter);
    t["synth_alternating"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.regime.alternating = to_bool(k, v);
    };
    // Per-hour favourable probability: "10:0.8,14:0.2".
    t["synth_p_fav_by_hour"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.regime.favourable_probability.clear();
      for (const auto& item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) bad(k, v, "expected hour:probability entries");
        const int hour = static_cast<int>(to_int(k, trim(item.substr(0, colon))));
        c.regime.favourable_probability[hour] = to_double(k, trim(item.substr(colon + 1)));
      }
    };
    for (const auto& [prefix, member] : {std::pair{std::string("synth_fav_"), &RegimeSchedule::favourable},
                                         std::pair{std::string("synth_unf_"), &RegimeSchedule::unfavourable}}) {
      auto reg = [member](double LiquidityRegime::*field) {
        return Setter([member, field](ExperimentConfig& c, const std::string& k, const std::string& v) {
          (c.regime.*member).*field = to_double(k, v);
        });
      };
      t[prefix + "spread"] = reg(&LiquidityRegime::spread);
      t[prefix + "gap"] = reg(&LiquidityRegime::level_gap);
      t[prefix + "l1"] = reg(&LiquidityRegime::l1_volume);
      t[prefix + "growth"] = reg(&LiquidityRegime::depth_growth);
    }
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCategory::Config, fmt::format("unknown config key '{}'", key));
  it->second(cfg, key, value);
}

void apply_config_stream(ExperimentConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCategory::Config, fmt::format("{}:{}: expected key = value", source, line_no));
    }
    try {
      apply_setting(cfg, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCategory::Config, fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, fmt::format("cannot open config '{}'", path.string()));
  apply_config_stream(cfg, in, path.string());
}

void finalize(ExperimentConfig& cfg) {
  if (cfg.gamma != 1.0) {
    cfg.warnings.push_back(fmt::format("gamma={} overridden to 1; the finite-horizon update needs gamma = 1",
                                       cfg.gamma));
    cfg.gamma = 1.0;
  }
  if (!(cfg.alpha0 > 0.0 && cfg.alpha0 <= 1.0)) {
    throw Error(ErrorCategory::Config, fmt::format("alpha0={}: must be in (0, 1]", cfg.alpha0));
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error(ErrorCategory::Config, fmt::format("train_fraction={}: must be in (0, 1)", cfg.train_fraction));
  }
  if (!(cfg.tau_s > 0.0)) throw Error(ErrorCategory::Config, "tau must be > 0");
  if (!(cfg.lambda >= 0.0)) throw Error(ErrorCategory::Config, "lambda must be >= 0");
  for (double v : cfg.volumes) {
    if (!(v > 0.0)) throw Error(ErrorCategory::Config, fmt::format("V={}: must be > 0", v));
  }
  if (cfg.volumes.empty() || cfg.periods.empty() || cfg.hours.empty() || cfg.granularities.empty()) {
    throw Error(ErrorCategory::Config, "V, T, H and I/B/W need at least one value each");
  }
  try {
    (void)ActionGrid::uniform(cfg.beta_lb, cfg.beta_ub, cfg.beta_incr);
  } catch (const Error& e) {
    throw Error(ErrorCategory::Config, e.what());
  }
  for (const auto& run : cfg.runs()) {
    try {
      run.validate();
    } catch (const Error& e) {
      throw Error(ErrorCategory::Config, e.what());
    }
  }
}

std::vector<RunConfig> ExperimentConfig::runs() const {
  const ActionGrid grid = ActionGrid::uniform(beta_lb, beta_ub, beta_incr);
  std::vector<RunConfig> out;
  for (double v : volumes) {
    for (std::size_t t : periods) {
      for (const auto& g : granularities) {
        for (int h : hours) {
          RunConfig r;
          r.volume = v;
          r.dims = StateDims{t, g.inventory, g.spread, g.volume};
          r.hour = h;
          r.grid = grid;
          r.lambda = lambda;
          r.tau_s = tau_s;
          r.cap = cap;
          r.side = side;
          r.reference = reference;
          out.push_back(r);
        }
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  auto add = [&](std::string k, std::string v) { e.emplace_back(std::move(k), std::move(v)); };
  add("data", data);
  add("seed", fmt::format("{}", seed));
  add("split_date", split_day ? format_date(*split_day) : "");
  add("train_fraction", fmt::format("{}", train_fraction));
  add("V", join_numbers(volumes));
  add("T", join_numbers(periods));
  add("H", join_numbers(hours));
  std::vector<std::size_t> is, bs, ws;
  for (const auto& g : granularities) {
    is.push_back(g.inventory);
    bs.push_back(g.spread);
    ws.push_back(g.volume);
  }
  add("I", join_numbers(is));
  add("B", join_numbers(bs));
  add("W", join_numbers(ws));
  add("beta_lb", fmt::format("{}", beta_lb));
  add("beta_ub", fmt::format("{}", beta_ub));
  add("beta_incr", fmt::format("{}", beta_incr));
  add("lambda", fmt::format("{}", lambda));
  add("tau", fmt::format("{}", tau_s));
  add("gamma", fmt::format("{}", gamma));
  add("alpha0", fmt::format("{}", alpha0));
  add("cap", fmt::format("{}", cap));
  add("side", std::string(to_string(side)));
  add("reference", reference == ReferencePrice::Mid ? "mid" : "touch");
  add("trace_stride", fmt::format("{}", trace_stride));
  add("synth_days", fmt::format("{}", synth_days));
  add("synth_first_date", format_date(synth.first_day));
  add("synth_open_hour", fmt::format("{}", synth.open_hour));
  add("synth_close_hour", fmt::format("{}", synth.close_hour));
  add("synth_offset_minutes", fmt::format("{}", synth.offset_minutes));
  add("synth_snapshot_s", fmt::format("{}", synth.snapshot_interval_s));
  add("synth_mid", fmt::format("{}", synth.initial_mid));
  add("synth_mid_sd", fmt::format("{}", synth.mid_step_sd));
  add("synth_skip_weekends", synth.skip_weekends ? "true" : "false");
  add("synth_regime_s", fmt::format("{}", regime.interval_s));
  add("synth_p_fav", fmt::format("{}", regime.default_probability));
  std::string by_hour;
  for (const auto& [h, p] : regime.favourable_probability) {
    by_hour += fmt::format("{}{}:{}", by_hour.empty() ? "" : ",", h, p);
  }
  add("synth_p_fav_by_hour", by_hour);
  add("synth_spread_jitter", fmt::format("{}", regime.spread_jitter));
  add("synth_volume_jitter", fmt::format("{}", regime.volume_jitter));
  add("synth_alternating", regime.alternating ? "true" : "false");
  for (const auto& [prefix, r] : {std::pair{"synth_fav_", &regime.favourable},
                                  std::pair{"synth_unf_", &regime.unfavourable}}) {
    add(std::string(prefix) + "spread", fmt::format("{}", r->spread));
    add(std::string(prefix) + "gap", fmt::format("{}", r->level_gap));
    add(std::string(prefix) + "l1", fmt::format("{}", r->l1_volume));
    add(std::string(prefix) + "growth", fmt::format("{}", r->depth_growth));
  }
  std::sort(e.begin(), e.end());
  return e;
}

std::string run_key(const RunConfig& run) {
  return fmt::format("V{}_T{}_I{}B{}W{}_H{}", run.volume, run.dims.periods, run.dims.inventory, run.dims.spread,
                     run.dims.volume, run.hour);
}

}  // namespace acrl::cli
