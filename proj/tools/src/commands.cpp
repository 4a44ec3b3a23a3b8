#include "acrl/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "acrl/pipeline.hpp"
#include "acrl/synthetic.hpp"

namespace acrl::cli {

namespace fs = std::filesystem;

namespace artifact {
std::string qtable(const RunConfig& run) { return "qtable_" + run_key(run) + ".csv"; }
std::string trace(const RunConfig& run) { return "trace_" + run_key(run) + ".csv"; }
std::string records(const RunConfig& run) { return "records_" + run_key(run) + ".csv"; }
}  // namespace artifact

namespace {

constexpr std::string_view kParamsMagic = "# acrl-params,1";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

std::ifstream open_artifact(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorCategory::MissingArtifact,
                fmt::format("'{}' not found; run `acrl {}` first", path.string(), producer));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, fmt::format("cannot open '{}'", path.string()));
  return in;
}

// Writes through a string so a failed stage never leaves half a file.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCategory::Io, fmt::format("cannot write '{}'", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCategory::Io, fmt::format("cannot move '{}': {}", path.string(), ec.message()));
}

StageSummary store_snapshots(const ExperimentConfig& cfg, std::span<const BookSnapshot> snapshots,
                             StageSummary summary) {
  ensure_dir(cfg.out);
  std::ostringstream csv;
  write_depth_csv(csv, snapshots);
  const std::string bytes = csv.str();
  summary.digest = fnv1a_hex(bytes);
  const fs::path store = cfg.out / artifact::kSnapshots;
  write_file(store, bytes);
  write_file(cfg.out / artifact::kDigest, summary.digest + "\n");
  summary.written.push_back(store);
  summary.written.push_back(cfg.out / artifact::kDigest);
  return summary;
}

std::vector<BookSnapshot> load_store(const ExperimentConfig& cfg) {
  const fs::path store = cfg.out / artifact::kSnapshots;
  auto in = open_artifact(store, "ingest` or `acrl synth");
  auto result = ingest_csv(in, {}, store.string());
  if (result.rejected_rows > 0) {
    throw Error(ErrorCategory::Data,
                fmt::format("'{}' has {} invalid rows; re-run ingest", store.string(), result.rejected_rows));
  }
  return std::move(result.snapshots);
}

struct Prepared {
  std::vector<IntervalBar> bars;
  DataSplit split;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  const auto snapshots = load_store(cfg);
  p.bars = aggregate_intervals(snapshots, cfg.tau_s, cfg.side);
  p.split = cfg.split_day ? split_by_day(p.bars, *cfg.split_day) : split_by_fraction(p.bars, cfg.train_fraction);
  if (p.split.training.empty() || p.split.testing.empty()) {
    throw Error(ErrorCategory::Data, "split leaves the training or testing set empty");
  }
  return p;
}

ACParams load_params(const ExperimentConfig& cfg) {
  auto in = open_artifact(cfg.out / artifact::kParams, "calibrate");
  return read_params(in);
}

void check_table_matches(const QTable& q, const RunConfig& run, const fs::path& path) {
  const auto betas = q.grid().betas();
  const auto want = run.grid.betas();
  if (!(q.dims() == run.dims) || !std::equal(betas.begin(), betas.end(), want.begin(), want.end())) {
    throw Error(ErrorCategory::Config,
                fmt::format("'{}' was trained with different T/I/B/W or beta grid; re-run train", path.string()));
  }
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

void write_params(std::ostream& out, const Calibration& c, const DataSplit& split) {
  const auto& p = c.params;
  out << kParamsMagic << '\n';
  for (const auto& w : c.warnings) out << "# warning: " << w << '\n';
  out << fmt::format("sigma={}\n", p.sigma);
  out << fmt::format("eta={}\n", p.eta);
  out << fmt::format("rho={}\n", p.rho);
  out << fmt::format("lambda={}\n", p.lambda);
  out << fmt::format("tau={}\n", p.tau_s);
  out << fmt::format("sigma_samples={}\n", c.sigma_samples);
  out << fmt::format("probe_points={}\n", c.probe_points);
  out << fmt::format("training_bars={}\n", split.training.size());
  out << fmt::format("testing_bars={}\n", split.testing.size());
  out << fmt::format("first_test_day={}\n", format_date(split.testing.front().day()));
}

ACParams read_params(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kParamsMagic) {
    throw Error(ErrorCategory::Format, "params: missing '# acrl-params,1' header");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCategory::Format, fmt::format("params: bad line '{}'", line));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto num = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCategory::Format, fmt::format("params: missing '{}'", key));
    double v = 0.0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw Error(ErrorCategory::Format, fmt::format("params: bad number for '{}'", key));
    }
    return v;
  };
  ACParams p;
  p.sigma = num("sigma");
  p.eta = num("eta");
  p.rho = num("rho");
  p.lambda = num("lambda");
  p.tau_s = num("tau");
  return p;
}

std::vector<TracePoint> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "tuple_visit_index,pct_correct_actions") {
    throw Error(ErrorCategory::Format, "trace csv: unexpected header");
  }
  std::vector<TracePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCategory::Format, "trace csv: bad row");
    TracePoint p;
    double pct = 0.0;
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(line.data(), line.data() + comma, p.visit);
    auto r2 = std::from_chars(line.data() + comma + 1, end, pct);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != end) {
      throw Error(ErrorCategory::Format, fmt::format("trace csv: bad row '{}'", line));
    }
    p.correct_fraction = pct / 100.0;
    out.push_back(p);
  }
  return out;
}

StageSummary cmd_ingest(const ExperimentConfig& cfg) {
  if (cfg.data.empty()) throw Error(ErrorCategory::Config, "ingest needs data=<csv file or directory>");
  const fs::path source(cfg.data);
  if (!fs::exists(source)) throw Error(ErrorCategory::Io, fmt::format("'{}' does not exist", cfg.data));

  std::vector<fs::path> files;
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw Error(ErrorCategory::Io, fmt::format("no CSV files in '{}' (0 files found)", cfg.data));
    }
  } else {
    files.push_back(source);
  }

  std::vector<BookSnapshot> all;
  std::string diagnostics;
  std::size_t rejected = 0;
  for (const auto& f : files) {
    auto result = ingest_csv(f);
    rejected += result.rejected_rows;
    for (const auto& d : result.diagnostics) {
      diagnostics += fmt::format("{}:{}: {}\n", f.filename().string(), d.line, d.reason);
    }
    all.insert(all.end(), result.snapshots.begin(), result.snapshots.end());
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const BookSnapshot& a, const BookSnapshot& b) { return a.ts.utc_ms < b.ts.utc_ms; });

  StageSummary summary;
  summary.notes.push_back(
      fmt::format("{} files, {} snapshots, {} rows rejected", files.size(), all.size(), rejected));
  summary = store_snapshots(cfg, all, std::move(summary));
  write_file(cfg.out / artifact::kIngestDiagnostics, diagnostics);
  summary.written.push_back(cfg.out / artifact::kIngestDiagnostics);
  return summary;
}

StageSummary cmd_synth(const ExperimentConfig& cfg) {
  const auto snapshots = generate_synthetic(cfg.seed, cfg.synth_days, cfg.regime, cfg.synth);
  StageSummary summary;
  summary.notes.push_back(fmt::format("{} days, {} snapshots, seed {}", cfg.synth_days, snapshots.size(), cfg.seed));
  return store_snapshots(cfg, snapshots, std::move(summary));
}

StageSummary cmd_calibrate(const ExperimentConfig& cfg) {
  const auto data = prepare(cfg);
  CalibrationOptions opts;
  opts.side = cfg.side;
  const Calibration c = calibrate(data.split.training, cfg.lambda, cfg.tau_s, opts);
  std::ostringstream ss;
  write_params(ss, c, data.split);
  const fs::path path = cfg.out / artifact::kParams;
  write_file(path, ss.str());
  StageSummary summary;
  summary.written.push_back(path);
  summary.notes = c.warnings;
  summary.notes.push_back(fmt::format("sigma={} eta={} from {} training bars", c.params.sigma, c.params.eta,
                                      data.split.training.size()));
  return summary;
}

StageSummary cmd_train(const ExperimentConfig& cfg) {
  const auto data = prepare(cfg);
  const ACParams params = load_params(cfg);
  const auto dists = build_distributions(data.split.training);
  StageSummary summary;
  for (const auto& run : cfg.runs()) {
    const ACTrajectory ac = plan_trajectory(params, run);
    const auto episodes = training_episodes(data.split.training, run.dims.periods, run.hour, run.side, run.reference);
    if (episodes.empty()) {
      throw Error(ErrorCategory::Data, fmt::format("{}: no training window of {} bars in hour {}", run_key(run),
                                                   run.dims.periods, run.hour));
    }
    QTable q(run.dims, run.grid);
    const auto report = train(q, episodes, ac, dists, run.training(cfg.schedule(), cfg.trace_stride));

    std::ostringstream qcsv;
    write_qtable_csv(qcsv, q, cfg.schedule());
    const fs::path qpath = cfg.out / artifact::qtable(run);
    write_file(qpath, qcsv.str());
    std::ostringstream tcsv;
    write_trace_csv(tcsv, report.trace);
    const fs::path tpath = cfg.out / artifact::trace(run);
    write_file(tpath, tcsv.str());
    summary.written.push_back(qpath);
    summary.written.push_back(tpath);
    summary.notes.push_back(fmt::format("{}: {} episodes, {} updates", run_key(run), report.episodes_used,
                                        report.updates));
    for (const auto& d : report.diagnostics) summary.notes.push_back(run_key(run) + ": " + d);
  }
  return summary;
}

StageSummary cmd_backtest(const ExperimentConfig& cfg) {
  // Check every Q-table up front so a missing one fails before any work.
  for (const auto& run : cfg.runs()) {
    const fs::path qpath = cfg.out / artifact::qtable(run);
    if (!fs::exists(qpath)) {
      throw Error(ErrorCategory::MissingArtifact,
                  fmt::format("no trained Q-table '{}'; run `acrl train` first", qpath.string()));
    }
  }
  const auto data = prepare(cfg);
  const ACParams params = load_params(cfg);
  const auto dists = build_distributions(data.split.training);
  StageSummary summary;
  for (const auto& run : cfg.runs()) {
    const fs::path qpath = cfg.out / artifact::qtable(run);
    auto qin = open_artifact(qpath, "train");
    const QTable q = read_qtable_csv(qin);
    check_table_matches(q, run, qpath);

    const ACTrajectory ac = plan_trajectory(params, run);
    std::vector<std::string> diagnostics;
    auto records = run_ac(run, data.split.testing, ac, &diagnostics);
    auto rl = run_rl(run, data.split.testing, ac, q, dists);
    records.insert(records.end(), rl.begin(), rl.end());
    for (auto& r : records) r.run_id = run_key(run);

    std::ostringstream csv;
    write_records_csv(csv, records, run.dims.periods);
    const fs::path path = cfg.out / artifact::records(run);
    write_file(path, csv.str());
    summary.written.push_back(path);
    summary.notes.push_back(fmt::format("{}: {} test days", run_key(run), rl.size()));
    for (const auto& d : diagnostics) summary.notes.push_back(run_key(run) + ": " + d);
  }
  return summary;
}

StageSummary cmd_report(const ExperimentConfig& cfg) {
  std::vector<ReportRow> rows;
  std::vector<TraceSeries> traces;
  for (const auto& run : cfg.runs()) {
    auto rin = open_artifact(cfg.out / artifact::records(run), "backtest");
    const auto records = read_records_csv(rin);
    std::vector<ISRecord> ac, rl;
    for (const auto& r : records) (r.model == "AC" ? ac : rl).push_back(r);
    const ReportKey key{run.volume, run.dims.periods, ibw_label(run.dims), run.hour};
    rows.push_back({key, compare(ac, rl)});

    auto tin = open_artifact(cfg.out / artifact::trace(run), "train");
    traces.push_back({key, read_trace_csv(tin)});
  }
  const auto echo = cfg.echo();
  const ReportBundle bundle = render_report(rows, traces, echo);
  write_report(cfg.out, bundle);
  StageSummary summary;
  for (const char* name : {"table1.csv", "table2.csv", "fig2_trace.csv"}) summary.written.push_back(cfg.out / name);
  return summary;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Almgren-Chriss execution with a Q-learning overlay"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::vector<std::string> overrides;
  struct Stage {
    const char* name;
    const char* help;
    StageSummary (*fn)(const ExperimentConfig&);
  };
  const Stage stages[] = {
      {"ingest", "Validate depth CSVs into the snapshot store", cmd_ingest},
      {"synth", "Generate a seeded synthetic snapshot store", cmd_synth},
      {"calibrate", "Fit sigma and eta on the training split", cmd_calibrate},
      {"train", "Train one Q-table per grid point", cmd_train},
      {"backtest", "Run AC and RL over every test day", cmd_backtest},
      {"report", "Render table1/table2/fig2_trace CSVs", cmd_report},
  };
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("-c,--config", config_path, "key = value config file");
    sub->add_option("overrides", overrides, "key=value settings applied after the config file");
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << fmt::format("error: category={} message=\"{}\"\n", to_string(ErrorCategory::InvalidArgument), e.what());
    return exit_code(ErrorCategory::InvalidArgument);
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCategory::Config, fmt::format("override '{}' is not key=value", o));
      }
      apply_setting(cfg, o.substr(0, eq), o.substr(eq + 1));
    }
    finalize(cfg);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';

    for (const auto& s : stages) {
      if (!app.got_subcommand(s.name)) continue;
      const StageSummary summary = s.fn(cfg);
      for (const auto& n : summary.notes) out << "note: " << n << '\n';
      for (const auto& p : summary.written) out << "wrote " << p.string() << '\n';
      if (!summary.digest.empty()) out << "digest=" << summary.digest << '\n';
    }
  } catch (const Error& e) {
    err << fmt::format("error: category={} message=\"{}\"\n", to_string(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << fmt::format("error: category={} message=\"{}\"\n", to_string(ErrorCategory::Internal), e.what());
    return exit_code(ErrorCategory::Internal);
  }
  return 0;
}

}  // namespace acrl::cli
