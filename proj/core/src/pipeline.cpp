#include "acrl/pipeline.hpp"

#include <fmt/format.h>

namespace acrl {

ACTrajectory plan_trajectory(const ACParams& calibrated, const RunConfig& cfg) {
  ACParams p = calibrated;
  p.periods = cfg.dims.periods;
  p.volume = cfg.volume;
  p.lambda = cfg.lambda;
  p.tau_s = cfg.tau_s;
  return round_to_shares(compute_trajectory(p));
}

PipelineResult run_pipeline(const DataSplit& split, const RunConfig& cfg, const PipelineOptions& options) {
  cfg.validate();
  if (split.training.empty() || split.testing.empty()) {
    throw Error(ErrorCategory::Data, "run_pipeline: training and testing sets must both be non-empty");
  }
  if (split.training.back().start.utc_ms >= split.testing.front().start.utc_ms) {
    throw Error(ErrorCategory::Data, "run_pipeline: training data must pre-date testing data");
  }

  CalibrationOptions calib = options.calibration;
  calib.side = cfg.side;
  Calibration calibration = calibrate(split.training, cfg.lambda, cfg.tau_s, calib);
  ACTrajectory trajectory = plan_trajectory(calibration.params, cfg);
  auto distributions = build_distributions(split.training);

  QTable q(cfg.dims, cfg.grid);
  const auto episodes = training_episodes(split.training, cfg.dims.periods, cfg.hour, cfg.side, cfg.reference);
  if (episodes.empty()) {
    throw Error(ErrorCategory::Data, fmt::format("run_pipeline: no training episode of {} bars in hour {}",
                                                 cfg.dims.periods, cfg.hour));
  }
  TrainingReport training = train(q, episodes, trajectory, distributions,
                                  cfg.training(options.schedule, options.trace_stride));

  PipelineResult result{std::move(calibration), std::move(trajectory), std::move(distributions),
                        std::move(q), std::move(training), {}, {}, {}, {}};
  result.ac = run_ac(cfg, split.testing, result.trajectory, &result.diagnostics);
  result.rl = run_rl(cfg, split.testing, result.trajectory, result.q, result.distributions);
  result.stats = compare(result.ac, result.rl);
  return result;
}

}  // namespace acrl
