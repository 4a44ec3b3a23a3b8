#pragma once

#include <map>
#include <string>
#include <vector>

#include "acrl/ac_model.hpp"
#include "acrl/backtest.hpp"
#include "acrl/market_data.hpp"
#include "acrl/rl_agent.hpp"

namespace acrl {

struct PipelineOptions {
  LearningSchedule schedule;
  CalibrationOptions calibration;
  std::size_t trace_stride = 1;
};

struct PipelineResult {
  Calibration calibration;
  ACTrajectory trajectory;  // share-rounded
  std::map<int, HistoricalDistribution> distributions;
  QTable q;
  TrainingReport training;
  std::vector<ISRecord> ac;
  std::vector<ISRecord> rl;
  ISStatistics stats;
  std::vector<std::string> diagnostics;
};

/// Trajectory for a run: calibrated params sized to the run's V and T.
ACTrajectory plan_trajectory(const ACParams& calibrated, const RunConfig& cfg);

/// Everything downstream of a train/test split for one run configuration.
/// Only training bars feed calibration, distributions and the Q-table.
PipelineResult run_pipeline(const DataSplit& split, const RunConfig& cfg,
                            const PipelineOptions& options = {});

}  // namespace acrl
