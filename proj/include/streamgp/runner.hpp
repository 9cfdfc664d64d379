#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "streamgp/config.hpp"
#include "streamgp/metrics.hpp"

namespace streamgp {

struct RunSummary {
  std::string task;
  long init_rows = 0;      // rows consumed by the initialization phase
  long streamed = 0;       // rows scored online
  double cumulative_loss = 0.0;
  RegressionMetrics regression;
  ClassificationMetrics classification;
  double lvm_loo_error = -1.0;  // -1 when no labels are available
  Eigen::VectorXd final_weights;
  long underflow_events = 0;
  std::vector<std::string> outputs;  // files written, in creation order
};

// Executes one experiment described by `config` (see README for the key
// reference): loads or generates the stream, runs the initialization
// window, streams the rest through the model, and writes metrics.csv plus
// task-specific outputs into the configured output directory.
RunSummary run_experiment(const ConfigMap& config);

}  // namespace streamgp
