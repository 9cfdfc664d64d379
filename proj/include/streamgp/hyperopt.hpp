#pragma once

#include <Eigen/Dense>

#include "streamgp/kernels.hpp"

namespace streamgp {

// Log marginal likelihood of a linear-Gaussian model in feature space:
//   y ~ N(0, magnitude * Phi Phi^T + noise_var * I).
// Everything is evaluated through the feature-space Gram matrix, so the
// cost per evaluation is O(dim^3) in the feature dimension, not in the
// number of samples.
class RfMarginal {
 public:
  // phi_rows: one feature vector per row (t x dim).
  RfMarginal(Eigen::MatrixXd phi_rows, Eigen::VectorXd y);

  double value(double magnitude, double noise_var) const;

  // Value plus gradient with respect to (log magnitude, log noise_var).
  double value_and_grad(double magnitude, double noise_var,
                        Eigen::Vector2d& grad_log) const;

  long sample_count() const { return t_; }

 private:
  long t_ = 0;
  int dim_ = 0;
  Eigen::MatrixXd gram_;  // Phi^T Phi
  Eigen::VectorXd phi_y_;  // Phi^T y
  double yty_ = 0.0;
};

struct MarginalFitOptions {
  double init_magnitude = 1.0;
  double init_noise_var = 0.1;
  double lower = 1e-6;  // bound on both parameters
  double upper = 1e6;
  int max_iters = 200;
  double grad_tol = 1e-6;
};

struct MarginalFitResult {
  double magnitude = 1.0;
  double noise_var = 0.1;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Maximizes RfMarginal over (magnitude, noise_var) by projected gradient
// ascent in log space with an adaptive step.
MarginalFitResult fit_marginal_likelihood(const FeatureMap& map,
                                          const Eigen::MatrixXd& x_rows,
                                          const Eigen::VectorXd& y,
                                          const MarginalFitOptions& opts = {});

// Batch Laplace fit of logistic weights.  labels are -1/+1 (0 means -1).
struct LaplaceFit {
  Eigen::VectorXd mode;       // MAP feature weights
  double log_evidence = 0.0;  // Laplace approximation of log p(labels)
  int iterations = 0;
};

LaplaceFit laplace_fit(const Eigen::MatrixXd& phi_rows,
                       const Eigen::VectorXi& labels, double magnitude);

struct EvidenceFitOptions {
  double lower = 1e-6;
  double upper = 1e6;
  int grid = 25;       // coarse log-spaced scan before refinement
  int max_evals = 200;
  double tol = 1e-3;   // absolute tolerance in log magnitude
};

struct EvidenceFitResult {
  double magnitude = 1.0;
  double log_evidence = 0.0;
  int evaluations = 0;
};

// Picks the prior weight variance for classification by maximizing the
// Laplace evidence: coarse grid, then golden-section around the best cell.
EvidenceFitResult fit_classification_magnitude(
    const FeatureMap& map, const Eigen::MatrixXd& x_rows,
    const Eigen::VectorXi& labels, const EvidenceFitOptions& opts = {});

// Feature matrix helper: stacks phi(x_i) row-wise.
Eigen::MatrixXd feature_rows(const FeatureMap& map,
                             const Eigen::MatrixXd& x_rows);

}  // namespace streamgp
