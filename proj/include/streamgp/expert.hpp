#pragma once

#include <Eigen/Dense>
#include <memory>

#include "streamgp/kernels.hpp"

namespace streamgp {

enum class Likelihood { kGaussian, kLogistic };

struct PredictiveMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Numerically stable logistic helpers (shared with the tests).
double sigmoid(double x);
double log_sigmoid(double x);  // == -softplus(-x)

// One Gaussian-process expert maintained in random-feature space.
//
// State is the feature-weight posterior N(mean, cov).  Prediction never
// mutates; correct() folds in one observation and returns the negative log
// predictive density of that observation evaluated *before* the update,
// which is what the ensemble scores experts with.  Value semantics: copying
// an Expert forks its state (the feature map is immutable and shared).
class Expert {
 public:
  Expert(std::shared_ptr<const FeatureMap> map, KernelSpec spec,
         Likelihood likelihood = Likelihood::kGaussian);

  const FeatureMap& map() const { return *map_; }
  std::shared_ptr<const FeatureMap> map_ptr() const { return map_; }
  const KernelSpec& spec() const { return spec_; }
  Likelihood likelihood() const { return likelihood_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  // Posterior moments of f(x) = phi(x) . theta (no observation noise).
  PredictiveMoments latent_moments(
      const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Regression: predictive moments of y (latent variance + noise_var).
  PredictiveMoments predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Regression correction; returns -log N(y; mean, variance) pre-update.
  double correct(const Eigen::Ref<const Eigen::VectorXd>& x, double y);

  // Classification: probit-moderated probability that the label is +1.
  double predict_prob(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Classification correction for label y in {-1, +1} (0 is accepted as
  // -1).  Laplace step: rank-one mean shift along cov * phi and a
  // Sherman-Morrison covariance downdate at the posterior mode.  Returns
  // -log p(y | x) pre-update.
  double correct_label(const Eigen::Ref<const Eigen::VectorXd>& x, int y);

  // Random-walk state drift: cov += drift_var * I.  Mean is untouched.
  void drift(double drift_var);

  // Restores a checkpointed posterior.
  void restore(Eigen::VectorXd mean, Eigen::MatrixXd cov);

 private:
  double loss_gaussian(const PredictiveMoments& pred, double y) const;

  std::shared_ptr<const FeatureMap> map_;
  KernelSpec spec_;
  Likelihood likelihood_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  mutable Eigen::VectorXd phi_buf_;  // scratch, not part of the state
};

// Scalar fixed point a = y * sigmoid(-y * (mu + s2 * a)) locating the
// Laplace mode along the cov * phi direction.  Exposed for the tests, which
// cross-check the damped Newton iteration against bisection.
double logistic_mode_coefficient(double mu, double s2, int y);

}  // namespace streamgp
