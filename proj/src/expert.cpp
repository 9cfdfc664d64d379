#include "streamgp/expert.hpp"

#include <cmath>
#include <stdexcept>

namespace streamgp {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return -softplus(-x); }

Expert::Expert(std::shared_ptr<const FeatureMap> map, KernelSpec spec,
               Likelihood likelihood)
    : map_(std::move(map)), spec_(std::move(spec)), likelihood_(likelihood) {
  if (!map_) throw std::invalid_argument("Expert: null feature map");
  spec_.validate();
  if (map_->input_dim() != spec_.input_dim) {
    throw std::invalid_argument("Expert: feature map / spec dim mismatch");
  }
  const int dim = map_->feature_dim();
  mean_ = Eigen::VectorXd::Zero(dim);
  cov_ = spec_.magnitude * Eigen::MatrixXd::Identity(dim, dim);
}

PredictiveMoments Expert::latent_moments(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  map_->phi_into(x, phi_buf_);
  PredictiveMoments out;
  out.mean = phi_buf_.dot(mean_);
  out.variance = phi_buf_.dot(cov_ * phi_buf_);
  if (out.variance < 0.0) out.variance = 0.0;  // roundoff guard
  return out;
}

PredictiveMoments Expert::predict(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  PredictiveMoments out = latent_moments(x);
  out.variance += spec_.noise_var;
  return out;
}

double Expert::loss_gaussian(const PredictiveMoments& pred, double y) const {
  const double resid = y - pred.mean;
  return 0.5 * std::log(kTwoPi * pred.variance) +
         0.5 * resid * resid / pred.variance;
}

double Expert::correct(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  map_->phi_into(x, phi_buf_);
  const Eigen::VectorXd cov_phi = cov_ * phi_buf_;
  const double latent_var = phi_buf_.dot(cov_phi);
  const double pred_var = std::max(latent_var, 0.0) + spec_.noise_var;
  const double pred_mean = phi_buf_.dot(mean_);
  const double loss = loss_gaussian({pred_mean, pred_var}, y);

  mean_ += cov_phi * ((y - pred_mean) / pred_var);
  cov_ -= (cov_phi * cov_phi.transpose()) / pred_var;
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();  // keep exactly symmetric
  return loss;
}

double Expert::predict_prob(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const PredictiveMoments latent = latent_moments(x);
  const double kappa = 1.0 / std::sqrt(1.0 + kPi * latent.variance / 8.0);
  return sigmoid(kappa * latent.mean);
}

double logistic_mode_coefficient(double mu, double s2, int y) {
  // g(a) = a - y*sigmoid(-y*(mu + s2*a)) is strictly increasing with a
  // unique root in (-1, 1).  Newton from 0 with step halving.
  double a = 0.0;
  for (int it = 0; it < 25; ++it) {
    const double z = mu + s2 * a;
    const double s = sigmoid(-y * z);
    const double g = a - y * s;
    if (std::abs(g) < 1e-12) return a;
    const double dg = 1.0 + s2 * s * (1.0 - s);
    double step = g / dg;
    double next = a - step;
    // Halve until |g| decreases; g is monotone so this always terminates.
    for (int h = 0; h < 30; ++h) {
      const double gn = next - y * sigmoid(-y * (mu + s2 * next));
      if (std::abs(gn) <= std::abs(g)) break;
      step *= 0.5;
      next = a - step;
    }
    if (next == a) break;
    a = next;
  }
  return a;
}

double Expert::correct_label(const Eigen::Ref<const Eigen::VectorXd>& x,
                             int y) {
  if (y == 0) y = -1;
  if (y != 1 && y != -1) {
    throw std::invalid_argument("correct_label: label must be -1/0/+1");
  }
  map_->phi_into(x, phi_buf_);
  const Eigen::VectorXd cov_phi = cov_ * phi_buf_;
  const double s2 = std::max(phi_buf_.dot(cov_phi), 0.0);
  const double mu = phi_buf_.dot(mean_);

  const double kappa = 1.0 / std::sqrt(1.0 + kPi * s2 / 8.0);
  const double loss = softplus(-y * kappa * mu);

  const double a = logistic_mode_coefficient(mu, s2, y);
  const double z = mu + s2 * a;  // margin at the posterior mode
  const double p = sigmoid(z);
  const double w = p * (1.0 - p);

  mean_ += cov_phi * a;
  cov_ -= (cov_phi * cov_phi.transpose()) * (w / (1.0 + w * s2));
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  return loss;
}

void Expert::drift(double drift_var) {
  if (drift_var < 0.0) {
    throw std::invalid_argument("drift: variance must be nonnegative");
  }
  cov_.diagonal().array() += drift_var;
}

void Expert::restore(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (mean.size() != map_->feature_dim() || cov.rows() != cov.cols() ||
      cov.rows() != mean.size()) {
    throw std::invalid_argument("restore: shape mismatch");
  }
  mean_ = std::move(mean);
  cov_ = std::move(cov);
}

}  // namespace streamgp
