#include "streamgp/streams.hpp"

#include <cmath>
#include <stdexcept>

#include "streamgp/rng.hpp"

namespace streamgp {

std::vector<RegressionSample> make_sin_mix_stream(long t, double x_var,
                                                  std::uint64_t seed,
                                                  double noise_var) {
  Rng rng(seed);
  const double x_sd = std::sqrt(x_var);
  const double noise_sd = std::sqrt(noise_var);
  std::vector<RegressionSample> out(t);
  for (long i = 0; i < t; ++i) {
    const double x = x_sd * rng.normal();
    out[i].x = Eigen::VectorXd::Constant(1, x);
    out[i].y = std::sin(2.0 * x) + std::sin(3.0 * x) + noise_sd * rng.normal();
  }
  return out;
}

std::vector<RegressionSample> make_gp_stream(
    const std::vector<GpSegment>& segments, int input_dim,
    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RegressionSample> out;
  for (const GpSegment& seg : segments) {
    seg.kernel.validate();
    if (seg.kernel.input_dim != input_dim) {
      throw std::invalid_argument("make_gp_stream: input_dim mismatch");
    }
    const long n = seg.length;
    Eigen::MatrixXd x(n, input_dim);
    for (long i = 0; i < n; ++i) {
      for (int j = 0; j < input_dim; ++j) x(i, j) = rng.normal();
    }
    Eigen::MatrixXd k(n, n);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j <= i; ++j) {
        const double v = seg.kernel.magnitude *
                         seg.kernel.standardized_value(
                             (x.row(i) - x.row(j)).transpose());
        k(i, j) = v;
        k(j, i) = v;
      }
    }
    k.diagonal().array() += 1e-10 * seg.kernel.magnitude;
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("make_gp_stream: factorization failed");
    }
    Eigen::VectorXd z(n);
    for (long i = 0; i < n; ++i) z(i) = rng.normal();
    const Eigen::VectorXd f = llt.matrixL() * z;
    const double noise_sd = std::sqrt(seg.kernel.noise_var);
    for (long i = 0; i < n; ++i) {
      RegressionSample s;
      s.x = x.row(i).transpose();
      s.y = f(i) + noise_sd * rng.normal();
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<LabeledSample> make_two_gaussian_stream(long t, double center,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSample> out(t);
  for (long i = 0; i < t; ++i) {
    const int label = rng.uniform() < 0.5 ? -1 : 1;
    Eigen::VectorXd x(2);
    x << label * center + rng.normal(), label * center + rng.normal();
    out[i].x = std::move(x);
    out[i].label = label;
  }
  return out;
}

std::vector<LatentSample> make_latent_cluster_stream(
    long t, const LatentClusterConfig& cfg, std::uint64_t seed) {
  if (cfg.n_clusters < 1 || cfg.latent_dim < 1 || cfg.obs_dim < 1) {
    throw std::invalid_argument("make_latent_cluster_stream: bad config");
  }
  Rng rng(seed);

  Eigen::MatrixXd centers(cfg.n_clusters, cfg.latent_dim);
  for (int k = 0; k < cfg.n_clusters; ++k) {
    const double angle = 2.0 * 3.14159265358979323846 * k / cfg.n_clusters;
    for (int j = 0; j < cfg.latent_dim; ++j) {
      centers(k, j) = j == 0   ? cfg.cluster_radius * std::cos(angle)
                      : j == 1 ? cfg.cluster_radius * std::sin(angle)
                               : 0.0;
    }
  }

  // Fixed smooth lift shared by the whole stream: linear map plus a
  // sinusoidal warp, both drawn once from the seed.
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  Eigen::MatrixXd lin(cfg.obs_dim, cfg.latent_dim);
  Eigen::MatrixXd warp(cfg.obs_dim, cfg.latent_dim);
  for (int i = 0; i < cfg.obs_dim; ++i) {
    for (int j = 0; j < cfg.latent_dim; ++j) lin(i, j) = scale * rng.normal();
  }
  for (int i = 0; i < cfg.obs_dim; ++i) {
    for (int j = 0; j < cfg.latent_dim; ++j) warp(i, j) = scale * rng.normal();
  }

  std::vector<LatentSample> out(t);
  for (long i = 0; i < t; ++i) {
    const int label = static_cast<int>(rng.uniform() * cfg.n_clusters) %
                      cfg.n_clusters;
    Eigen::VectorXd z = centers.row(label).transpose();
    for (int j = 0; j < cfg.latent_dim; ++j) {
      z(j) += cfg.cluster_spread * rng.normal();
    }
    Eigen::VectorXd y = lin * z + cfg.warp * (warp * z).array().sin().matrix();
    for (int j = 0; j < cfg.obs_dim; ++j) y(j) += cfg.noise_sd * rng.normal();
    out[i].y = std::move(y);
    out[i].label = label;
  }
  return out;
}

}  // namespace streamgp
