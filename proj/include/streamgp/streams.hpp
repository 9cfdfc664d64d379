#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "streamgp/kernels.hpp"

namespace streamgp {

struct RegressionSample {
  Eigen::VectorXd x;
  double y = 0.0;
};

struct LabeledSample {
  Eigen::VectorXd x;
  int label = 0;  // -1 / +1
};

struct LatentSample {
  Eigen::VectorXd y;
  int label = 0;  // cluster id, for evaluation only
};

// Scalar regression stream y = sin(2x) + sin(3x) + noise, x ~ N(0, x_var).
std::vector<RegressionSample> make_sin_mix_stream(long t, double x_var,
                                                  std::uint64_t seed,
                                                  double noise_var = 0.01);

// Piecewise-stationary stream: each segment is an independent exact draw
// from the segment's kernel (dense factorization, so desk scale only),
// observed with that kernel's noise.  Inputs are N(0, I).
struct GpSegment {
  KernelSpec kernel;
  long length = 0;
};
std::vector<RegressionSample> make_gp_stream(
    const std::vector<GpSegment>& segments, int input_dim,
    std::uint64_t seed);

// Balanced labels, class-conditional N(+-center, I) in the plane.
std::vector<LabeledSample> make_two_gaussian_stream(long t, double center,
                                                    std::uint64_t seed);

// Clustered latent points pushed through a fixed smooth lift into obs_dim
// dimensions.  Labels index the latent cluster.
struct LatentClusterConfig {
  int n_clusters = 3;
  int latent_dim = 2;
  int obs_dim = 10;
  double cluster_radius = 3.0;
  double cluster_spread = 0.3;
  double warp = 0.5;      // strength of the sinusoidal part of the lift
  double noise_sd = 0.05;
};
std::vector<LatentSample> make_latent_cluster_stream(
    long t, const LatentClusterConfig& cfg, std::uint64_t seed);

}  // namespace streamgp
