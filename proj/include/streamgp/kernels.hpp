#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace streamgp {

enum class KernelFamily { kRbf, kLaplace, kCauchy };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Shift-invariant kernel description.  `lengthscale` holds either one entry
// (isotropic, broadcast over dimensions) or `input_dim` entries.
struct KernelSpec {
  KernelFamily family = KernelFamily::kRbf;
  int input_dim = 1;
  Eigen::VectorXd lengthscale = Eigen::VectorXd::Ones(1);
  double magnitude = 1.0;  // prior variance of the function values
  double noise_var = 0.01;

  // Throws std::invalid_argument describing the offending field.
  void validate() const;

  double lengthscale_for(int dim) const {
    return lengthscale.size() == 1 ? lengthscale(0) : lengthscale(dim);
  }

  // Exact (unit-magnitude) kernel value at lag `delta`; the random-feature
  // map approximates this.  Used by oracles and by the synthetic GP streams.
  double standardized_value(const Eigen::VectorXd& delta) const;
};

// Random Fourier feature map.  Rows of `frequencies` are the sampled
// frequency vectors; phi interleaves sin/cos pairs per frequency and is
// scaled so that phi(x).squaredNorm() == 1 for every x.
class FeatureMap {
 public:
  FeatureMap(Eigen::MatrixXd frequencies, std::uint64_t seed);

  int n_rf() const { return static_cast<int>(freq_.rows()); }
  int input_dim() const { return static_cast<int>(freq_.cols()); }
  int feature_dim() const { return 2 * n_rf(); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& frequencies() const { return freq_; }

  Eigen::VectorXd phi(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void phi_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                Eigen::VectorXd& out) const;

  // d(phi)/d(x): feature_dim x input_dim.
  Eigen::MatrixXd phi_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Feature-space kernel estimate.  Evaluated as the mean of
  // cos(v_j . (x - x2)), which equals phi(x).dot(phi(x2)) algebraically but
  // is exactly shift invariant and exactly 1 at zero lag.
  double kernel_approx(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& x2) const;

 private:
  Eigen::MatrixXd freq_;  // n_rf x input_dim
  std::uint64_t seed_;
};

// Draws `n_rf` frequency vectors from the spectral density of `spec`.
// RBF lengthscales scale a standard normal, Laplace kernels draw Cauchy
// frequencies, Cauchy kernels draw Laplace frequencies.
FeatureMap sample_feature_map(const KernelSpec& spec, int n_rf,
                              std::uint64_t seed);

}  // namespace streamgp
