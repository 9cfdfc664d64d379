#include "streamgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "streamgp/rng.hpp"

namespace streamgp {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kRbf:
      return "rbf";
    case KernelFamily::kLaplace:
      return "laplace";
    case KernelFamily::kCauchy:
      return "cauchy";
  }
  return "rbf";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "rbf" || name == "gaussian") return KernelFamily::kRbf;
  if (name == "laplace") return KernelFamily::kLaplace;
  if (name == "cauchy") return KernelFamily::kCauchy;
  throw std::invalid_argument("unknown kernel family: " + name);
}

void KernelSpec::validate() const {
  if (input_dim < 1) {
    throw std::invalid_argument("KernelSpec: input_dim must be positive");
  }
  if (lengthscale.size() != 1 && lengthscale.size() != input_dim) {
    throw std::invalid_argument(
        "KernelSpec: lengthscale must have 1 or input_dim entries");
  }
  for (Eigen::Index i = 0; i < lengthscale.size(); ++i) {
    if (!(lengthscale(i) > 0.0) || !std::isfinite(lengthscale(i))) {
      throw std::invalid_argument(
          "KernelSpec: lengthscale entries must be positive and finite");
    }
  }
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw std::invalid_argument("KernelSpec: magnitude must be positive");
  }
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw std::invalid_argument("KernelSpec: noise_var must be positive");
  }
}

double KernelSpec::standardized_value(const Eigen::VectorXd& delta) const {
  double acc = family == KernelFamily::kCauchy ? 1.0 : 0.0;
  for (int i = 0; i < input_dim; ++i) {
    const double r = delta(i) / lengthscale_for(i);
    switch (family) {
      case KernelFamily::kRbf:
        acc += 0.5 * r * r;
        break;
      case KernelFamily::kLaplace:
        acc += std::abs(r);
        break;
      case KernelFamily::kCauchy:
        acc *= 1.0 / (1.0 + r * r);
        break;
    }
  }
  return family == KernelFamily::kCauchy ? acc : std::exp(-acc);
}

FeatureMap::FeatureMap(Eigen::MatrixXd frequencies, std::uint64_t seed)
    : freq_(std::move(frequencies)), seed_(seed) {
  if (freq_.rows() < 1 || freq_.cols() < 1) {
    throw std::invalid_argument("FeatureMap: empty frequency matrix");
  }
}

Eigen::VectorXd FeatureMap::phi(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(feature_dim());
  phi_into(x, out);
  return out;
}

void FeatureMap::phi_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::VectorXd& out) const {
  const int n = n_rf();
  out.resize(2 * n);
  const Eigen::VectorXd proj = freq_ * x;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    out(2 * j) = scale * std::sin(proj(j));
    out(2 * j + 1) = scale * std::cos(proj(j));
  }
}

Eigen::MatrixXd FeatureMap::phi_jacobian(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int n = n_rf();
  Eigen::MatrixXd jac(2 * n, input_dim());
  const Eigen::VectorXd proj = freq_ * x;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    jac.row(2 * j) = scale * std::cos(proj(j)) * freq_.row(j);
    jac.row(2 * j + 1) = -scale * std::sin(proj(j)) * freq_.row(j);
  }
  return jac;
}

double FeatureMap::kernel_approx(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& x2) const {
  const Eigen::VectorXd proj = freq_ * (x - x2);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < proj.size(); ++j) acc += std::cos(proj(j));
  return acc / static_cast<double>(n_rf());
}

FeatureMap sample_feature_map(const KernelSpec& spec, int n_rf,
                              std::uint64_t seed) {
  spec.validate();
  if (n_rf < 1) {
    throw std::invalid_argument("sample_feature_map: n_rf must be positive");
  }
  Rng rng(seed);
  Eigen::MatrixXd freq(n_rf, spec.input_dim);
  // Row major fill so adding dimensions reuses the per-row draw order.
  for (int j = 0; j < n_rf; ++j) {
    for (int i = 0; i < spec.input_dim; ++i) {
      double draw = 0.0;
      switch (spec.family) {
        case KernelFamily::kRbf:
          draw = rng.normal();
          break;
        case KernelFamily::kLaplace:
          draw = rng.cauchy();
          break;
        case KernelFamily::kCauchy:
          draw = rng.laplace();
          break;
      }
      freq(j, i) = draw / spec.lengthscale_for(i);
    }
  }
  return FeatureMap(std::move(freq), seed);
}

}  // namespace streamgp
