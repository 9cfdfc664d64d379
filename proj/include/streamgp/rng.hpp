#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace streamgp {

// Deterministic RNG with transforms implemented in-house.
//
// mt19937_64 output is pinned by the C++ standard, but the distribution
// adaptors (std::normal_distribution etc.) are not: their algorithms are
// implementation-defined, so two standard libraries may disagree bit for
// bit.  Every consumer in this library needs replayable streams across
// platforms, hence the manual Box-Muller / inverse-CDF transforms below.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform on (0, 1): 53-bit mantissa, offset by half an ulp so that
  // neither endpoint is reachable (log/tan stay finite).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * kInv53;
  }

  // Standard normal via Box-Muller; the paired variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Standard Cauchy via inverse CDF.
  double cauchy() { return std::tan(kPi * (uniform() - 0.5)); }

  // Standard Laplace as a difference of unit exponentials.
  double laplace() { return std::log(uniform()) - std::log(uniform()); }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kPi = 3.14159265358979323846;

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace streamgp
