#pragma once

#include <cstdint>
#include <vector>

#include "streamgp/ensemble.hpp"
#include "streamgp/metrics.hpp"
#include "streamgp/streams.hpp"

namespace streamgp {

// Decorrelates per-expert feature draws that share one base seed.
std::uint64_t expert_seed(std::uint64_t base, int expert);

// Kernel grid over lengthscales, one spec per entry.
std::vector<KernelSpec> make_dictionary(KernelFamily family, int input_dim,
                                        const std::vector<double>& lengthscales,
                                        double magnitude, double noise_var);

// Geometric lengthscale grid 10^k for k in [k_lo, k_hi].
std::vector<double> lengthscale_grid(int k_lo, int k_hi);

Ensemble make_ensemble(const std::vector<KernelSpec>& dictionary, int n_rf,
                       std::uint64_t seed, const EnsembleConfig& config,
                       Likelihood likelihood = Likelihood::kGaussian);

// Feeds data[begin, end) through predict-then-correct steps.  Returns the
// summed ensemble loss; the tracker (optional) records per-step rows.
double run_regression(Ensemble& ensemble,
                      const std::vector<RegressionSample>& data, long begin,
                      long end, RegressionTracker* tracker = nullptr);
double run_classification(Ensemble& ensemble,
                          const std::vector<LabeledSample>& data, long begin,
                          long end, ClassificationTracker* tracker = nullptr);

// Best fixed feature-space regressor in hindsight for one expert's map:
// ridge fit of the penalized negative log likelihood at that expert's
// noise level.
struct HindsightFit {
  double cum_nll = 0.0;    // data term at the optimum
  double penalty = 0.0;    // 0.5 ||theta||^2 / magnitude
  Eigen::VectorXd theta;
};
HindsightFit hindsight_fit(const FeatureMap& map, const KernelSpec& spec,
                           const std::vector<RegressionSample>& data,
                           long begin, long end);

// Comparator used by the static-regret experiments: every expert is fit in
// hindsight, the winner is chosen by penalized objective, and its plain
// cumulative negative log likelihood is returned.
double best_hindsight_nll(const Ensemble& ensemble,
                          const std::vector<RegressionSample>& data,
                          long begin, long end);

// Piecewise comparator: best expert per segment, summed over segments.
double segmented_hindsight_nll(const Ensemble& ensemble,
                               const std::vector<RegressionSample>& data,
                               const std::vector<long>& boundaries);

// Static-regret sweep on the sinusoid-mixture stream.  For each horizon,
// the reported regret is the median over seeds of
//   cumulative ensemble loss - best fixed expert in hindsight.
struct RegretSweepConfig {
  std::vector<long> horizons{200, 400, 800, 1600, 3200};
  int n_seeds = 11;
  std::uint64_t seed_base = 1000;
  int n_rf = 50;
  double x_var = 100.0;
  double noise_var = 0.01;
  int grid_lo = -2;  // dictionary lengthscales 10^k
  int grid_hi = 2;
  EnsembleConfig ensemble;
};
struct RegretCurve {
  std::vector<long> horizons;
  std::vector<double> median_regret;
};
RegretCurve static_regret_curve(const RegretSweepConfig& cfg);

// Switching-regret sweep on a two-regime stream (an abrupt lengthscale
// change at the midpoint).  Comparator: best expert per regime.  Also
// reports the median cumulative loss of the switching and static runs at
// each horizon.
struct SwitchingSweepConfig {
  std::vector<long> horizons{400, 800, 1600, 3200};
  int n_seeds = 11;
  std::uint64_t seed_base = 5000;
  int n_rf = 50;
  double lengthscale_a = 0.01;
  double lengthscale_b = 100.0;
  double noise_var = 1.0;
  // Stay probability; <= 0 tunes it to the horizon as 1 - 1/T.  A constant
  // rate pays a per-step mixing fee, so regret would stop shrinking.
  double q0 = 0.0;
  // Per-step covariance inflation for the adaptive arm.  Without it an
  // expert's posterior precision grows with the first segment's length and
  // post-switch recovery time scales linearly with the horizon.
  double drift_var = 0.001;
};
struct SwitchingCurve {
  std::vector<long> horizons;
  std::vector<double> median_regret;          // switching-mode regret
  std::vector<double> median_switching_loss;  // cumulative losses
  std::vector<double> median_static_loss;
};
SwitchingCurve switching_regret_curve(const SwitchingSweepConfig& cfg);

}  // namespace streamgp
