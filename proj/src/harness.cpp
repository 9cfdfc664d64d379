#include "streamgp/harness.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "streamgp/hyperopt.hpp"

namespace streamgp {

std::uint64_t expert_seed(std::uint64_t base, int expert) {
  // splitmix64 of (base, expert): one multiply-xor round is enough to
  // decorrelate neighboring expert indices.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (expert + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<KernelSpec> make_dictionary(KernelFamily family, int input_dim,
                                        const std::vector<double>& lengthscales,
                                        double magnitude, double noise_var) {
  std::vector<KernelSpec> out;
  out.reserve(lengthscales.size());
  for (double ls : lengthscales) {
    KernelSpec spec;
    spec.family = family;
    spec.input_dim = input_dim;
    spec.lengthscale = Eigen::VectorXd::Constant(1, ls);
    spec.magnitude = magnitude;
    spec.noise_var = noise_var;
    spec.validate();
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<double> lengthscale_grid(int k_lo, int k_hi) {
  if (k_lo > k_hi) throw std::invalid_argument("lengthscale_grid: empty");
  std::vector<double> out;
  for (int k = k_lo; k <= k_hi; ++k) {
    out.push_back(std::pow(10.0, static_cast<double>(k)));
  }
  return out;
}

Ensemble make_ensemble(const std::vector<KernelSpec>& dictionary, int n_rf,
                       std::uint64_t seed, const EnsembleConfig& config,
                       Likelihood likelihood) {
  std::vector<Expert> experts;
  experts.reserve(dictionary.size());
  for (size_t m = 0; m < dictionary.size(); ++m) {
    auto map = std::make_shared<const FeatureMap>(sample_feature_map(
        dictionary[m], n_rf, expert_seed(seed, static_cast<int>(m))));
    experts.emplace_back(std::move(map), dictionary[m], likelihood);
  }
  return Ensemble(std::move(experts), config);
}

double run_regression(Ensemble& ensemble,
                      const std::vector<RegressionSample>& data, long begin,
                      long end, RegressionTracker* tracker) {
  double cum = 0.0;
  for (long t = begin; t < end; ++t) {
    const EnsemblePrediction pred = ensemble.predict(data[t].x);
    const double loss = ensemble.correct(data[t].x, data[t].y);
    cum += loss;
    if (tracker != nullptr) {
      tracker->add(data[t].y, pred.mean, pred.variance, loss);
    }
  }
  return cum;
}

double run_classification(Ensemble& ensemble,
                          const std::vector<LabeledSample>& data, long begin,
                          long end, ClassificationTracker* tracker) {
  double cum = 0.0;
  for (long t = begin; t < end; ++t) {
    const EnsemblePrediction pred = ensemble.predict(data[t].x);
    const double loss = ensemble.correct_label(data[t].x, data[t].label);
    cum += loss;
    if (tracker != nullptr) {
      tracker->add(data[t].label, pred.mean, loss);
    }
  }
  return cum;
}

HindsightFit hindsight_fit(const FeatureMap& map, const KernelSpec& spec,
                           const std::vector<RegressionSample>& data,
                           long begin, long end) {
  const long n = end - begin;
  if (n < 1) throw std::invalid_argument("hindsight_fit: empty window");
  Eigen::MatrixXd phi(n, map.feature_dim());
  Eigen::VectorXd y(n);
  Eigen::VectorXd buf;
  for (long i = 0; i < n; ++i) {
    map.phi_into(data[begin + i].x, buf);
    phi.row(i) = buf.transpose();
    y(i) = data[begin + i].y;
  }
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += spec.noise_var / spec.magnitude;
  HindsightFit out;
  out.theta = a.llt().solve(phi.transpose() * y);
  const double resid2 = (y - phi * out.theta).squaredNorm();
  out.cum_nll = 0.5 * n * std::log(2.0 * 3.14159265358979323846 *
                                   spec.noise_var) +
                0.5 * resid2 / spec.noise_var;
  out.penalty = 0.5 * out.theta.squaredNorm() / spec.magnitude;
  return out;
}

double best_hindsight_nll(const Ensemble& ensemble,
                          const std::vector<RegressionSample>& data,
                          long begin, long end) {
  double best_score = std::numeric_limits<double>::infinity();
  double best_nll = 0.0;
  for (const Expert& e : ensemble.experts()) {
    const HindsightFit fit =
        hindsight_fit(e.map(), e.spec(), data, begin, end);
    const double score = fit.cum_nll + fit.penalty;
    if (score < best_score) {
      best_score = score;
      best_nll = fit.cum_nll;
    }
  }
  return best_nll;
}

double segmented_hindsight_nll(const Ensemble& ensemble,
                               const std::vector<RegressionSample>& data,
                               const std::vector<long>& boundaries) {
  double total = 0.0;
  long begin = 0;
  for (long b : boundaries) {
    if (b > begin) {
      total += best_hindsight_nll(ensemble, data, begin, b);
      begin = b;
    }
  }
  return total;
}

RegretCurve static_regret_curve(const RegretSweepConfig& cfg) {
  const long t_max = cfg.horizons.back();
  const std::vector<KernelSpec> dict =
      make_dictionary(KernelFamily::kRbf, 1,
                      lengthscale_grid(cfg.grid_lo, cfg.grid_hi), 1.0,
                      cfg.noise_var);

  std::vector<std::vector<double>> per_horizon(cfg.horizons.size());
  for (int s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = cfg.seed_base + s;
    const std::vector<RegressionSample> data =
        make_sin_mix_stream(t_max, cfg.x_var, seed, cfg.noise_var);
    Ensemble ens = make_ensemble(dict, cfg.n_rf, seed, cfg.ensemble);

    size_t next = 0;
    double cum = 0.0;
    for (long t = 0; t < t_max; ++t) {
      cum += ens.correct(data[t].x, data[t].y);
      if (next < cfg.horizons.size() && t + 1 == cfg.horizons[next]) {
        const double comparator =
            best_hindsight_nll(ens, data, 0, cfg.horizons[next]);
        per_horizon[next].push_back(cum - comparator);
        ++next;
      }
    }
  }

  RegretCurve out;
  out.horizons = cfg.horizons;
  for (const std::vector<double>& r : per_horizon) {
    out.median_regret.push_back(median(r));
  }
  return out;
}

SwitchingCurve switching_regret_curve(const SwitchingSweepConfig& cfg) {
  std::vector<KernelSpec> dict = make_dictionary(
      KernelFamily::kRbf, 1, {cfg.lengthscale_a, cfg.lengthscale_b}, 1.0,
      cfg.noise_var);

  SwitchingCurve out;
  out.horizons = cfg.horizons;
  for (long t : cfg.horizons) {
    std::vector<double> regret, sw_loss, st_loss;
    for (int s = 0; s < cfg.n_seeds; ++s) {
      const std::uint64_t seed = cfg.seed_base + 131 * t + s;
      std::vector<GpSegment> segments(2);
      segments[0].kernel = dict[0];
      segments[0].length = t / 2;
      segments[1].kernel = dict[1];
      segments[1].length = t - t / 2;
      const std::vector<RegressionSample> data =
          make_gp_stream(segments, 1, seed);

      EnsembleConfig sw_cfg;
      sw_cfg.mode = EnsembleMode::kSwitchingDynamic;
      sw_cfg.q0 = cfg.q0 > 0.0 ? cfg.q0 : 1.0 - 1.0 / static_cast<double>(t);
      sw_cfg.drift_var = cfg.drift_var;
      Ensemble sw = make_ensemble(dict, cfg.n_rf, seed, sw_cfg);
      const double sw_cum = run_regression(sw, data, 0, t);

      EnsembleConfig st_cfg;
      st_cfg.mode = EnsembleMode::kStatic;
      Ensemble st = make_ensemble(dict, cfg.n_rf, seed, st_cfg);
      const double st_cum = run_regression(st, data, 0, t);

      const double comparator =
          segmented_hindsight_nll(sw, data, {t / 2, t});
      regret.push_back(sw_cum - comparator);
      sw_loss.push_back(sw_cum);
      st_loss.push_back(st_cum);
    }
    out.median_regret.push_back(median(regret));
    out.median_switching_loss.push_back(median(sw_loss));
    out.median_static_loss.push_back(median(st_loss));
  }
  return out;
}

}  // namespace streamgp
