#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "streamgp/harness.hpp"
#include "streamgp/metrics.hpp"
#include "streamgp/streams.hpp"

using namespace streamgp;

namespace {

double autocorr1(const std::vector<RegressionSample>& d) {
  double mean = 0.0;
  for (const auto& s : d) mean += s.y;
  mean /= static_cast<double>(d.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    den += (d[i].y - mean) * (d[i].y - mean);
    if (i + 1 < d.size()) num += (d[i].y - mean) * (d[i + 1].y - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("regression tracker reproduces hand-computed summaries") {
  RegressionTracker tr;
  tr.add(1.0, 1.5, 1.0, 0.5);
  tr.add(2.0, 1.5, 0.25, 0.6);
  tr.add(3.0, 2.5, 0.25, 0.7);
  tr.add(4.0, 3.5, 0.01, 0.8);  // residual 0.5 > 1.96 * 0.1, outside the band
  const RegressionMetrics m = tr.summary();
  CHECK(m.count == 4);
  // Residuals (-0.5, 0.5, 0.5, 0.5): sum sq 1.  Deviations from 2.5: sum sq 5.
  CHECK(m.nmse == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(m.mean_nll == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(m.coverage95 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(tr.targets() == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("classification tracker thresholds at one half") {
  ClassificationTracker tr;
  tr.add(1, 0.8, 0.2);    // right
  tr.add(0, 0.3, 0.4);    // 0 means -1, predicted -1, right
  tr.add(1, 0.2, 1.6);    // wrong
  tr.add(-1, 0.9, 2.3);   // wrong
  tr.add(1, 0.5, 0.7);    // boundary counts as +1, right
  const ClassificationMetrics m = tr.summary();
  CHECK(m.count == 5);
  CHECK(m.error_rate == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(m.mean_nll == doctest::Approx(1.04).epsilon(1e-12));
  CHECK(tr.labels() == std::vector<int>{1, -1, 1, -1, 1});
}

TEST_CASE("median") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  std::vector<double> v{9.0, 2.0, 7.0};
  CHECK(median(v) == 7.0);
  CHECK(v == std::vector<double>{9.0, 2.0, 7.0});  // input untouched
}

TEST_CASE("leave-one-out neighbor error on hand-built layouts") {
  Eigen::MatrixXd e(4, 2);
  e << 0.0, 0.0, 0.1, 0.0, 5.0, 5.0, 5.1, 5.0;
  CHECK(loo_1nn_error(e, {0, 0, 1, 1}) == 0.0);
  CHECK(loo_1nn_error(e, {0, 1, 1, 1}) == 0.5);
  CHECK(loo_1nn_error(e, {0, 1, 0, 1}) == 1.0);
}

TEST_CASE("sinusoid stream has the advertised shape") {
  const auto d = make_sin_mix_stream(4000, 100.0, 9, 0.04);
  REQUIRE(d.size() == 4000);
  double x_sq = 0.0, resid_sq = 0.0, resid_mean = 0.0;
  for (const auto& s : d) {
    REQUIRE(s.x.size() == 1);
    x_sq += s.x(0) * s.x(0);
    const double r =
        s.y - (std::sin(2.0 * s.x(0)) + std::sin(3.0 * s.x(0)));
    resid_mean += r;
    resid_sq += r * r;
  }
  x_sq /= 4000.0;
  resid_mean /= 4000.0;
  resid_sq /= 4000.0;
  CHECK(x_sq == doctest::Approx(100.0).epsilon(0.1));
  CHECK(std::abs(resid_mean) < 0.02);
  CHECK(resid_sq == doctest::Approx(0.04).epsilon(0.1));

  const auto again = make_sin_mix_stream(50, 100.0, 9, 0.04);
  for (int i = 0; i < 50; ++i) {
    CHECK(again[i].x(0) == d[i].x(0));
    CHECK(again[i].y == d[i].y);
  }
}

TEST_CASE("piecewise stationary stream honors its kernels") {
  KernelSpec flat;
  flat.family = KernelFamily::kRbf;
  flat.input_dim = 2;
  flat.lengthscale = Eigen::VectorXd::Constant(1, 1e3);
  flat.magnitude = 4.0;
  flat.noise_var = 0.01;
  KernelSpec jagged = flat;
  jagged.lengthscale = Eigen::VectorXd::Constant(1, 1e-6);
  jagged.magnitude = 1.0;

  const auto d = make_gp_stream({{flat, 300}, {jagged, 300}}, 2, 17);
  REQUIRE(d.size() == 600);
  // A near-constant kernel makes the first segment one shared level plus
  // observation noise.
  double m0 = 0.0;
  for (int i = 0; i < 300; ++i) m0 += d[i].y;
  m0 /= 300.0;
  double v0 = 0.0;
  for (int i = 0; i < 300; ++i) v0 += (d[i].y - m0) * (d[i].y - m0);
  v0 /= 299.0;
  CHECK(v0 < 0.5);

  // A near-white kernel makes the second segment uncorrelated draws with
  // variance close to magnitude + noise.
  std::vector<RegressionSample> seg(d.begin() + 300, d.end());
  double m1 = 0.0;
  for (const auto& s : seg) m1 += s.y;
  m1 /= 300.0;
  double v1 = 0.0;
  for (const auto& s : seg) v1 += (s.y - m1) * (s.y - m1);
  v1 /= 299.0;
  CHECK(v1 > 0.6);
  CHECK(v1 < 1.6);
  CHECK(std::abs(autocorr1(seg)) < 0.2);

  const auto again = make_gp_stream({{flat, 300}, {jagged, 300}}, 2, 17);
  CHECK(again[123].y == d[123].y);
  CHECK(again[456].x == d[456].x);
}

TEST_CASE("two-cluster label stream is balanced and centered") {
  const auto d = make_two_gaussian_stream(2000, 1.5, 33);
  REQUIRE(d.size() == 2000);
  long pos = 0;
  Eigen::Vector2d mean_pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d mean_neg = Eigen::Vector2d::Zero();
  for (const auto& s : d) {
    REQUIRE(s.x.size() == 2);
    REQUIRE((s.label == 1 || s.label == -1));
    if (s.label == 1) {
      ++pos;
      mean_pos += s.x;
    } else {
      mean_neg += s.x;
    }
  }
  CHECK(pos > 850);
  CHECK(pos < 1150);
  mean_pos /= static_cast<double>(pos);
  mean_neg /= static_cast<double>(2000 - pos);
  CHECK((mean_pos - Eigen::Vector2d::Constant(1.5)).norm() < 0.2);
  CHECK((mean_neg - Eigen::Vector2d::Constant(-1.5)).norm() < 0.2);
}

TEST_CASE("latent cluster stream keeps clusters apart in observation space") {
  LatentClusterConfig cfg;
  cfg.n_clusters = 3;
  cfg.obs_dim = 10;
  const auto d = make_latent_cluster_stream(300, cfg, 4);
  REQUIRE(d.size() == 300);
  std::vector<Eigen::VectorXd> centroid(3, Eigen::VectorXd::Zero(10));
  std::vector<long> counts(3, 0);
  for (const auto& s : d) {
    REQUIRE(s.y.size() == 10);
    REQUIRE(s.label >= 0);
    REQUIRE(s.label < 3);
    centroid[s.label] += s.y;
    ++counts[s.label];
  }
  for (int c = 0; c < 3; ++c) {
    REQUIRE(counts[c] > 0);
    centroid[c] /= static_cast<double>(counts[c]);
  }
  double within = 0.0;
  for (const auto& s : d) within += (s.y - centroid[s.label]).norm();
  within /= 300.0;
  double between = 1e300;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      between = std::min(between, (centroid[a] - centroid[b]).norm());
  CHECK(between > 3.0 * within);

  // The same seed replays the same lift and the same noise.
  const auto again = make_latent_cluster_stream(300, cfg, 4);
  CHECK(again[250].y == d[250].y);
  CHECK(again[250].label == d[250].label);
}

TEST_CASE("per-expert seeds are distinct and stable") {
  std::vector<std::uint64_t> seen;
  for (int m = 0; m < 25; ++m) {
    const std::uint64_t s = expert_seed(42, m);
    for (std::uint64_t prev : seen) CHECK(s != prev);
    seen.push_back(s);
  }
  CHECK(expert_seed(42, 3) == expert_seed(42, 3));
  CHECK(expert_seed(42, 3) != expert_seed(43, 3));
}

TEST_CASE("lengthscale grids and dictionaries") {
  const std::vector<double> g = lengthscale_grid(-2, 2);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(g[2] == 1.0);
  CHECK(g[4] == doctest::Approx(100.0).epsilon(1e-12));

  const auto dict =
      make_dictionary(KernelFamily::kLaplace, 3, {0.5, 2.0}, 1.5, 0.1);
  REQUIRE(dict.size() == 2);
  CHECK(dict[0].family == KernelFamily::kLaplace);
  CHECK(dict[0].input_dim == 3);
  CHECK(dict[0].lengthscale_for(0) == 0.5);
  CHECK(dict[1].lengthscale_for(2) == 2.0);
  CHECK(dict[1].magnitude == 1.5);
  CHECK(dict[1].noise_var == 0.1);
}

TEST_CASE("hindsight comparator matches the dense ridge oracle") {
  const auto data = make_sin_mix_stream(80, 4.0, 55, 0.05);
  KernelSpec s;
  s.family = KernelFamily::kRbf;
  s.input_dim = 1;
  s.lengthscale = Eigen::VectorXd::Constant(1, 1.0);
  s.magnitude = 2.0;
  s.noise_var = 0.05;
  const FeatureMap map = sample_feature_map(s, 16, 56);
  const HindsightFit fit = hindsight_fit(map, s, data, 10, 70);

  const long n = 60;
  Eigen::MatrixXd phi(n, map.feature_dim());
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    phi.row(i) = map.phi(data[10 + i].x).transpose();
    y(i) = data[10 + i].y;
  }
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += s.noise_var / s.magnitude;
  const Eigen::VectorXd theta = a.ldlt().solve(phi.transpose() * y);
  const double rss = (y - phi * theta).squaredNorm();
  const double nll = 0.5 * static_cast<double>(n) *
                         std::log(2.0 * M_PI * s.noise_var) +
                     0.5 * rss / s.noise_var;
  CHECK((fit.theta - theta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.cum_nll == doctest::Approx(nll).epsilon(1e-10));
  CHECK(fit.penalty ==
        doctest::Approx(0.5 * theta.squaredNorm() / s.magnitude)
            .epsilon(1e-9));
}

TEST_CASE("best and segmented comparators agree with direct evaluation") {
  const auto data = make_sin_mix_stream(120, 4.0, 57, 0.05);
  const auto dict = make_dictionary(KernelFamily::kRbf, 1,
                                    lengthscale_grid(-1, 1), 1.0, 0.05);
  const Ensemble ens = make_ensemble(dict, 20, 58, EnsembleConfig{});

  double best_pen = 1e300, best_nll = 0.0;
  for (int m = 0; m < ens.size(); ++m) {
    const HindsightFit f =
        hindsight_fit(ens.experts()[m].map(), ens.experts()[m].spec(), data, 0,
                      120);
    if (f.cum_nll + f.penalty < best_pen) {
      best_pen = f.cum_nll + f.penalty;
      best_nll = f.cum_nll;
    }
  }
  CHECK(best_hindsight_nll(ens, data, 0, 120) ==
        doctest::Approx(best_nll).epsilon(1e-12));
  CHECK(segmented_hindsight_nll(ens, data, {60, 120}) ==
        doctest::Approx(best_hindsight_nll(ens, data, 0, 60) +
                        best_hindsight_nll(ens, data, 60, 120))
            .epsilon(1e-12));
}

TEST_CASE("harness run loops feed trackers consistently") {
  const auto data = make_sin_mix_stream(100, 4.0, 59, 0.05);
  const auto dict = make_dictionary(KernelFamily::kRbf, 1,
                                    lengthscale_grid(-1, 1), 1.0, 0.05);
  Ensemble ens = make_ensemble(dict, 20, 60, EnsembleConfig{});
  RegressionTracker tr;
  const double total = run_regression(ens, data, 0, 100, &tr);
  CHECK(tr.count() == 100);
  double sum = 0.0;
  for (double l : tr.losses()) sum += l;
  CHECK(total == doctest::Approx(sum).epsilon(1e-12));
  CHECK(total == doctest::Approx(ens.cumulative_loss()).epsilon(1e-12));
  const RegressionMetrics m = tr.summary();
  CHECK(m.nmse < 1.0);  // better than predicting the mean

  const auto labeled = make_two_gaussian_stream(150, 1.5, 61);
  Ensemble cls = make_ensemble(dict, 15, 62, EnsembleConfig{},
                               Likelihood::kLogistic);
  ClassificationTracker ct;
  const double cls_total = run_classification(cls, labeled, 0, 150, &ct);
  CHECK(ct.count() == 150);
  CHECK(std::isfinite(cls_total));
  CHECK(ct.summary().error_rate < 0.3);
}

TEST_CASE("regret sweep plumbing produces well-formed curves") {
  RegretSweepConfig cfg;
  cfg.horizons = {40, 80};
  cfg.n_seeds = 3;
  cfg.n_rf = 12;
  cfg.grid_lo = -1;
  cfg.grid_hi = 1;
  const RegretCurve curve = static_regret_curve(cfg);
  REQUIRE(curve.horizons == std::vector<long>{40, 80});
  REQUIRE(curve.median_regret.size() == 2);
  for (double r : curve.median_regret) CHECK(std::isfinite(r));
}
