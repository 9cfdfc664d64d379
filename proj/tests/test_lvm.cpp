#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "streamgp/expert.hpp"
#include "streamgp/hyperopt.hpp"
#include "streamgp/lvm.hpp"
#include "streamgp/metrics.hpp"
#include "streamgp/rng.hpp"
#include "streamgp/streams.hpp"

using namespace streamgp;

namespace {

KernelSpec spec_of(int dim, double ls, double mag, double noise) {
  KernelSpec s;
  s.family = KernelFamily::kRbf;
  s.input_dim = dim;
  s.lengthscale = Eigen::VectorXd::Constant(1, ls);
  s.magnitude = mag;
  s.noise_var = noise;
  return s;
}

Eigen::MatrixXd random_matrix(long rows, long cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Assembles the factored regressor directly from (X, Y) for oracle tests.
LvmExpert make_expert(std::shared_ptr<const FeatureMap> map,
                      const KernelSpec& spec, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd phi = feature_rows(*map, x);
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += spec.noise_var / spec.magnitude;
  LvmExpert e;
  e.map = std::move(map);
  e.spec = spec;
  e.r = Eigen::MatrixXd(a.llt().matrixU());
  e.b = phi.transpose() * y;
  e.embeddings = x;
  return e;
}

}  // namespace

TEST_CASE("rank-one factor update equals a fresh factorization") {
  Rng rng(5);
  const int n = 12;
  Eigen::MatrixXd g = random_matrix(n + 4, n, rng);
  Eigen::MatrixXd a = g.transpose() * g;  // SPD
  Eigen::MatrixXd r = Eigen::MatrixXd(a.llt().matrixU());
  for (int k = 0; k < 6; ++k) {
    Eigen::VectorXd u = random_matrix(n, 1, rng);
    cholesky_update(r, u);
    a += u * u.transpose();
    const Eigen::MatrixXd fresh = Eigen::MatrixXd(a.llt().matrixU());
    // Both factors keep a positive diagonal, so they are identical, not
    // just equal up to signs.
    CHECK((r - fresh).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.transpose() * r - a).cwiseAbs().maxCoeff() < 1e-9);
    for (int i = 0; i < n; ++i) CHECK(r(i, i) > 0.0);
  }
}

TEST_CASE("principal projection is centered, decorrelated, deterministic") {
  Rng rng(11);
  Eigen::MatrixXd y = random_matrix(80, 6, rng);
  y.col(0) *= 4.0;  // give the spectrum a clear order
  y.col(1) *= 2.0;
  const Eigen::MatrixXd e = pca_embed(y, 2);
  REQUIRE(e.rows() == 80);
  REQUIRE(e.cols() == 2);
  CHECK(e.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd cov = e.transpose() * e / 79.0;
  CHECK(std::abs(cov(0, 1)) < 1e-10);
  CHECK(cov(0, 0) > cov(1, 1));  // components come variance-ordered
  CHECK(pca_embed(y, 2) == e);   // bitwise repeatable

  // A rank-one dataset is recovered up to scale by the first component.
  Eigen::VectorXd a = random_matrix(60, 1, rng);
  Eigen::VectorXd w = random_matrix(5, 1, rng);
  Eigen::MatrixXd rank1 = a * w.transpose();
  const Eigen::MatrixXd e1 = pca_embed(rank1, 1);
  const Eigen::VectorXd ac = a.array() - a.mean();
  const double corr =
      e1.col(0).dot(ac) / (e1.col(0).norm() * ac.norm());
  CHECK(std::abs(corr) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("factored prediction matches dense solves and batch experts") {
  Rng rng(21);
  const int t = 25, d = 2, n_obs = 4;
  const KernelSpec s = spec_of(d, 1.0, 1.5, 0.05);
  auto map = std::make_shared<const FeatureMap>(sample_feature_map(s, 14, 22));
  const Eigen::MatrixXd x = random_matrix(t, d, rng);
  const Eigen::MatrixXd y = random_matrix(t, n_obs, rng);
  const LvmExpert e = make_expert(map, s, x, y);

  Eigen::VectorXd q(d);
  q << 0.3, -0.8;
  const LvmPrediction pred = lvm_predict(e, q);

  // Dense oracle.
  const Eigen::MatrixXd phi = feature_rows(*map, x);
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += s.noise_var / s.magnitude;
  const Eigen::VectorXd z = a.ldlt().solve(map->phi(q));
  const Eigen::VectorXd want_mean = (phi.transpose() * y).transpose() * z;
  const double want_var = s.noise_var * (map->phi(q).dot(z) + 1.0);
  CHECK((pred.mean - want_mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(pred.variance == doctest::Approx(want_var).epsilon(1e-9));

  // Cross-check against the streaming regressor, one output at a time.
  for (int j = 0; j < n_obs; ++j) {
    Expert ex(map, s);
    for (int i = 0; i < t; ++i) ex.correct(x.row(i).transpose(), y(i, j));
    const PredictiveMoments pm = ex.predict(q);
    CHECK(pred.mean(j) == doctest::Approx(pm.mean).epsilon(1e-6));
    CHECK(pred.variance == doctest::Approx(pm.variance).epsilon(1e-6));
  }

  // Log density decomposes over output dimensions.
  Eigen::VectorXd obs = random_matrix(n_obs, 1, rng);
  double want_ll = 0.0;
  for (int j = 0; j < n_obs; ++j) {
    const double r = obs(j) - pred.mean(j);
    want_ll += -0.5 * std::log(2.0 * M_PI * pred.variance) -
               0.5 * r * r / pred.variance;
  }
  CHECK(lvm_loglik(e, q, obs) == doctest::Approx(want_ll).epsilon(1e-10));
}

TEST_CASE("absorbing a pair equals rebuilding from scratch") {
  Rng rng(31);
  const KernelSpec s = spec_of(2, 1.2, 1.0, 0.1);
  auto map = std::make_shared<const FeatureMap>(sample_feature_map(s, 12, 32));
  Eigen::MatrixXd x = random_matrix(10, 2, rng);
  Eigen::MatrixXd y = random_matrix(10, 3, rng);
  LvmExpert inc = make_expert(map, s, x.topRows(6), y.topRows(6));
  for (int i = 6; i < 10; ++i) {
    lvm_absorb(inc, x.row(i).transpose(), y.row(i).transpose());
  }
  const LvmExpert full = make_expert(map, s, x, y);
  CHECK((inc.r - full.r).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((inc.b - full.b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(inc.embeddings == x);

  Eigen::VectorXd q(2);
  q << 0.1, 0.4;
  const LvmPrediction a = lvm_predict(inc, q);
  const LvmPrediction b = lvm_predict(full, q);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-10));
}

TEST_CASE("joint likelihood equals the per-dimension sum") {
  Rng rng(41);
  const KernelSpec s = spec_of(2, 1.0, 2.0, 0.3);
  const FeatureMap map = sample_feature_map(s, 10, 42);
  const Eigen::MatrixXd x = random_matrix(18, 2, rng);
  const Eigen::MatrixXd y = random_matrix(18, 4, rng);
  const Eigen::MatrixXd phi = feature_rows(map, x);
  double want = 0.0;
  for (int j = 0; j < 4; ++j) {
    want += RfMarginal(phi, y.col(j)).value(s.magnitude, s.noise_var);
  }
  CHECK(lvm_joint_loglik(map, s, x, y) ==
        doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("joint likelihood gradient matches finite differences") {
  Rng rng(51);
  const KernelSpec s = spec_of(2, 1.0, 1.0, 0.2);
  const FeatureMap map = sample_feature_map(s, 8, 52);
  Eigen::MatrixXd x = random_matrix(6, 2, rng);
  const Eigen::MatrixXd y = random_matrix(6, 3, rng);
  const double prior_var = 2.0;
  Eigen::MatrixXd grad;
  lvm_joint_loglik_grad(map, s, x, y, prior_var, grad);
  const double h = 1e-6;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      Eigen::MatrixXd xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fp = lvm_joint_loglik(map, s, xp, y) -
                        0.5 * xp.squaredNorm() / prior_var;
      const double fm = lvm_joint_loglik(map, s, xm, y) -
                        0.5 * xm.squaredNorm() / prior_var;
      const double fd = (fp - fm) / (2.0 * h);
      CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("embedding ascent lands on a stationary point") {
  Rng rng(61);
  const KernelSpec s = spec_of(2, 1.5, 1.0, 0.05);
  auto map = std::make_shared<const FeatureMap>(sample_feature_map(s, 20, 62));
  const Eigen::MatrixXd x = random_matrix(30, 2, rng);
  Eigen::MatrixXd y(30, 3);
  // Smooth deterministic lift keeps the MAP problem well behaved.
  for (int i = 0; i < 30; ++i) {
    y(i, 0) = std::sin(x(i, 0));
    y(i, 1) = std::cos(x(i, 1));
    y(i, 2) = 0.5 * x(i, 0) * x(i, 1);
  }
  const LvmExpert e = make_expert(map, s, x, y);

  LvmOptions opts;
  opts.prior_var = 4.0;
  opts.embed_max_iters = 200;
  opts.embed_tol = 1e-10;
  Eigen::VectorXd truth(2);
  truth << 0.4, -0.2;
  Eigen::VectorXd obs(3);
  obs << std::sin(truth(0)), std::cos(truth(1)),
      0.5 * truth(0) * truth(1);
  Eigen::VectorXd x0 = truth + 0.1 * random_matrix(2, 1, rng);
  const EmbedResult res = lvm_embed(e, obs, x0, opts);

  CHECK(res.loglik == doctest::Approx(lvm_loglik(e, res.x, obs)).epsilon(1e-9));
  CHECK(res.objective ==
        doctest::Approx(res.loglik -
                        0.5 * res.x.squaredNorm() / opts.prior_var)
            .epsilon(1e-9));
  // The objective gradient vanishes at the returned point.
  const double h = 1e-5;
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd xp = res.x, xm = res.x;
    xp(j) += h;
    xm(j) -= h;
    const double fd = (lvm_loglik(e, xp, obs) -
                       0.5 * xp.squaredNorm() / opts.prior_var -
                       lvm_loglik(e, xm, obs) +
                       0.5 * xm.squaredNorm() / opts.prior_var) /
                      (2.0 * h);
    CHECK(std::abs(fd) < 1e-3);
  }
  // And it improved on the start.
  const double start_obj = lvm_loglik(e, x0, obs) -
                           0.5 * x0.squaredNorm() / opts.prior_var;
  CHECK(res.objective >= start_obj - 1e-12);
}

TEST_CASE("exact index returns the true nearest neighbor") {
  Rng rng(71);
  NnIndex idx(3, /*approximate=*/false);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 120; ++i) {
    Eigen::VectorXd v = random_matrix(3, 1, rng);
    pts.push_back(v);
    CHECK(idx.insert(v) == i);
  }
  for (int q = 0; q < 25; ++q) {
    Eigen::VectorXd query = random_matrix(3, 1, rng);
    int best = -1;
    double best_d = 0.0;
    for (int i = 0; i < 120; ++i) {
      const double d = (pts[i] - query).squaredNorm();
      if (best < 0 || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    CHECK(idx.nearest(query) == best);
    const std::vector<int> top = idx.nearest_k(query, 5);
    REQUIRE(top.size() == 5);
    CHECK(top[0] == best);
    for (size_t j = 1; j < top.size(); ++j) {
      CHECK((pts[top[j - 1]] - query).squaredNorm() <=
            (pts[top[j]] - query).squaredNorm());
    }
  }
  CHECK(idx.nearest(pts[7]) == 7);
}

TEST_CASE("duplicate points resolve to the lowest id") {
  NnIndex exact(2, false);
  NnIndex graph(2, true);
  Eigen::VectorXd v(2);
  v << 1.0, 2.0;
  for (int i = 0; i < 5; ++i) {
    exact.insert(v);
    graph.insert(v);
  }
  CHECK(exact.nearest(v) == 0);
  CHECK(graph.nearest(v) == 0);
}

TEST_CASE("graph index finds near neighbors with sublinear work") {
  Rng rng(81);
  const int n = 2000, dim = 8;
  NnIndex graph(dim, true, 7);
  NnIndex exact(dim, false);
  // Clustered data, matching how the index is used downstream.
  std::vector<Eigen::VectorXd> centers;
  for (int c = 0; c < 5; ++c) centers.push_back(4.0 * random_matrix(dim, 1, rng));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = centers[i % 5] + 0.5 * random_matrix(dim, 1, rng);
    graph.insert(v);
    exact.insert(v);
  }
  const long build_evals = graph.distance_evaluations();
  int agree = 0;
  const int queries = 60;
  for (int q = 0; q < queries; ++q) {
    Eigen::VectorXd query =
        centers[q % 5] + 0.5 * random_matrix(dim, 1, rng);
    const int got = graph.nearest(query);
    const int want = exact.nearest(query);
    if (got == want) {
      ++agree;
    } else {
      // Even a miss must be a near neighbor, not garbage.
      const double got_d = (graph.point(got) - query).norm();
      const double want_d = (exact.point(want) - query).norm();
      CHECK(got_d <= 2.0 * want_d + 1e-9);
    }
  }
  CHECK(agree >= queries * 9 / 10);
  // Per query the beam touches a small fraction of the data.
  const long per_query =
      (graph.distance_evaluations() - build_evals) / queries;
  CHECK(per_query < n / 2);

  // Same seed and insertion order reproduce the same answers.
  NnIndex again(dim, true, 7);
  for (int i = 0; i < n; ++i) again.insert(exact.point(i));
  Eigen::VectorXd probe = centers[2] + 0.3 * random_matrix(dim, 1, rng);
  CHECK(again.nearest(probe) == graph.nearest(probe));
  CHECK(again.nearest_k(probe, 8) == graph.nearest_k(probe, 8));
}

TEST_CASE("latent ensemble untangles clustered observations") {
  LatentClusterConfig cfg;
  cfg.n_clusters = 3;
  cfg.obs_dim = 8;
  const auto stream = make_latent_cluster_stream(160, cfg, 7);
  const int t0 = 40;

  LvmOptions opts;
  opts.latent_dim = 2;
  opts.prior_var = 25.0;
  opts.init_max_iters = 60;
  std::vector<std::pair<std::shared_ptr<const FeatureMap>, KernelSpec>> dict;
  std::uint64_t seed = 400;
  for (double ls : {1.0, 3.0}) {
    KernelSpec s = spec_of(2, ls, 1.0, 0.05);
    dict.emplace_back(
        std::make_shared<const FeatureMap>(sample_feature_map(s, 30, seed++)),
        s);
  }
  LvmEnsemble ens(dict, opts);
  CHECK(!ens.initialized());

  Eigen::MatrixXd y0(t0, cfg.obs_dim);
  for (int i = 0; i < t0; ++i) y0.row(i) = stream[i].y.transpose();
  ens.init(y0);
  REQUIRE(ens.initialized());
  CHECK(ens.index().size() == t0);

  for (size_t i = t0; i < stream.size(); ++i) {
    const auto res = ens.step(stream[i].y);
    CHECK(std::isfinite(res.loss));
    CHECK(res.selected >= 0);
    CHECK(res.selected < 2);
    REQUIRE(res.embedding.size() == 2);
  }
  // Weights stay a distribution.
  double total = 0.0;
  for (int m = 0; m < 2; ++m) total += std::exp(ens.log_weights()(m));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  const Eigen::MatrixXd emb = ens.reported();
  REQUIRE(emb.rows() == static_cast<long>(stream.size()));
  std::vector<int> labels;
  for (const auto& s : stream) labels.push_back(s.label);
  const double err = loo_1nn_error(emb, labels);
  CHECK(err < 0.25);  // clusters survive the round trip through 8 dims
}
