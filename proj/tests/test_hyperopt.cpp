#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "streamgp/expert.hpp"
#include "streamgp/hyperopt.hpp"
#include "streamgp/rng.hpp"

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

// Dense t x t oracle: log N(y; 0, mag * Phi Phi^T + noise * I).
double dense_marginal(const Eigen::MatrixXd& phi_rows,
                      const Eigen::VectorXd& y, double mag, double noise) {
  const long t = phi_rows.rows();
  Eigen::MatrixXd c = mag * (phi_rows * phi_rows.transpose());
  c.diagonal().array() += noise;
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  const Eigen::VectorXd alpha = llt.solve(y);
  double logdet = 0.0;
  for (long i = 0; i < t; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * y.dot(alpha) - 0.5 * logdet -
         0.5 * static_cast<double>(t) * std::log(2.0 * M_PI);
}

struct Problem {
  Eigen::MatrixXd x_rows;
  Eigen::MatrixXd phi_rows;
  Eigen::VectorXd y;
  std::shared_ptr<const FeatureMap> map;
};

Problem make_problem(int t, int dim, int n_rf, double mag, double noise,
                     std::uint64_t seed) {
  const KernelSpec s = spec_of(dim, 1.0, mag, noise);
  Problem p;
  p.map = std::make_shared<const FeatureMap>(sample_feature_map(s, n_rf, seed));
  Rng rng(seed + 1);
  p.x_rows.resize(t, dim);
  for (long i = 0; i < p.x_rows.size(); ++i) {
    p.x_rows(i / dim, i % dim) = rng.normal();
  }
  p.phi_rows = feature_rows(*p.map, p.x_rows);
  // Draw y from the model itself so the fit has a truth to find.
  Eigen::VectorXd theta(p.map->feature_dim());
  for (int j = 0; j < theta.size(); ++j) theta(j) = std::sqrt(mag) * rng.normal();
  p.y = p.phi_rows * theta;
  for (int i = 0; i < t; ++i) p.y(i) += std::sqrt(noise) * rng.normal();
  return p;
}

}  // namespace

TEST_CASE("feature-space likelihood matches the dense computation") {
  const Problem p = make_problem(40, 2, 12, 1.5, 0.2, 70);
  const RfMarginal ml(p.phi_rows, p.y);
  for (double mag : {0.1, 1.0, 8.0}) {
    for (double noise : {0.01, 0.3, 2.0}) {
      const double want = dense_marginal(p.phi_rows, p.y, mag, noise);
      CHECK(ml.value(mag, noise) == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("likelihood gradients match central differences") {
  const Problem p = make_problem(30, 2, 10, 0.8, 0.15, 71);
  const RfMarginal ml(p.phi_rows, p.y);
  const double h = 1e-6;
  for (double mag : {0.3, 2.0}) {
    for (double noise : {0.05, 0.9}) {
      Eigen::Vector2d g;
      ml.value_and_grad(mag, noise, g);
      const double da =
          (ml.value(mag * std::exp(h), noise) -
           ml.value(mag * std::exp(-h), noise)) / (2.0 * h);
      const double db =
          (ml.value(mag, noise * std::exp(h)) -
           ml.value(mag, noise * std::exp(-h))) / (2.0 * h);
      CHECK(g(0) == doctest::Approx(da).epsilon(1e-5));
      CHECK(g(1) == doctest::Approx(db).epsilon(1e-5));
    }
  }
}

TEST_CASE("one-step losses telescope into the batch likelihood") {
  // The product of Gaussian one-step predictives is the joint marginal, so
  // the summed online losses must equal the negative batch log likelihood.
  const double mag = 1.2, noise = 0.3;
  const Problem p = make_problem(60, 3, 15, mag, noise, 72);
  const KernelSpec s = spec_of(3, 1.0, mag, noise);
  Expert e(p.map, s);
  double cum = 0.0;
  for (int i = 0; i < 60; ++i) {
    cum += e.correct(p.x_rows.row(i).transpose(), p.y(i));
  }
  const RfMarginal ml(p.phi_rows, p.y);
  CHECK(cum == doctest::Approx(-ml.value(mag, noise)).epsilon(1e-8));
}

TEST_CASE("gradient ascent recovers planted hyperparameters") {
  const double mag = 2.0, noise = 0.05;
  const Problem p = make_problem(400, 2, 20, mag, noise, 73);
  MarginalFitOptions opts;
  opts.init_magnitude = 0.5;
  opts.init_noise_var = 0.5;
  const MarginalFitResult fit =
      fit_marginal_likelihood(*p.map, p.x_rows, p.y, opts);
  CHECK(fit.converged);
  CHECK(fit.magnitude > mag / 4.0);
  CHECK(fit.magnitude < mag * 4.0);
  CHECK(fit.noise_var > noise / 4.0);
  CHECK(fit.noise_var < noise * 4.0);
  const RfMarginal ml(p.phi_rows, p.y);
  // The optimum cannot be worse than the planted truth.
  CHECK(fit.log_likelihood >= ml.value(mag, noise) - 1e-6);
  CHECK(fit.log_likelihood ==
        doctest::Approx(ml.value(fit.magnitude, fit.noise_var)).epsilon(1e-10));
}

TEST_CASE("fit stays inside the box") {
  // Pure noise data drives the magnitude to the floor instead of escaping.
  Rng rng(74);
  const KernelSpec s = spec_of(1, 1.0, 1.0, 1.0);
  auto map = sample_feature_map(s, 8, 75);
  Eigen::MatrixXd x(50, 1);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    x(i, 0) = rng.normal();
    y(i) = rng.normal();
  }
  MarginalFitOptions opts;
  opts.lower = 1e-4;
  opts.upper = 1e4;
  const MarginalFitResult fit = fit_marginal_likelihood(map, x, y, opts);
  CHECK(fit.magnitude >= opts.lower);
  CHECK(fit.magnitude <= opts.upper);
  CHECK(fit.noise_var >= opts.lower);
  CHECK(fit.noise_var <= opts.upper);
  CHECK(fit.noise_var == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("batch logistic mode zeroes the penalized gradient") {
  Rng rng(80);
  const KernelSpec s = spec_of(2, 1.0, 3.0, 0.01);
  auto map = sample_feature_map(s, 10, 81);
  const int t = 120;
  Eigen::MatrixXd x(t, 2);
  Eigen::VectorXi labels(t);
  for (int i = 0; i < t; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    labels(i) = y;
    x(i, 0) = y * 1.0 + 0.7 * rng.normal();
    x(i, 1) = rng.normal();
  }
  const Eigen::MatrixXd phi = feature_rows(map, x);
  const double mag = 3.0;
  const LaplaceFit fit = laplace_fit(phi, labels, mag);

  Eigen::VectorXd grad = -fit.mode / mag;
  for (int i = 0; i < t; ++i) {
    const double z = phi.row(i).dot(fit.mode);
    grad += labels(i) * sigmoid(-labels(i) * z) * phi.row(i).transpose();
  }
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);

  // Evidence recomputed from the returned mode matches the reported value:
  // sum log sigmoid(y z) - |mode|^2 / (2 mag) - logdet(mag Phi^T W Phi + I) / 2.
  double obj = -0.5 * fit.mode.squaredNorm() / mag;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
  for (int i = 0; i < t; ++i) {
    const double z = phi.row(i).dot(fit.mode);
    obj += log_sigmoid(labels(i) * z);
    const double pi = sigmoid(z);
    h += mag * pi * (1.0 - pi) * phi.row(i).transpose() * phi.row(i);
  }
  const double logdet = 2.0 * Eigen::MatrixXd(h.llt().matrixL())
                                  .diagonal()
                                  .array()
                                  .log()
                                  .sum();
  CHECK(fit.log_evidence == doctest::Approx(obj - 0.5 * logdet).epsilon(1e-8));
}

TEST_CASE("evidence search picks a sensible prior scale") {
  Rng rng(90);
  const KernelSpec s = spec_of(2, 1.5, 1.0, 0.01);
  auto map = sample_feature_map(s, 12, 91);
  const int t = 150;
  Eigen::MatrixXd x(t, 2);
  Eigen::VectorXi labels(t);
  for (int i = 0; i < t; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    labels(i) = y;
    x(i, 0) = y * 1.2 + 0.5 * rng.normal();
    x(i, 1) = rng.normal();
  }
  EvidenceFitOptions opts;
  const EvidenceFitResult fit =
      fit_classification_magnitude(map, x, labels, opts);
  CHECK(fit.magnitude >= opts.lower);
  CHECK(fit.magnitude <= opts.upper);
  CHECK(fit.evaluations <= opts.max_evals);

  // The choice beats both box ends by evidence.
  const Eigen::MatrixXd phi = feature_rows(map, x);
  CHECK(fit.log_evidence >=
        laplace_fit(phi, labels, opts.lower).log_evidence - 1e-9);
  CHECK(fit.log_evidence >=
        laplace_fit(phi, labels, opts.upper).log_evidence - 1e-9);
}
