#include "streamgp/hyperopt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "streamgp/expert.hpp"

namespace streamgp {
namespace {

constexpr double kLog2Pi = 1.8378770664093455;

int canonical_label(int y) {
  if (y == 0 || y == -1) return -1;
  if (y == 1) return 1;
  throw std::invalid_argument("labels must be -1/0/+1");
}

}  // namespace

Eigen::MatrixXd feature_rows(const FeatureMap& map,
                             const Eigen::MatrixXd& x_rows) {
  Eigen::MatrixXd phi(x_rows.rows(), map.feature_dim());
  Eigen::VectorXd buf;
  for (Eigen::Index i = 0; i < x_rows.rows(); ++i) {
    map.phi_into(x_rows.row(i).transpose(), buf);
    phi.row(i) = buf.transpose();
  }
  return phi;
}

RfMarginal::RfMarginal(Eigen::MatrixXd phi_rows, Eigen::VectorXd y)
    : t_(phi_rows.rows()), dim_(static_cast<int>(phi_rows.cols())) {
  if (phi_rows.rows() != y.size() || t_ < 1) {
    throw std::invalid_argument("RfMarginal: shape mismatch");
  }
  gram_ = phi_rows.transpose() * phi_rows;
  phi_y_ = phi_rows.transpose() * y;
  yty_ = y.squaredNorm();
}

double RfMarginal::value(double magnitude, double noise_var) const {
  Eigen::Vector2d unused;
  return value_and_grad(magnitude, noise_var, unused);
}

double RfMarginal::value_and_grad(double magnitude, double noise_var,
                                  Eigen::Vector2d& grad_log) const {
  const double alpha = magnitude;
  const double beta = noise_var;
  const double c = beta / alpha;
  const double t = static_cast<double>(t_);
  const double d = static_cast<double>(dim_);

  Eigen::MatrixXd a = gram_;
  a.diagonal().array() += c;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("RfMarginal: Cholesky failed");
  }
  const Eigen::VectorXd h = llt.solve(phi_y_);
  double log_det_a = 0.0;
  for (int i = 0; i < dim_; ++i) {
    log_det_a += 2.0 * std::log(llt.matrixL()(i, i));
  }
  const double quad = (yty_ - phi_y_.dot(h)) / beta;
  const double log_det_c =
      t * std::log(beta) + log_det_a + d * (std::log(alpha) - std::log(beta));
  const double ll = -0.5 * quad - 0.5 * log_det_c - 0.5 * t * kLog2Pi;

  const double tr_a_inv =
      llt.solve(Eigen::MatrixXd::Identity(dim_, dim_)).trace();
  const double resid2 =
      yty_ - 2.0 * phi_y_.dot(h) + h.dot(gram_ * h);  // ||y - Phi h||^2
  const double d_alpha =
      0.5 * h.squaredNorm() / (alpha * alpha) -
      0.5 / alpha * (d - c * tr_a_inv);
  const double d_beta = 0.5 * resid2 / (beta * beta) -
                        0.5 / beta * (t - d + c * tr_a_inv);
  grad_log(0) = alpha * d_alpha;
  grad_log(1) = beta * d_beta;
  return ll;
}

MarginalFitResult fit_marginal_likelihood(const FeatureMap& map,
                                          const Eigen::MatrixXd& x_rows,
                                          const Eigen::VectorXd& y,
                                          const MarginalFitOptions& opts) {
  const RfMarginal problem(feature_rows(map, x_rows), y);
  const double lo = std::log(opts.lower);
  const double hi = std::log(opts.upper);
  auto clamp = [&](double v) { return std::min(std::max(v, lo), hi); };

  double u = clamp(std::log(opts.init_magnitude));
  double v = clamp(std::log(opts.init_noise_var));
  Eigen::Vector2d g;
  double ll = problem.value_and_grad(std::exp(u), std::exp(v), g);

  // Central differences of the analytic gradient give the 2x2 Hessian in
  // log space; five extra evaluations per iteration is cheap here.
  const auto hessian_at = [&](double uu, double vv) {
    const double h = 1e-4;
    Eigen::Vector2d gp, gm;
    Eigen::Matrix2d hess;
    problem.value_and_grad(std::exp(uu + h), std::exp(vv), gp);
    problem.value_and_grad(std::exp(uu - h), std::exp(vv), gm);
    hess.col(0) = (gp - gm) / (2.0 * h);
    problem.value_and_grad(std::exp(uu), std::exp(vv + h), gp);
    problem.value_and_grad(std::exp(uu), std::exp(vv - h), gm);
    hess.col(1) = (gp - gm) / (2.0 * h);
    return Eigen::Matrix2d(0.5 * (hess + hess.transpose().eval()));
  };

  MarginalFitResult out;
  double step = 0.1;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    // Gradient at a box edge pointing outward does not count as slack.
    Eigen::Vector2d eff = g;
    if ((u <= lo && eff(0) < 0) || (u >= hi && eff(0) > 0)) eff(0) = 0;
    if ((v <= lo && eff(1) < 0) || (v >= hi && eff(1) > 0)) eff(1) = 0;
    if (eff.cwiseAbs().maxCoeff() < opts.grad_tol) {
      out.converged = true;
      break;
    }

    // Near a strict maximum the objective moves by less than its own
    // rounding error while the gradient is still well resolved, so the
    // Newton step is accepted on a no-worse-than-rounding basis.
    bool moved = false;
    const Eigen::Matrix2d hess = hessian_at(u, v);
    if (hess(0, 0) < 0.0 && hess.determinant() > 0.0) {
      const Eigen::Vector2d sn = hess.inverse() * (-g);
      if (sn.norm() <= 2.0) {
        const double nu = clamp(u + sn(0));
        const double nv = clamp(v + sn(1));
        Eigen::Vector2d ng;
        const double nll =
            problem.value_and_grad(std::exp(nu), std::exp(nv), ng);
        if (nll >= ll - 1e-9 * (1.0 + std::abs(ll))) {
          u = nu;
          v = nv;
          ll = nll;
          g = ng;
          moved = true;
        }
      }
    }
    if (moved) continue;

    const double nu = clamp(u + step * eff(0));
    const double nv = clamp(v + step * eff(1));
    Eigen::Vector2d ng;
    const double nll = problem.value_and_grad(std::exp(nu), std::exp(nv), ng);
    if (nll > ll) {
      u = nu;
      v = nv;
      ll = nll;
      g = ng;
      step *= 1.3;
    } else {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  out.magnitude = std::exp(u);
  out.noise_var = std::exp(v);
  out.log_likelihood = ll;
  out.iterations = it;
  return out;
}

LaplaceFit laplace_fit(const Eigen::MatrixXd& phi_rows,
                       const Eigen::VectorXi& labels, double magnitude) {
  const long t = phi_rows.rows();
  const int dim = static_cast<int>(phi_rows.cols());
  if (labels.size() != t || t < 1) {
    throw std::invalid_argument("laplace_fit: shape mismatch");
  }
  Eigen::VectorXd y(t);
  for (long i = 0; i < t; ++i) y(i) = canonical_label(labels(i));

  const auto objective = [&](const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& z) {
    double obj = -0.5 * theta.squaredNorm() / magnitude;
    for (long i = 0; i < t; ++i) obj += log_sigmoid(y(i) * z(i));
    return obj;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(t);
  double obj = objective(theta, z);
  LaplaceFit out;
  for (int it = 0; it < 100; ++it) {
    out.iterations = it + 1;
    Eigen::VectorXd s(t), w(t);
    for (long i = 0; i < t; ++i) {
      s(i) = sigmoid(-y(i) * z(i));  // 1 - p(correct label)
      const double p = sigmoid(z(i));
      w(i) = p * (1.0 - p);
    }
    const Eigen::VectorXd grad =
        phi_rows.transpose() * (y.cwiseProduct(s)) - theta / magnitude;
    if (grad.cwiseAbs().maxCoeff() < 1e-8) break;
    Eigen::MatrixXd hess =
        phi_rows.transpose() * w.asDiagonal() * phi_rows;
    hess.diagonal().array() += 1.0 / magnitude;
    const Eigen::VectorXd dir = hess.llt().solve(grad);
    double scale = 1.0;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd cand = theta + scale * dir;
      const Eigen::VectorXd cz = phi_rows * cand;
      const double cobj = objective(cand, cz);
      if (cobj > obj) {
        theta = cand;
        z = cz;
        obj = cobj;
        scale = -1.0;
        break;
      }
      scale *= 0.5;
    }
    if (scale > 0.0) break;  // no ascent step found; already at the mode
  }

  Eigen::VectorXd w(t);
  for (long i = 0; i < t; ++i) {
    const double p = sigmoid(z(i));
    w(i) = p * (1.0 - p);
  }
  Eigen::MatrixXd m = magnitude * (phi_rows.transpose() * w.asDiagonal() * phi_rows);
  m.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  double log_det = 0.0;
  for (int i = 0; i < dim; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));

  out.mode = theta;
  out.log_evidence = obj - 0.5 * log_det;
  return out;
}

EvidenceFitResult fit_classification_magnitude(
    const FeatureMap& map, const Eigen::MatrixXd& x_rows,
    const Eigen::VectorXi& labels, const EvidenceFitOptions& opts) {
  const Eigen::MatrixXd phi = feature_rows(map, x_rows);
  EvidenceFitResult out;
  const auto evidence = [&](double log_mag) {
    ++out.evaluations;
    return laplace_fit(phi, labels, std::exp(log_mag)).log_evidence;
  };

  const double lo = std::log(opts.lower);
  const double hi = std::log(opts.upper);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<double> grid(opts.grid);
  for (int i = 0; i < opts.grid; ++i) {
    grid[i] = lo + (hi - lo) * i / (opts.grid - 1.0);
    const double val = evidence(grid[i]);
    if (val > best_val) {
      best_val = val;
      best = i;
    }
  }

  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, opts.grid - 1)];
  const double ratio = 0.6180339887498949;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = evidence(x1);
  double f2 = evidence(x2);
  while (b - a > opts.tol && out.evaluations < opts.max_evals) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = evidence(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = evidence(x2);
    }
  }
  const double arg = f1 >= f2 ? x1 : x2;
  out.magnitude = std::exp(arg);
  out.log_evidence = std::max(f1, f2);
  return out;
}

}  // namespace streamgp
