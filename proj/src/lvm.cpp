#include "streamgp/lvm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "streamgp/hyperopt.hpp"

namespace streamgp {
namespace {

constexpr double kLog2Pi = 1.8378770664093455;

Eigen::VectorXd solve_factored(const Eigen::MatrixXd& r,
                               const Eigen::VectorXd& rhs) {
  // (R^T R) z = rhs via two triangular solves.
  const Eigen::VectorXd tmp =
      r.transpose().triangularView<Eigen::Lower>().solve(rhs);
  return r.triangularView<Eigen::Upper>().solve(tmp);
}

Eigen::MatrixXd solve_factored(const Eigen::MatrixXd& r,
                               const Eigen::MatrixXd& rhs) {
  const Eigen::MatrixXd tmp =
      r.transpose().triangularView<Eigen::Lower>().solve(rhs);
  return r.triangularView<Eigen::Upper>().solve(tmp);
}

}  // namespace

void cholesky_update(Eigen::MatrixXd& r, Eigen::VectorXd u) {
  const Eigen::Index n = r.rows();
  if (r.cols() != n || u.size() != n) {
    throw std::invalid_argument("cholesky_update: shape mismatch");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double rkk = r(k, k);
    const double uk = u(k);
    const double rho = std::hypot(rkk, uk);
    const double c = rkk / rho;
    const double s = uk / rho;
    r(k, k) = rho;
    if (k + 1 < n) {
      const Eigen::Index m = n - k - 1;
      const Eigen::RowVectorXd rk = r.row(k).tail(m);
      const Eigen::RowVectorXd ut = u.tail(m).transpose();
      r.row(k).tail(m) = c * rk + s * ut;
      u.tail(m) = (c * ut - s * rk).transpose();
    }
  }
}

Eigen::MatrixXd pca_embed(const Eigen::MatrixXd& y, int d) {
  if (d < 1 || d > y.cols()) {
    throw std::invalid_argument("pca_embed: bad target dimension");
  }
  const Eigen::RowVectorXd mean = y.colwise().mean();
  const Eigen::MatrixXd centered = y.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max<double>(1.0, y.rows() - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("pca_embed: eigendecomposition failed");
  }
  Eigen::MatrixXd basis(y.cols(), d);
  for (int j = 0; j < d; ++j) {
    // Eigenvalues come back ascending; take the top d.
    Eigen::VectorXd v = eig.eigenvectors().col(y.cols() - 1 - j);
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(j) = v;
  }
  return centered * basis;
}

LvmPrediction lvm_predict(const LvmExpert& expert,
                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd phi = expert.map->phi(x);
  const Eigen::VectorXd z = solve_factored(expert.r, phi);
  LvmPrediction out;
  out.mean = expert.b.transpose() * z;
  out.variance = expert.spec.noise_var * (phi.dot(z) + 1.0);
  return out;
}

double lvm_loglik(const LvmExpert& expert,
                  const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y) {
  const LvmPrediction pred = lvm_predict(expert, x);
  const double d = static_cast<double>(y.size());
  return -0.5 * d * (kLog2Pi + std::log(pred.variance)) -
         0.5 * (y - pred.mean).squaredNorm() / pred.variance;
}

EmbedResult lvm_embed(const LvmExpert& expert,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                      const LvmOptions& opts) {
  const double d_out = static_cast<double>(y.size());
  const double noise = expert.spec.noise_var;

  const auto objective = [&](const Eigen::VectorXd& x, double& loglik) {
    loglik = lvm_loglik(expert, x, y);
    return loglik - 0.5 * x.squaredNorm() / opts.prior_var;
  };
  const auto gradient = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd phi = expert.map->phi(x);
    const Eigen::MatrixXd jac = expert.map->phi_jacobian(x);
    const Eigen::VectorXd z = solve_factored(expert.r, phi);
    const Eigen::VectorXd mean = expert.b.transpose() * z;
    const double var = noise * (phi.dot(z) + 1.0);
    const Eigen::VectorXd resid = y - mean;
    const Eigen::VectorXd q = solve_factored(
        expert.r, Eigen::VectorXd(expert.b * resid));
    Eigen::VectorXd grad = jac.transpose() * q / var;
    const double var_factor =
        0.5 * resid.squaredNorm() / (var * var) - 0.5 * d_out / var;
    grad += var_factor * (2.0 * noise) * (jac.transpose() * z);
    grad -= x / opts.prior_var;
    return grad;
  };

  EmbedResult out;
  Eigen::VectorXd x = x0;
  double loglik = 0.0;
  double obj = objective(x, loglik);
  double step = 0.1;
  for (int it = 0; it < opts.embed_max_iters; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd grad = gradient(x);
    bool accepted = false;
    while (step >= 1e-14) {
      const Eigen::VectorXd cand = x + step * grad;
      double cand_loglik = 0.0;
      const double cand_obj = objective(cand, cand_loglik);
      if (cand_obj > obj) {
        const bool small = (cand - x).cwiseAbs().maxCoeff() < opts.embed_tol;
        x = cand;
        obj = cand_obj;
        loglik = cand_loglik;
        step *= 1.3;
        accepted = true;
        if (small) it = opts.embed_max_iters;  // converged
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  out.x = x;
  out.objective = obj;
  out.loglik = loglik;
  return out;
}

double lvm_joint_loglik(const FeatureMap& map, const KernelSpec& spec,
                        const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd phi = feature_rows(map, x);
  const Eigen::Index t = y.rows();
  const double d_out = static_cast<double>(y.cols());
  Eigen::MatrixXd c = spec.magnitude * (phi * phi.transpose());
  c.diagonal().array() += spec.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("lvm_joint_loglik: Cholesky failed");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  const Eigen::MatrixXd w = llt.solve(y);
  return -0.5 * (y.array() * w.array()).sum() - 0.5 * d_out * log_det -
         0.5 * static_cast<double>(t) * d_out * kLog2Pi;
}

double lvm_joint_loglik_grad(const FeatureMap& map, const KernelSpec& spec,
                             const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& y, double prior_var,
                             Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd phi = feature_rows(map, x);
  const Eigen::Index t = y.rows();
  const double d_out = static_cast<double>(y.cols());
  Eigen::MatrixXd c = spec.magnitude * (phi * phi.transpose());
  c.diagonal().array() += spec.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("lvm_joint_loglik_grad: Cholesky failed");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  const Eigen::MatrixXd w = llt.solve(y);  // C^{-1} Y
  const double ll = -0.5 * (y.array() * w.array()).sum() -
                    0.5 * d_out * log_det -
                    0.5 * static_cast<double>(t) * d_out * kLog2Pi;

  // d(ll)/dC = (W W^T - d_out * C^{-1}) / 2, then through C = mag*Phi Phi^T.
  const Eigen::MatrixXd c_inv = llt.solve(Eigen::MatrixXd::Identity(t, t));
  const Eigen::MatrixXd dc = 0.5 * (w * w.transpose() - d_out * c_inv);
  const Eigen::MatrixXd dphi = 2.0 * spec.magnitude * dc * phi;  // t x 2n

  grad.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::MatrixXd jac = map.phi_jacobian(x.row(i).transpose());
    grad.row(i) = (jac.transpose() * dphi.row(i).transpose()).transpose();
  }
  grad -= x / prior_var;
  return ll - 0.5 * x.squaredNorm() / prior_var;
}

LvmExpert lvm_init(std::shared_ptr<const FeatureMap> map, KernelSpec spec,
                   const Eigen::MatrixXd& y0, const LvmOptions& opts,
                   const Eigen::MatrixXd* x_init) {
  if (!map) throw std::invalid_argument("lvm_init: null feature map");
  spec.validate();
  if (map->input_dim() != opts.latent_dim ||
      spec.input_dim != opts.latent_dim) {
    throw std::invalid_argument("lvm_init: latent dimension mismatch");
  }

  Eigen::MatrixXd x =
      x_init != nullptr ? *x_init : pca_embed(y0, opts.latent_dim);
  Eigen::MatrixXd grad;
  double obj = lvm_joint_loglik_grad(*map, spec, x, y0, opts.prior_var, grad);
  double step = 0.01;
  for (int it = 0; it < opts.init_max_iters; ++it) {
    bool accepted = false;
    while (step >= 1e-14) {
      const Eigen::MatrixXd cand = x + step * grad;
      Eigen::MatrixXd cand_grad;
      const double cand_obj = lvm_joint_loglik_grad(*map, spec, cand, y0,
                                                    opts.prior_var, cand_grad);
      if (cand_obj > obj) {
        const bool small =
            (cand - x).cwiseAbs().maxCoeff() < opts.init_tol;
        x = cand;
        obj = cand_obj;
        grad = cand_grad;
        step *= 1.3;
        accepted = true;
        if (small) it = opts.init_max_iters;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  LvmExpert expert;
  expert.map = std::move(map);
  expert.spec = std::move(spec);
  expert.embeddings = x;

  const Eigen::MatrixXd phi = feature_rows(*expert.map, x);
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += expert.spec.noise_var / expert.spec.magnitude;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("lvm_init: factorization failed");
  }
  expert.r = llt.matrixU();
  expert.b = phi.transpose() * y0;
  expert.init_loglik = lvm_joint_loglik(*expert.map, expert.spec, x, y0);
  return expert;
}

void lvm_absorb(LvmExpert& expert, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::VectorXd phi = expert.map->phi(x);
  cholesky_update(expert.r, phi);
  expert.b += phi * y.transpose();
  expert.embeddings.conservativeResize(expert.embeddings.rows() + 1,
                                       Eigen::NoChange);
  expert.embeddings.row(expert.embeddings.rows() - 1) = x.transpose();
}

LvmEnsemble::LvmEnsemble(
    std::vector<std::pair<std::shared_ptr<const FeatureMap>, KernelSpec>>
        dictionary,
    LvmOptions opts)
    : opts_(opts),
      index_(1, opts.approximate_nn, opts.nn_seed, opts.nn_max_degree,
             opts.nn_ef) {
  if (dictionary.empty()) {
    throw std::invalid_argument("LvmEnsemble: empty dictionary");
  }
  experts_.reserve(dictionary.size());
  for (auto& [map, spec] : dictionary) {
    LvmExpert e;
    e.map = std::move(map);
    e.spec = std::move(spec);
    experts_.push_back(std::move(e));
  }
  log_w_ = Eigen::VectorXd::Constant(
      size(), -std::log(static_cast<double>(size())));
}

void LvmEnsemble::init(const Eigen::MatrixXd& y0) {
  if (initialized_) throw std::logic_error("LvmEnsemble: already initialized");
  index_ = NnIndex(static_cast<int>(y0.cols()), opts_.approximate_nn,
                   opts_.nn_seed, opts_.nn_max_degree, opts_.nn_ef);
  const Eigen::MatrixXd x0 = pca_embed(y0, opts_.latent_dim);
  int best = 0;
  for (int m = 0; m < size(); ++m) {
    LvmExpert fitted =
        lvm_init(experts_[m].map, experts_[m].spec, y0, opts_, &x0);
    experts_[m] = std::move(fitted);
    if (experts_[m].init_loglik > experts_[best].init_loglik) best = m;
  }
  for (Eigen::Index i = 0; i < y0.rows(); ++i) {
    index_.insert(y0.row(i).transpose());
  }
  reported_.clear();
  selected_.clear();
  for (Eigen::Index i = 0; i < y0.rows(); ++i) {
    reported_.push_back(experts_[best].embeddings.row(i).transpose());
    selected_.push_back(best);
  }
  initialized_ = true;
}

LvmEnsemble::StepResult LvmEnsemble::step(
    const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (!initialized_) throw std::logic_error("LvmEnsemble: init() first");
  const int nn = index_.nearest(y);

  std::vector<EmbedResult> fits(size());
  Eigen::VectorXd scores(size());
  Eigen::VectorXd posterior(size());
  for (int m = 0; m < size(); ++m) {
    const Eigen::VectorXd x0 = experts_[m].embeddings.row(nn).transpose();
    fits[m] = lvm_embed(experts_[m], y, x0, opts_);
    scores(m) = log_w_(m) + fits[m].objective;
    posterior(m) = log_w_(m) + fits[m].loglik;
  }

  int selected = 0;
  scores.maxCoeff(&selected);
  const double lse_max = posterior.maxCoeff();
  const double lse =
      lse_max + std::log((posterior.array() - lse_max).exp().sum());
  log_w_ = posterior.array() - lse;

  for (int m = 0; m < size(); ++m) {
    lvm_absorb(experts_[m], fits[m].x, y);
  }
  index_.insert(y);

  StepResult out;
  out.embedding = fits[selected].x;
  out.selected = selected;
  out.loss = -lse;
  reported_.push_back(out.embedding);
  selected_.push_back(selected);
  ++steps_;
  return out;
}

Eigen::MatrixXd LvmEnsemble::reported() const {
  Eigen::MatrixXd out(reported_.size(), opts_.latent_dim);
  for (size_t i = 0; i < reported_.size(); ++i) {
    out.row(i) = reported_[i].transpose();
  }
  return out;
}

void LvmEnsemble::restore(std::vector<LvmExpert> experts,
                          Eigen::VectorXd log_w,
                          std::vector<Eigen::VectorXd> reported,
                          std::vector<int> selected,
                          const std::vector<Eigen::VectorXd>& y_history,
                          long steps) {
  if (experts.size() != static_cast<size_t>(size()) ||
      log_w.size() != size()) {
    throw std::invalid_argument("LvmEnsemble::restore: size mismatch");
  }
  experts_ = std::move(experts);
  log_w_ = std::move(log_w);
  reported_ = std::move(reported);
  selected_ = std::move(selected);
  steps_ = steps;
  if (y_history.empty()) {
    throw std::invalid_argument("LvmEnsemble::restore: empty history");
  }
  index_ = NnIndex(static_cast<int>(y_history[0].size()),
                   opts_.approximate_nn, opts_.nn_seed, opts_.nn_max_degree,
                   opts_.nn_ef);
  for (const Eigen::VectorXd& y : y_history) index_.insert(y);
  initialized_ = true;
}

}  // namespace streamgp
