#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "streamgp/ann.hpp"
#include "streamgp/kernels.hpp"

namespace streamgp {

// Rank-one update of an upper-triangular Cholesky factor:
// on return r satisfies r^T r = r_in^T r_in + u u^T.
void cholesky_update(Eigen::MatrixXd& r, Eigen::VectorXd u);

// Centered principal-component projection to d columns.  Component signs
// follow a fixed convention (largest-magnitude loading is positive) so the
// embedding does not depend on the eigensolver's sign choices.
Eigen::MatrixXd pca_embed(const Eigen::MatrixXd& y, int d);

struct LvmOptions {
  int latent_dim = 2;
  double prior_var = 1.0;   // zero-mean Gaussian prior on embeddings
  int embed_max_iters = 50;
  double embed_tol = 1e-6;
  int init_max_iters = 200;
  double init_tol = 1e-4;
  bool approximate_nn = true;
  int nn_max_degree = 16;
  int nn_ef = 64;
  std::uint64_t nn_seed = 99;
};

// Latent-to-observation regressor held in factored form.  r is the upper
// Cholesky factor of A = Phi^T Phi + (noise_var / magnitude) I over this
// expert's own embeddings; b = Phi^T Y.  Predictions need two triangular
// solves and no dense inverse.
struct LvmExpert {
  std::shared_ptr<const FeatureMap> map;
  KernelSpec spec;
  Eigen::MatrixXd r;
  Eigen::MatrixXd b;
  Eigen::MatrixXd embeddings;  // one row per absorbed observation
  double init_loglik = 0.0;
};

struct LvmPrediction {
  Eigen::VectorXd mean;
  double variance = 0.0;  // shared across output dimensions
};

LvmPrediction lvm_predict(const LvmExpert& expert,
                          const Eigen::Ref<const Eigen::VectorXd>& x);

// log p(y | x) under the expert's current posterior.
double lvm_loglik(const LvmExpert& expert,
                  const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y);

struct EmbedResult {
  Eigen::VectorXd x;
  double objective = 0.0;  // log p(y | x) + log prior, up to the prior const
  double loglik = 0.0;     // log p(y | x) alone
  int iterations = 0;
};

// MAP embedding of one observation by gradient ascent from x0.
EmbedResult lvm_embed(const LvmExpert& expert,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                      const LvmOptions& opts);

// Joint log marginal likelihood of Y (t x D) for embeddings X (t x d):
// every output dimension is an independent GP draw in feature space.
double lvm_joint_loglik(const FeatureMap& map, const KernelSpec& spec,
                        const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// As above plus the gradient with respect to the embedding matrix.
double lvm_joint_loglik_grad(const FeatureMap& map, const KernelSpec& spec,
                             const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& y, double prior_var,
                             Eigen::MatrixXd& grad);

// Builds an expert from an initial batch: PCA start (or caller-provided
// x_init), gradient ascent on the joint likelihood, then the factored state.
LvmExpert lvm_init(std::shared_ptr<const FeatureMap> map, KernelSpec spec,
                   const Eigen::MatrixXd& y0, const LvmOptions& opts,
                   const Eigen::MatrixXd* x_init = nullptr);

// Absorbs one (embedding, observation) pair into the factored state.
void lvm_absorb(LvmExpert& expert, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y);

// Ensemble of latent-variable experts over a shared observation stream.
//
// Per step: the stored embedding of the nearest past observation seeds each
// expert's MAP search, every expert absorbs its own embedding, weights take
// a Bayes update from the per-expert likelihoods, and the reported
// embedding comes from the expert maximizing weight plus MAP objective.
class LvmEnsemble {
 public:
  LvmEnsemble(std::vector<std::pair<std::shared_ptr<const FeatureMap>,
                                    KernelSpec>> dictionary,
              LvmOptions opts);

  void init(const Eigen::MatrixXd& y0);

  struct StepResult {
    Eigen::VectorXd embedding;
    int selected = 0;
    double loss = 0.0;  // -log of the weighted predictive mixture
  };
  StepResult step(const Eigen::Ref<const Eigen::VectorXd>& y);

  int size() const { return static_cast<int>(experts_.size()); }
  bool initialized() const { return initialized_; }
  const std::vector<LvmExpert>& experts() const { return experts_; }
  std::vector<LvmExpert>& experts() { return experts_; }
  const Eigen::VectorXd& log_weights() const { return log_w_; }
  const NnIndex& index() const { return index_; }
  const LvmOptions& options() const { return opts_; }
  long step_count() const { return steps_; }

  // Reported trajectory: init rows from the highest-evidence expert, then
  // one row per streamed observation.
  Eigen::MatrixXd reported() const;
  const std::vector<int>& selected_history() const { return selected_; }

  // Checkpoint support: replaces state; y_history re-populates the index.
  void restore(std::vector<LvmExpert> experts, Eigen::VectorXd log_w,
               std::vector<Eigen::VectorXd> reported,
               std::vector<int> selected,
               const std::vector<Eigen::VectorXd>& y_history, long steps);

 private:
  std::vector<LvmExpert> experts_;
  LvmOptions opts_;
  Eigen::VectorXd log_w_;
  NnIndex index_;
  std::vector<Eigen::VectorXd> reported_;
  std::vector<int> selected_;
  long steps_ = 0;
  bool initialized_ = false;
};

}  // namespace streamgp
