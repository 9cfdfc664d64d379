#pragma once

#include <Eigen/Dense>
#include <vector>

#include "streamgp/expert.hpp"

namespace streamgp {

// kStatic:            fixed expert states, Bayes weight updates.
// kSwitching:         Markov (fixed-share) weight prediction before fusion.
// kDynamic:           random-walk drift on expert states, Bayes weights.
// kSwitchingDynamic:  both mechanisms.
enum class EnsembleMode { kStatic, kSwitching, kDynamic, kSwitchingDynamic };

std::string to_string(EnsembleMode mode);
EnsembleMode ensemble_mode_from_string(const std::string& name);

struct EnsembleConfig {
  EnsembleMode mode = EnsembleMode::kStatic;
  double q0 = 0.99;          // switching: probability of keeping the expert
  double drift_var = 0.001;  // dynamic: per-step state covariance inflation
  double shutdown_threshold = 1e-16;

  bool switching() const {
    return mode == EnsembleMode::kSwitching ||
           mode == EnsembleMode::kSwitchingDynamic;
  }
  bool dynamic() const {
    return mode == EnsembleMode::kDynamic ||
           mode == EnsembleMode::kSwitchingDynamic;
  }
};

struct EnsemblePrediction {
  double mean = 0.0;
  double variance = 0.0;         // moment-matched across experts
  Eigen::VectorXd weights;       // fusion weights (zero for shut-down experts)
  std::vector<PredictiveMoments> experts;  // zeroed for shut-down experts
};

// Weighted product of experts over a shared input stream.
//
// Weights live in log domain so Bayes updates stay exact far below double
// underflow.  A full step is predict(x) then correct(x, y); correct() alone
// also advances the state correctly (drift is applied lazily once per step,
// whichever call comes first).
//
// In the non-switching modes an expert whose weight drops below
// shutdown_threshold is retired: weight exactly zero, no further predict or
// correct work, remaining weights renormalized.  Switching modes keep every
// expert alive because the weight prediction can resurrect them.
class Ensemble {
 public:
  Ensemble(std::vector<Expert> experts, EnsembleConfig config);

  int size() const { return static_cast<int>(experts_.size()); }
  const EnsembleConfig& config() const { return config_; }
  const std::vector<Expert>& experts() const { return experts_; }
  std::vector<Expert>& experts() { return experts_; }

  EnsemblePrediction predict(const Eigen::Ref<const Eigen::VectorXd>& x);

  // Regression step; returns the ensemble loss
  //   -log sum_m w_m exp(-l_m)
  // with the pre-update per-expert losses l_m, then updates experts and
  // weights.  correct_label() is the classification analogue for y in
  // {-1, +1} (0 means -1).
  double correct(const Eigen::Ref<const Eigen::VectorXd>& x, double y);
  double correct_label(const Eigen::Ref<const Eigen::VectorXd>& x, int y);

  Eigen::VectorXd weights() const;  // exp(log_weights), zeros when retired
  const Eigen::VectorXd& log_weights() const { return log_w_; }
  const std::vector<bool>& active() const { return active_; }

  long step_count() const { return steps_; }
  double cumulative_loss() const { return cum_loss_; }
  const Eigen::VectorXd& cumulative_expert_losses() const {
    return cum_expert_loss_;
  }
  const Eigen::VectorXd& last_expert_losses() const { return last_loss_; }
  const std::vector<long>& correct_calls() const { return correct_calls_; }
  long underflow_events() const { return underflow_events_; }

  // Checkpoint support.
  void restore_weights(Eigen::VectorXd log_w, std::vector<bool> active);
  void restore_counters(long steps, double cum_loss,
                        Eigen::VectorXd cum_expert_loss,
                        std::vector<long> correct_calls,
                        long underflow_events);

 private:
  // Fusion weights for the current step: Markov-predicted in switching
  // modes, current weights otherwise.  Pure.
  Eigen::VectorXd fusion_log_weights() const;
  void maybe_drift();
  double correct_impl(const Eigen::Ref<const Eigen::VectorXd>& x, double y,
                      bool classification);

  std::vector<Expert> experts_;
  EnsembleConfig config_;
  Eigen::VectorXd log_w_;
  std::vector<bool> active_;
  bool drift_done_ = false;  // drift already applied for the step in flight

  long steps_ = 0;
  double cum_loss_ = 0.0;
  Eigen::VectorXd cum_expert_loss_;
  Eigen::VectorXd last_loss_;
  std::vector<long> correct_calls_;
  long underflow_events_ = 0;
};

}  // namespace streamgp
