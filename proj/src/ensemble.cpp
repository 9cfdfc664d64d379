#include "streamgp/ensemble.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace streamgp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// logsumexp over entries selected by `mask`.
double masked_lse(const Eigen::VectorXd& v, const std::vector<bool>& mask) {
  double hi = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[i] && v(i) > hi) hi = v(i);
  }
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[i]) acc += std::exp(v(i) - hi);
  }
  return hi + std::log(acc);
}

}  // namespace

std::string to_string(EnsembleMode mode) {
  switch (mode) {
    case EnsembleMode::kStatic:
      return "static";
    case EnsembleMode::kSwitching:
      return "switching";
    case EnsembleMode::kDynamic:
      return "dynamic";
    case EnsembleMode::kSwitchingDynamic:
      return "switching_dynamic";
  }
  return "static";
}

EnsembleMode ensemble_mode_from_string(const std::string& name) {
  if (name == "static") return EnsembleMode::kStatic;
  if (name == "switching") return EnsembleMode::kSwitching;
  if (name == "dynamic") return EnsembleMode::kDynamic;
  if (name == "switching_dynamic" || name == "switching-dynamic") {
    return EnsembleMode::kSwitchingDynamic;
  }
  throw std::invalid_argument("unknown ensemble mode: " + name);
}

Ensemble::Ensemble(std::vector<Expert> experts, EnsembleConfig config)
    : experts_(std::move(experts)), config_(config) {
  const int m = size();
  if (m < 1) throw std::invalid_argument("Ensemble: needs at least 1 expert");
  if (!(config_.q0 > 0.0 && config_.q0 <= 1.0)) {
    throw std::invalid_argument("Ensemble: q0 must be in (0, 1]");
  }
  if (config_.drift_var < 0.0) {
    throw std::invalid_argument("Ensemble: drift_var must be nonnegative");
  }
  if (!(config_.shutdown_threshold >= 0.0 && config_.shutdown_threshold < 1.0)) {
    throw std::invalid_argument("Ensemble: shutdown_threshold out of range");
  }
  for (const Expert& e : experts_) {
    if (e.likelihood() != experts_[0].likelihood()) {
      throw std::invalid_argument("Ensemble: experts must share a likelihood");
    }
    if (e.map().input_dim() != experts_[0].map().input_dim()) {
      throw std::invalid_argument("Ensemble: experts must share input_dim");
    }
  }
  log_w_ = Eigen::VectorXd::Constant(m, -std::log(static_cast<double>(m)));
  active_.assign(m, true);
  cum_expert_loss_ = Eigen::VectorXd::Zero(m);
  last_loss_ = Eigen::VectorXd::Zero(m);
  correct_calls_.assign(m, 0);
}

Eigen::VectorXd Ensemble::fusion_log_weights() const {
  if (!config_.switching() || config_.q0 == 1.0 || size() == 1) return log_w_;
  // Linear-domain mixing is safe here: the floor (1-q0)/(M(M-1)) keeps every
  // predicted weight far above double underflow.
  const double q0 = config_.q0;
  const double off = (1.0 - q0) / static_cast<double>(size() - 1);
  Eigen::VectorXd w = log_w_.array().exp();
  const double total = w.sum();
  Eigen::VectorXd out(size());
  for (int m = 0; m < size(); ++m) {
    out(m) = std::log(q0 * w(m) + off * (total - w(m)));
  }
  return out;
}

void Ensemble::maybe_drift() {
  if (!config_.dynamic() || drift_done_) return;
  for (int m = 0; m < size(); ++m) {
    if (active_[m]) experts_[m].drift(config_.drift_var);
  }
  drift_done_ = true;
}

EnsemblePrediction Ensemble::predict(
    const Eigen::Ref<const Eigen::VectorXd>& x) {
  maybe_drift();
  const Eigen::VectorXd lw = fusion_log_weights();
  const bool classify = experts_[0].likelihood() == Likelihood::kLogistic;

  EnsemblePrediction out;
  out.weights = Eigen::VectorXd::Zero(size());
  out.experts.resize(size());
  double mean = 0.0;
  for (int m = 0; m < size(); ++m) {
    if (!active_[m]) continue;
    PredictiveMoments pm;
    if (classify) {
      const double p = experts_[m].predict_prob(x);
      pm = {p, p * (1.0 - p)};
    } else {
      pm = experts_[m].predict(x);
    }
    const double w = std::exp(lw(m));
    out.weights(m) = w;
    out.experts[m] = pm;
    mean += w * pm.mean;
  }
  // Two-pass law of total variance: every addend is nonnegative, and a
  // single-expert mixture reproduces that expert's moments bit for bit.
  double var = 0.0;
  for (int m = 0; m < size(); ++m) {
    if (!active_[m]) continue;
    const double d = out.experts[m].mean - mean;
    var += out.weights(m) * (out.experts[m].variance + d * d);
  }
  out.mean = mean;
  out.variance = var;
  return out;
}

double Ensemble::correct_impl(const Eigen::Ref<const Eigen::VectorXd>& x,
                              double y, bool classification) {
  maybe_drift();
  const Eigen::VectorXd lw = fusion_log_weights();

  Eigen::VectorXd score(size());
  for (int m = 0; m < size(); ++m) {
    if (!active_[m]) {
      score(m) = kNegInf;
      last_loss_(m) = 0.0;
      continue;
    }
    const double loss =
        classification
            ? experts_[m].correct_label(x, static_cast<int>(y))
            : experts_[m].correct(x, y);
    last_loss_(m) = loss;
    cum_expert_loss_(m) += loss;
    ++correct_calls_[m];
    score(m) = lw(m) - loss;
  }

  const double lse = masked_lse(score, active_);
  double ensemble_loss;
  if (std::isfinite(lse)) {
    ensemble_loss = -lse;
    for (int m = 0; m < size(); ++m) {
      if (active_[m]) log_w_(m) = score(m) - lse;
    }
  } else {
    // Every expert assigned the observation probability zero; no usable
    // evidence, so the weights stay put and the loss is reported as is.
    ensemble_loss = std::numeric_limits<double>::infinity();
    ++underflow_events_;
  }

  if (!config_.switching() && config_.shutdown_threshold > 0.0) {
    const double log_thresh = std::log(config_.shutdown_threshold);
    bool retired = false;
    for (int m = 0; m < size(); ++m) {
      if (active_[m] && log_w_(m) < log_thresh) {
        active_[m] = false;
        log_w_(m) = kNegInf;
        retired = true;
      }
    }
    if (retired) {
      const double norm = masked_lse(log_w_, active_);
      for (int m = 0; m < size(); ++m) {
        if (active_[m]) log_w_(m) -= norm;
      }
    }
  }

  cum_loss_ += ensemble_loss;
  ++steps_;
  drift_done_ = false;
  return ensemble_loss;
}

double Ensemble::correct(const Eigen::Ref<const Eigen::VectorXd>& x,
                         double y) {
  if (experts_[0].likelihood() != Likelihood::kGaussian) {
    throw std::logic_error("correct: ensemble is configured for labels");
  }
  return correct_impl(x, y, false);
}

double Ensemble::correct_label(const Eigen::Ref<const Eigen::VectorXd>& x,
                               int y) {
  if (experts_[0].likelihood() != Likelihood::kLogistic) {
    throw std::logic_error("correct_label: ensemble is configured for regression");
  }
  return correct_impl(x, static_cast<double>(y), true);
}

Eigen::VectorXd Ensemble::weights() const {
  Eigen::VectorXd w(size());
  for (int m = 0; m < size(); ++m) {
    w(m) = active_[m] ? std::exp(log_w_(m)) : 0.0;
  }
  return w;
}

void Ensemble::restore_weights(Eigen::VectorXd log_w,
                               std::vector<bool> active) {
  if (log_w.size() != size() || active.size() != static_cast<size_t>(size())) {
    throw std::invalid_argument("restore_weights: size mismatch");
  }
  log_w_ = std::move(log_w);
  active_ = std::move(active);
}

void Ensemble::restore_counters(long steps, double cum_loss,
                                Eigen::VectorXd cum_expert_loss,
                                std::vector<long> correct_calls,
                                long underflow_events) {
  if (cum_expert_loss.size() != size() ||
      correct_calls.size() != static_cast<size_t>(size())) {
    throw std::invalid_argument("restore_counters: size mismatch");
  }
  steps_ = steps;
  cum_loss_ = cum_loss;
  cum_expert_loss_ = std::move(cum_expert_loss);
  correct_calls_ = std::move(correct_calls);
  underflow_events_ = underflow_events;
}

}  // namespace streamgp
