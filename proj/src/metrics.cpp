#include "streamgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace streamgp {

void RegressionTracker::add(double y, double pred_mean, double pred_var,
                            double loss) {
  y_.push_back(y);
  mean_.push_back(pred_mean);
  var_.push_back(pred_var);
  loss_.push_back(loss);
}

RegressionMetrics RegressionTracker::summary() const {
  RegressionMetrics out;
  const long n = count();
  out.count = n;
  if (n == 0) return out;

  double y_mean = 0.0;
  for (double y : y_) y_mean += y;
  y_mean /= static_cast<double>(n);

  double sq_err = 0.0, sq_dev = 0.0, nll = 0.0;
  long covered = 0;
  for (long i = 0; i < n; ++i) {
    const double e = y_[i] - mean_[i];
    sq_err += e * e;
    const double d = y_[i] - y_mean;
    sq_dev += d * d;
    nll += loss_[i];
    if (std::abs(e) <= 1.96 * std::sqrt(var_[i])) ++covered;
  }
  out.nmse = sq_dev > 0.0 ? sq_err / sq_dev : 0.0;
  out.mean_nll = nll / static_cast<double>(n);
  out.coverage95 = static_cast<double>(covered) / static_cast<double>(n);
  return out;
}

void ClassificationTracker::add(int label, double prob_positive, double loss) {
  label_.push_back(label == 0 ? -1 : label);
  prob_.push_back(prob_positive);
  loss_.push_back(loss);
}

ClassificationMetrics ClassificationTracker::summary() const {
  ClassificationMetrics out;
  const long n = count();
  out.count = n;
  if (n == 0) return out;
  long wrong = 0;
  double nll = 0.0;
  for (long i = 0; i < n; ++i) {
    const int guess = prob_[i] >= 0.5 ? 1 : -1;
    if (guess != label_[i]) ++wrong;
    nll += loss_[i];
  }
  out.error_rate = static_cast<double>(wrong) / static_cast<double>(n);
  out.mean_nll = nll / static_cast<double>(n);
  return out;
}

double loo_1nn_error(const Eigen::MatrixXd& embeddings,
                     const std::vector<int>& labels) {
  const long n = embeddings.rows();
  if (labels.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("loo_1nn_error: label count mismatch");
  }
  if (n < 2) return 0.0;
  long wrong = 0;
  for (long i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    long arg = -1;
    for (long j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (embeddings.row(i) - embeddings.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    if (labels[arg] != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median: empty input");
  }
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace streamgp
