#pragma once

#include <Eigen/Dense>
#include <vector>

namespace streamgp {

struct RegressionMetrics {
  long count = 0;
  double nmse = 0.0;       // sum sq error / sum sq deviation from the mean
  double mean_nll = 0.0;   // average negative log predictive density
  double coverage95 = 0.0; // fraction of targets inside +-1.96 sd
};

// Accumulates one regression stream.  The nMSE denominator uses the sample
// variance of the full recorded target sequence, so the summary is only
// meaningful once the stream has been fully fed.
class RegressionTracker {
 public:
  void add(double y, double pred_mean, double pred_var, double loss);
  RegressionMetrics summary() const;
  long count() const { return static_cast<long>(y_.size()); }

  const std::vector<double>& targets() const { return y_; }
  const std::vector<double>& means() const { return mean_; }
  const std::vector<double>& variances() const { return var_; }
  const std::vector<double>& losses() const { return loss_; }

 private:
  std::vector<double> y_, mean_, var_, loss_;
};

struct ClassificationMetrics {
  long count = 0;
  double error_rate = 0.0;  // threshold 0.5 on the predictive probability
  double mean_nll = 0.0;
};

class ClassificationTracker {
 public:
  void add(int label, double prob_positive, double loss);
  ClassificationMetrics summary() const;
  long count() const { return static_cast<long>(label_.size()); }

  const std::vector<int>& labels() const { return label_; }
  const std::vector<double>& probabilities() const { return prob_; }
  const std::vector<double>& losses() const { return loss_; }

 private:
  std::vector<int> label_;
  std::vector<double> prob_, loss_;
};

// Leave-one-out nearest-neighbor label error of an embedding (brute force).
double loo_1nn_error(const Eigen::MatrixXd& embeddings,
                     const std::vector<int>& labels);

// Median of a copy; the input order is preserved.
double median(std::vector<double> values);

}  // namespace streamgp
