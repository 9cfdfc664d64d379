#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "streamgp/rng.hpp"

namespace streamgp {

// Incremental nearest-neighbor index over dense vectors.
//
// The approximate backend is a hierarchical small-world graph: each point
// draws a geometric level, upper layers are searched greedily and the base
// layer with a beam of width ef_search.  Exact mode is a linear scan with
// the same interface.  Ids are assigned in insertion order and double as
// handles for the caller's side tables.  All tie-breaks are by id, so a
// given insertion sequence always produces the same graph and the same
// query answers.
class NnIndex {
 public:
  explicit NnIndex(int dim, bool approximate = true, std::uint64_t seed = 1,
                   int max_degree = 16, int ef_search = 64);

  int insert(const Eigen::VectorXd& v);

  // Id of the closest stored point (-1 when empty).
  int nearest(const Eigen::Ref<const Eigen::VectorXd>& q) const;

  // Up to k ids, closest first.
  std::vector<int> nearest_k(const Eigen::Ref<const Eigen::VectorXd>& q,
                             int k) const;

  int size() const { return static_cast<int>(points_.size()); }
  int dim() const { return dim_; }
  bool approximate() const { return approximate_; }
  const Eigen::VectorXd& point(int id) const { return points_[id]; }

  // Squared-distance evaluations so far; sublinear growth per query is the
  // observable that distinguishes the graph from the scan.
  long distance_evaluations() const { return dist_evals_; }

 private:
  struct Scored {
    double dist;
    int id;
  };

  double dist2(const Eigen::Ref<const Eigen::VectorXd>& a, int id) const;
  int greedy_step(const Eigen::Ref<const Eigen::VectorXd>& q, int start,
                  int level) const;
  std::vector<Scored> search_layer(const Eigen::Ref<const Eigen::VectorXd>& q,
                                   int entry, int ef, int level) const;
  void prune(int id, int level);
  std::vector<int> select_neighbors(std::vector<Scored> scored, int cap) const;

  int dim_;
  bool approximate_;
  int max_degree_;
  int ef_search_;
  int ef_construction_;
  double inv_log_degree_;
  Rng rng_;

  std::vector<Eigen::VectorXd> points_;
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<int>>> links_;  // [id][level] -> ids
  int entry_ = -1;
  int top_level_ = -1;
  mutable long dist_evals_ = 0;
  mutable std::vector<int> visit_mark_;  // per-id stamp, reused across queries
  mutable int visit_epoch_ = 0;
};

}  // namespace streamgp
