#include "streamgp/ann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streamgp {
namespace {

// Closest-first ordering with id tie-break keeps every queue deterministic.
bool closer(const double d1, const int i1, const double d2, const int i2) {
  if (d1 != d2) return d1 < d2;
  return i1 < i2;
}

}  // namespace

NnIndex::NnIndex(int dim, bool approximate, std::uint64_t seed, int max_degree,
                 int ef_search)
    : dim_(dim),
      approximate_(approximate),
      max_degree_(max_degree),
      ef_search_(ef_search),
      ef_construction_(std::max(ef_search, 100)),
      inv_log_degree_(1.0 / std::log(static_cast<double>(max_degree))),
      rng_(seed) {
  if (dim < 1) throw std::invalid_argument("NnIndex: dim must be positive");
  if (max_degree < 2 || ef_search < 1) {
    throw std::invalid_argument("NnIndex: bad graph parameters");
  }
}

double NnIndex::dist2(const Eigen::Ref<const Eigen::VectorXd>& a,
                      int id) const {
  ++dist_evals_;
  return (a - points_[id]).squaredNorm();
}

int NnIndex::greedy_step(const Eigen::Ref<const Eigen::VectorXd>& q, int start,
                         int level) const {
  int cur = start;
  double best = dist2(q, cur);
  bool improved = true;
  while (improved) {
    improved = false;
    for (int nb : links_[cur][level]) {
      const double d = dist2(q, nb);
      if (closer(d, nb, best, cur)) {
        best = d;
        cur = nb;
        improved = true;
      }
    }
  }
  return cur;
}

std::vector<NnIndex::Scored> NnIndex::search_layer(
    const Eigen::Ref<const Eigen::VectorXd>& q, int entry, int ef,
    int level) const {
  visit_mark_.resize(points_.size(), 0);
  ++visit_epoch_;

  // candidates: closest first; result: farthest first (bounded to ef).
  auto cand_cmp = [&](const Scored& a, const Scored& b) {
    return !closer(a.dist, a.id, b.dist, b.id);
  };
  auto res_cmp = [&](const Scored& a, const Scored& b) {
    return closer(a.dist, a.id, b.dist, b.id);
  };
  std::vector<Scored> cand, result;

  const Scored first{dist2(q, entry), entry};
  cand.push_back(first);
  result.push_back(first);
  visit_mark_[entry] = visit_epoch_;

  while (!cand.empty()) {
    std::pop_heap(cand.begin(), cand.end(), cand_cmp);
    const Scored c = cand.back();
    cand.pop_back();
    const Scored worst = result.front();
    if (static_cast<int>(result.size()) >= ef &&
        !closer(c.dist, c.id, worst.dist, worst.id)) {
      break;
    }
    for (int nb : links_[c.id][level]) {
      if (visit_mark_[nb] == visit_epoch_) continue;
      visit_mark_[nb] = visit_epoch_;
      const Scored s{dist2(q, nb), nb};
      const Scored w = result.front();
      if (static_cast<int>(result.size()) < ef ||
          closer(s.dist, s.id, w.dist, w.id)) {
        cand.push_back(s);
        std::push_heap(cand.begin(), cand.end(), cand_cmp);
        result.push_back(s);
        std::push_heap(result.begin(), result.end(), res_cmp);
        if (static_cast<int>(result.size()) > ef) {
          std::pop_heap(result.begin(), result.end(), res_cmp);
          result.pop_back();
        }
      }
    }
  }
  std::sort(result.begin(), result.end(), [&](const Scored& a, const Scored& b) {
    return closer(a.dist, a.id, b.dist, b.id);
  });
  return result;
}

// Keep a candidate only when no already-kept neighbor is closer to it than
// the base point is (scored.dist holds the distance to the base); this
// preserves long edges between separated regions that closest-only pruning
// would sever.  Leftover capacity is refilled with the nearest discards.
std::vector<int> NnIndex::select_neighbors(std::vector<Scored> scored,
                                           int cap) const {
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return closer(a.dist, a.id, b.dist, b.id);
  });
  std::vector<int> kept, dropped;
  for (const Scored& c : scored) {
    if (static_cast<int>(kept.size()) >= cap) break;
    bool diverse = true;
    for (int k : kept) {
      if (dist2(points_[c.id], k) < c.dist) {
        diverse = false;
        break;
      }
    }
    if (diverse) {
      kept.push_back(c.id);
    } else {
      dropped.push_back(c.id);
    }
  }
  for (int id : dropped) {
    if (static_cast<int>(kept.size()) >= cap) break;
    kept.push_back(id);
  }
  return kept;
}

void NnIndex::prune(int id, int level) {
  const int cap = level == 0 ? 2 * max_degree_ : max_degree_;
  auto& nbrs = links_[id][level];
  if (static_cast<int>(nbrs.size()) <= cap) return;
  std::vector<Scored> scored;
  scored.reserve(nbrs.size());
  for (int nb : nbrs) scored.push_back({dist2(points_[id], nb), nb});
  nbrs = select_neighbors(std::move(scored), cap);
}

int NnIndex::insert(const Eigen::VectorXd& v) {
  if (v.size() != dim_) throw std::invalid_argument("NnIndex: dim mismatch");
  const int id = size();
  points_.push_back(v);
  if (!approximate_) return id;

  const int level =
      static_cast<int>(std::floor(-std::log(rng_.uniform()) * inv_log_degree_));
  levels_.push_back(level);
  links_.emplace_back(level + 1);

  if (entry_ < 0) {
    entry_ = id;
    top_level_ = level;
    return id;
  }

  int cur = entry_;
  for (int l = top_level_; l > level; --l) cur = greedy_step(v, cur, l);

  for (int l = std::min(level, top_level_); l >= 0; --l) {
    const std::vector<Scored> found =
        search_layer(v, cur, ef_construction_, l);
    const int cap = l == 0 ? 2 * max_degree_ : max_degree_;
    const std::vector<int> chosen =
        select_neighbors({found.begin(), found.end()}, max_degree_);
    for (int nb : chosen) {
      links_[id][l].push_back(nb);
      links_[nb][l].push_back(id);
      if (static_cast<int>(links_[nb][l].size()) > cap) prune(nb, l);
    }
    cur = found.front().id;
  }

  if (level > top_level_) {
    top_level_ = level;
    entry_ = id;
  }
  return id;
}

int NnIndex::nearest(const Eigen::Ref<const Eigen::VectorXd>& q) const {
  const std::vector<int> ids = nearest_k(q, 1);
  return ids.empty() ? -1 : ids[0];
}

std::vector<int> NnIndex::nearest_k(const Eigen::Ref<const Eigen::VectorXd>& q,
                                    int k) const {
  std::vector<int> out;
  if (size() == 0 || k < 1) return out;

  if (!approximate_) {
    std::vector<Scored> scored(points_.size());
    for (int i = 0; i < size(); ++i) scored[i] = {dist2(q, i), i};
    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) {
                return closer(a.dist, a.id, b.dist, b.id);
              });
    for (int i = 0; i < std::min<int>(k, size()); ++i) {
      out.push_back(scored[i].id);
    }
    return out;
  }

  int cur = entry_;
  for (int l = top_level_; l >= 1; --l) cur = greedy_step(q, cur, l);
  const std::vector<Scored> found =
      search_layer(q, cur, std::max(ef_search_, k), 0);
  for (int i = 0; i < std::min<int>(k, static_cast<int>(found.size())); ++i) {
    out.push_back(found[i].id);
  }
  return out;
}

}  // namespace streamgp
