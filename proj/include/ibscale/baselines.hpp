#pragma once

// Reference methods: k-means and agglomerative clustering of items embedded
// as respondent-score vectors, Cronbach's alpha, and the adjusted Rand index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ibscale/error.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/responses.hpp"
#include "ibscale/rng.hpp"

namespace ibscale {

// One point per item: the item's column of answers.
struct ItemVectors {
  std::vector<std::string> itemIds;
  std::vector<std::vector<double>> vectors;

  static ItemVectors from_responses(const ResponseMatrix& m) {
    ItemVectors v;
    v.itemIds = m.item_ids();
    for (std::size_t i = 0; i < m.items(); ++i) v.vectors.push_back(m.item_column(i));
    v.validate();
    return v;
  }

  void validate() const {
    if (vectors.empty()) fail(ErrorCode::EmptyInput, "no item vectors");
    if (vectors.size() != itemIds.size()) fail(ErrorCode::DimensionError, "ids and vectors differ in count");
    const std::size_t n = vectors.front().size();
    if (n < 2) fail(ErrorCode::DimensionError, "item vectors need length >= 2");
    for (const auto& v : vectors)
      if (v.size() != n) fail(ErrorCode::DimensionError, "item vectors differ in length");
  }

  std::size_t size() const noexcept { return vectors.size(); }
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  return std::sqrt(squared_distance(a, b));
}

// Within-cluster sum of squared distances to cluster means.
inline double within_cluster_ss(const ItemVectors& v, const Partition& p) {
  const std::size_t dim = v.vectors.front().size();
  std::vector<std::vector<double>> centroid(p.cluster_count(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(p.cluster_count(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto c = p.cluster_of(i);
    ++count[c];
    for (std::size_t d = 0; d < dim; ++d) centroid[c][d] += v.vectors[i][d];
  }
  for (std::size_t c = 0; c < centroid.size(); ++c)
    for (double& x : centroid[c]) x /= static_cast<double>(count[c]);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += squared_distance(v.vectors[i], centroid[p.cluster_of(i)]);
  return s;
}

struct KMeansResult {
  Partition partition;
  double wcss = 0.0;
  std::size_t bestRestart = 0;
};

namespace detail {

inline std::vector<std::size_t> lloyd(const ItemVectors& v, std::size_t k, std::mt19937_64& gen,
                                      std::size_t maxIterations) {
  const std::size_t n = v.size();
  const std::size_t dim = v.vectors.front().size();
  // k distinct items as initial centroids.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(gen)]);
  }
  std::vector<std::vector<double>> centroid(k);
  for (std::size_t c = 0; c < k; ++c) centroid[c] = v.vectors[order[c]];

  std::vector<std::size_t> label(n, 0);
  for (std::size_t iter = 0; iter < maxIterations; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bestD = squared_distance(v.vectors[i], centroid[0]);
      for (std::size_t c = 1; c < k; ++c) {
        double d = squared_distance(v.vectors[i], centroid[c]);
        if (d < bestD) {
          bestD = d;
          best = c;
        }
      }
      if (label[i] != best) changed = true;
      label[i] = best;
    }
    // Empty cluster repair: take the point farthest from its own centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (std::count(label.begin(), label.end(), c) > 0) continue;
      std::size_t far = n;
      double farD = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::count(label.begin(), label.end(), label[i]) < 2) continue;
        double d = squared_distance(v.vectors[i], centroid[label[i]]);
        if (d > farD) {
          farD = d;
          far = i;
        }
      }
      if (far < n) {
        label[far] = c;
        changed = true;
      }
    }
    for (auto& cv : centroid) std::fill(cv.begin(), cv.end(), 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[label[i]];
      for (std::size_t d = 0; d < dim; ++d) centroid[label[i]][d] += v.vectors[i][d];
    }
    for (std::size_t c = 0; c < k; ++c)
      for (double& x : centroid[c]) x /= static_cast<double>(count[c]);
    if (!changed) break;
  }
  return label;
}

}  // namespace detail

// Lloyd's algorithm, best of `restarts` by WCSS (ties to the earliest restart).
inline KMeansResult kmeans(const ItemVectors& vectors, std::size_t k, std::uint64_t seed,
                           std::size_t restarts = 20, std::size_t maxIterations = 300) {
  vectors.validate();
  if (k < 1 || k > vectors.size()) {
    fail(ErrorCode::InvalidClusterCount,
         "k = " + std::to_string(k) + " outside 1.." + std::to_string(vectors.size()));
  }
  if (restarts < 1) fail(ErrorCode::InvalidConfig, "restarts must be >= 1");
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    auto gen = derive_generator(seed, r);
    auto labels = detail::lloyd(vectors, k, gen, maxIterations);
    auto p = Partition::from_labels(vectors.itemIds, labels);
    double w = within_cluster_ss(vectors, p);
    if (w < best.wcss) best = {std::move(p), w, r};
  }
  return best;
}

enum class Linkage { Single, Complete, Average };

inline std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "average";
}

inline Linkage parse_linkage(const std::string& s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  fail(ErrorCode::InvalidConfig, "unknown linkage '" + s + "'");
}

struct Merge {
  std::size_t clusterA = 0;  // ids: leaves 0..n-1, merge i creates n+i
  std::size_t clusterB = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct LinkageTree {
  std::vector<std::string> itemIds;
  std::vector<Merge> merges;
  Linkage linkage = Linkage::Average;
};

// Bottom-up merging with Lance-Williams distance updates. Closest pair wins,
// ties to the lexicographically smallest (lower id, higher id) pair.
inline LinkageTree agglomerative(const ItemVectors& vectors, Linkage linkage = Linkage::Average) {
  vectors.validate();
  const std::size_t n = vectors.size();
  if (n < 2) fail(ErrorCode::DimensionError, "agglomerative clustering needs >= 2 items");
  LinkageTree tree;
  tree.itemIds = vectors.itemIds;
  tree.linkage = linkage;

  // Active clusters indexed by slot; slot s holds cluster id ids[s].
  std::vector<std::size_t> ids(n), sizes(n, 1);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<bool> active(n, true);
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = euclidean_distance(vectors.vectors[i], vectors.vectors[j]);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        double d = dist[i][j];
        auto lo = std::min(ids[i], ids[j]), hi = std::max(ids[i], ids[j]);
        bool better = d < bd;
        if (!better && d == bd) {
          auto blo = std::min(ids[bi], ids[bj]), bhi = std::max(ids[bi], ids[bj]);
          better = lo < blo || (lo == blo && hi < bhi);
        }
        if (better) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    }
    Merge m;
    m.clusterA = std::min(ids[bi], ids[bj]);
    m.clusterB = std::max(ids[bi], ids[bj]);
    m.distance = bd;
    m.size = sizes[bi] + sizes[bj];
    tree.merges.push_back(m);

    // Slot bi becomes the merged cluster.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double dik = dist[bi][k], djk = dist[bj][k], nd = 0.0;
      switch (linkage) {
        case Linkage::Single: nd = std::min(dik, djk); break;
        case Linkage::Complete: nd = std::max(dik, djk); break;
        case Linkage::Average:
          nd = (static_cast<double>(sizes[bi]) * dik + static_cast<double>(sizes[bj]) * djk) /
               static_cast<double>(sizes[bi] + sizes[bj]);
          break;
      }
      dist[bi][k] = dist[k][bi] = nd;
    }
    sizes[bi] += sizes[bj];
    ids[bi] = n + step;
    active[bj] = false;
  }
  return tree;
}

// Undo the last k-1 merges.
inline Partition cut_tree(const LinkageTree& tree, std::size_t k) {
  const std::size_t n = tree.itemIds.size();
  if (k < 1 || k > n) fail(ErrorCode::InvalidClusterCount, "cut size outside 1..n");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (std::size_t s = 0; s + k < n; ++s) {
    parent[find(tree.merges[s].clusterA)] = n + s;
    parent[find(tree.merges[s].clusterB)] = n + s;
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = find(i);
  return Partition::from_labels(tree.itemIds, labels);
}


namespace detail {

// n^2 * sample variance * (n-1)/n, i.e. n*sum(x^2) - sum(x)^2; exact for integer answers.
inline std::int64_t scaled_variance(const std::vector<std::int64_t>& v) {
  std::int64_t sum = 0, squares = 0;
  for (auto x : v) {
    sum += x;
    squares += x * x;
  }
  return static_cast<std::int64_t>(v.size()) * squares - sum * sum;
}

}  // namespace detail

// alpha = k/(k-1) * (1 - sum of item variances / total-score variance), with
// sample (n-1) variances. The common 1/(n(n-1)) factor cancels, so the ratio
// is formed from exact integers: duplicated items give exactly 1 and adding a
// constant to an item changes nothing.
inline double cronbach_alpha(const ResponseMatrix& responses, const std::vector<std::size_t>& items) {
  const std::size_t k = items.size();
  const std::size_t n = responses.respondents();
  if (k < 2) fail(ErrorCode::DimensionError, "cronbach_alpha needs >= 2 items");
  if (n < 2) fail(ErrorCode::DimensionError, "cronbach_alpha needs >= 2 respondents");
  std::vector<std::int64_t> total(n, 0), col(n);
  std::int64_t itemVarSum = 0;
  for (auto i : items) {
    if (i >= responses.items()) fail(ErrorCode::DomainError, "item index out of range");
    for (std::size_t r = 0; r < n; ++r) {
      col[r] = responses(r, i);
      total[r] += col[r];
    }
    itemVarSum += detail::scaled_variance(col);
  }
  const std::int64_t totalVar = detail::scaled_variance(total);
  if (totalVar <= 0) fail(ErrorCode::DegenerateScale, "total score has zero variance");
  const double kd = static_cast<double>(k);
  return kd * static_cast<double>(totalVar - itemVarSum) / ((kd - 1.0) * static_cast<double>(totalVar));
}

inline double cronbach_alpha(const ResponseMatrix& responses, const std::vector<std::string>& itemIds) {
  std::vector<std::size_t> idx;
  for (const auto& id : itemIds) idx.push_back(responses.index_of(id));
  return cronbach_alpha(responses, idx);
}

inline double cronbach_alpha(const ResponseMatrix& responses) {
  std::vector<std::size_t> idx(responses.items());
  std::iota(idx.begin(), idx.end(), 0);
  return cronbach_alpha(responses, idx);
}

// Pair-counting ARI. When the chance-corrected denominator vanishes (both
// partitions trivial) the partitions are identical and 1.0 is returned.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (!same_item_set(a, b)) fail(ErrorCode::DomainError, "adjusted_rand_index: item-set mismatch");
  Partition bb = a.item_ids() == b.item_ids() ? b : b.reindexed(a.item_ids());
  const std::size_t n = a.item_count();
  auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::vector<double> rowSum(a.cluster_count(), 0.0), colSum(bb.cluster_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cells[{a.cluster_of(i), bb.cluster_of(i)}] += 1.0;
    rowSum[a.cluster_of(i)] += 1.0;
    colSum[bb.cluster_of(i)] += 1.0;
  }
  double sumCells = 0.0, sumA = 0.0, sumB = 0.0;
  for (const auto& [key, c] : cells) sumCells += choose2(c);
  for (double r : rowSum) sumA += choose2(r);
  for (double c : colSum) sumB += choose2(c);
  const double pairs = choose2(static_cast<double>(n));
  if (pairs == 0.0) return 1.0;
  const double expected = sumA * sumB / pairs;
  const double maxIndex = 0.5 * (sumA + sumB);
  const double denom = maxIndex - expected;
  if (denom == 0.0) return 1.0;
  return (sumCells - expected) / denom;
}

// True when ARI's chance-corrected denominator vanishes: both partitions are
// one cluster, or both are all singletons. ARI is then 1 only by convention.
// One cluster against all singletons is well defined (ARI 0).
inline bool ari_degenerate(const Partition& a, const Partition& b) {
  const std::size_t n = a.item_count();
  return (a.cluster_count() == 1 && b.cluster_count() == 1) ||
         (a.cluster_count() == n && b.cluster_count() == n);
}

}  // namespace ibscale
