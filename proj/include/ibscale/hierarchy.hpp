#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ibscale/error.hpp"
#include "ibscale/ib_solver.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/probability.hpp"

namespace ibscale {

struct LevelScores {
  double infoTX = 0.0;
  double infoTY = 0.0;
  double functionalValue = 0.0;
};

struct HierarchyLevel {
  std::size_t t = 0;  // requested cluster count
  Partition partition;
  LevelScores scores;  // of the hardened partition
  double softFunctional = 0.0;
  bool converged = false;
};

struct LevelLink {
  std::size_t parentT = 0;
  std::size_t parentCluster = 0;
  std::size_t childT = 0;
  std::size_t childCluster = 0;
  double jaccard = 0.0;

  friend bool operator==(const LevelLink&, const LevelLink&) = default;
};

struct PartitionHierarchy {
  std::vector<HierarchyLevel> levels;  // ordered by t
  std::vector<LevelLink> links;
  double infoXY = 0.0;

  const HierarchyLevel& level(std::size_t t) const {
    for (const auto& l : levels)
      if (l.t == t) return l;
    fail(ErrorCode::DomainError, "no level t=" + std::to_string(t));
  }
};

struct SweepOptions {
  // Seed level t+1 with one extra restart split from level t's winner.
  bool splitWarmStart = false;
};

// Parent of each fine cluster: coarse cluster with maximal Jaccard overlap,
// ties to the lowest coarse index. Returned in fine-cluster order.
inline std::vector<LevelLink> link_levels(const Partition& coarse, const Partition& fine,
                                          std::size_t coarseT = 0, std::size_t fineT = 0) {
  if (!same_item_set(coarse, fine)) fail(ErrorCode::DomainError, "link_levels: item-set mismatch");
  Partition c = coarse.item_ids() == fine.item_ids() ? coarse : coarse.reindexed(fine.item_ids());
  const std::size_t kc = c.cluster_count(), kf = fine.cluster_count();
  std::vector<std::vector<std::size_t>> overlap(kf, std::vector<std::size_t>(kc, 0));
  std::vector<std::size_t> sizeC(kc, 0), sizeF(kf, 0);
  for (std::size_t i = 0; i < fine.item_count(); ++i) {
    ++overlap[fine.cluster_of(i)][c.cluster_of(i)];
    ++sizeC[c.cluster_of(i)];
    ++sizeF[fine.cluster_of(i)];
  }
  std::vector<LevelLink> links;
  for (std::size_t f = 0; f < kf; ++f) {
    std::size_t best = 0;
    double bestJ = -1.0;
    for (std::size_t k = 0; k < kc; ++k) {
      double inter = static_cast<double>(overlap[f][k]);
      double uni = static_cast<double>(sizeC[k] + sizeF[f]) - inter;
      double jac = inter / uni;
      if (jac > bestJ) {
        bestJ = jac;
        best = k;
      }
    }
    links.push_back({coarseT, best, fineT, f, bestJ});
  }
  return links;
}

// True when every fine cluster lies inside its linked parent.
inline bool is_nested(const Partition& coarse, const Partition& fine) {
  Partition c = coarse.item_ids() == fine.item_ids() ? coarse : coarse.reindexed(fine.item_ids());
  auto links = link_levels(c, fine);
  for (std::size_t i = 0; i < fine.item_count(); ++i)
    if (links[fine.cluster_of(i)].parentCluster != c.cluster_of(i)) return false;
  return true;
}

namespace detail {

// Splits the largest hardened cluster of a level-t solution into two
// (alternating members) and softens, giving a t+1 start.
inline Matrix split_warm_start(const Partition& p, std::size_t targetT) {
  auto members = p.member_indices();
  std::size_t largest = 0;
  for (std::size_t k = 1; k < members.size(); ++k)
    if (members[k].size() > members[largest].size()) largest = k;
  std::vector<std::size_t> labels = p.cluster_of();
  for (std::size_t m = 1; m < members[largest].size(); m += 2) labels[members[largest][m]] = p.cluster_count();
  const double eps = 0.1;
  Matrix q(targetT, p.item_count(), eps / static_cast<double>(targetT));
  for (std::size_t x = 0; x < p.item_count(); ++x) {
    std::size_t l = std::min(labels[x], targetT - 1);
    q(l, x) += 1.0 - eps;
  }
  return q;
}

}  // namespace detail

inline PartitionHierarchy sweep(const JointDistribution& joint, std::size_t tMin, std::size_t tMax,
                                const SolverConfig& config, const SweepOptions& options = {}) {
  const std::size_t nx = joint.item_count();
  if (tMin < 1 || tMin > tMax || tMax > nx) {
    fail(ErrorCode::InvalidClusterCount, "sweep range must satisfy 1 <= tMin <= tMax <= |X|");
  }
  PartitionHierarchy h;
  h.infoXY = mutual_information(joint);
  std::optional<Partition> previous;
  for (std::size_t t = tMin; t <= tMax; ++t) {
    std::optional<Matrix> warm;
    if (options.splitWarmStart && previous && previous->cluster_count() + 1 == t) {
      warm = detail::split_warm_start(*previous, t);
    }
    SolverConfig levelConfig = config;
    levelConfig.seed = splitmix64(config.seed + t);
    IBSolution sol = ib_solve(joint, t, levelConfig, warm);
    HierarchyLevel level;
    level.t = t;
    level.partition = harden(sol, joint).partition;
    auto terms = partition_information(joint, level.partition);
    level.scores = {terms.infoTX, terms.infoTY, terms.infoTX - config.beta * terms.infoTY};
    level.softFunctional = sol.functionalValue;
    level.converged = sol.converged;
    previous = level.partition;
    h.levels.push_back(std::move(level));
  }
  for (std::size_t i = 1; i < h.levels.size(); ++i) {
    auto edges = link_levels(h.levels[i - 1].partition, h.levels[i].partition, h.levels[i - 1].t,
                             h.levels[i].t);
    h.links.insert(h.links.end(), edges.begin(), edges.end());
  }
  return h;
}

struct InfoPlanePoint {
  std::size_t t = 0;
  double infoTX = 0.0;
  double infoTY = 0.0;
};

inline std::vector<InfoPlanePoint> info_plane(const PartitionHierarchy& h) {
  if (h.levels.empty()) fail(ErrorCode::EmptyInput, "empty hierarchy");
  std::vector<InfoPlanePoint> pts;
  for (const auto& l : h.levels) pts.push_back({l.t, l.scores.infoTX, l.scores.infoTY});
  return pts;
}

// Nestedness of each consecutive pair of levels (reported, never required).
inline std::vector<bool> nestedness(const PartitionHierarchy& h) {
  std::vector<bool> out;
  for (std::size_t i = 1; i < h.levels.size(); ++i)
    out.push_back(is_nested(h.levels[i - 1].partition, h.levels[i].partition));
  return out;
}

}  // namespace ibscale
