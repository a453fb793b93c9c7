#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ibscale/error.hpp"

namespace ibscale {

// Hard assignment of items to clusters 0..k-1, none empty. Labels are
// canonical: clusters are numbered in order of the first item they contain.
class Partition {
 public:
  Partition() = default;

  // Relabels arbitrary labels canonically; unused labels disappear.
  static Partition from_labels(std::vector<std::string> itemIds,
                               const std::vector<std::size_t>& labels) {
    if (itemIds.size() != labels.size()) {
      fail(ErrorCode::DimensionError, "label count differs from item count");
    }
    Partition p;
    p.itemIds_ = std::move(itemIds);
    p.clusterOf_.resize(labels.size());
    std::map<std::size_t, std::size_t> relabel;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = relabel.try_emplace(labels[i], relabel.size());
      p.clusterOf_[i] = it->second;
    }
    p.k_ = relabel.size();
    return p;
  }

  static Partition single_cluster(std::vector<std::string> itemIds) {
    std::vector<std::size_t> labels(itemIds.size(), 0);
    return from_labels(std::move(itemIds), labels);
  }

  static Partition singletons(std::vector<std::string> itemIds) {
    std::vector<std::size_t> labels(itemIds.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i;
    return from_labels(std::move(itemIds), labels);
  }

  // Builds from per-cluster member lists (ids must cover itemIds exactly once).
  static Partition from_members(std::vector<std::string> itemIds,
                                const std::vector<std::vector<std::string>>& groups) {
    std::map<std::string, std::size_t> label;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (const auto& id : groups[g])
        if (!label.emplace(id, g).second) fail(ErrorCode::DomainError, "item '" + id + "' in two groups");
    std::vector<std::size_t> labels;
    for (const auto& id : itemIds) {
      auto it = label.find(id);
      if (it == label.end()) fail(ErrorCode::DomainError, "item '" + id + "' not in any group");
      labels.push_back(it->second);
    }
    if (label.size() != itemIds.size()) fail(ErrorCode::DomainError, "groups name unknown items");
    return from_labels(std::move(itemIds), labels);
  }

  std::size_t item_count() const noexcept { return itemIds_.size(); }
  std::size_t cluster_count() const noexcept { return k_; }
  const std::vector<std::string>& item_ids() const noexcept { return itemIds_; }
  const std::vector<std::size_t>& cluster_of() const noexcept { return clusterOf_; }
  std::size_t cluster_of(std::size_t item) const { return clusterOf_[item]; }

  std::vector<std::vector<std::size_t>> member_indices() const {
    std::vector<std::vector<std::size_t>> m(k_);
    for (std::size_t i = 0; i < clusterOf_.size(); ++i) m[clusterOf_[i]].push_back(i);
    return m;
  }

  std::vector<std::vector<std::string>> members() const {
    std::vector<std::vector<std::string>> m(k_);
    for (std::size_t i = 0; i < clusterOf_.size(); ++i) m[clusterOf_[i]].push_back(itemIds_[i]);
    return m;
  }

  // Same partition expressed over another ordering of the same item set.
  Partition reindexed(const std::vector<std::string>& order) const {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < itemIds_.size(); ++i) pos.emplace(itemIds_[i], i);
    if (order.size() != itemIds_.size()) fail(ErrorCode::DomainError, "item-set mismatch");
    std::vector<std::size_t> labels;
    for (const auto& id : order) {
      auto it = pos.find(id);
      if (it == pos.end()) fail(ErrorCode::DomainError, "item-set mismatch: '" + id + "'");
      labels.push_back(clusterOf_[it->second]);
    }
    return from_labels(order, labels);
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::string> itemIds_;
  std::vector<std::size_t> clusterOf_;
  std::size_t k_ = 0;
};

inline bool same_item_set(const Partition& a, const Partition& b) {
  if (a.item_count() != b.item_count()) return false;
  std::set<std::string> sa(a.item_ids().begin(), a.item_ids().end());
  std::set<std::string> sb(b.item_ids().begin(), b.item_ids().end());
  return sa == sb;
}

}  // namespace ibscale
