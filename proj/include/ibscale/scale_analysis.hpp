#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ibscale/error.hpp"
#include "ibscale/hierarchy.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/responses.hpp"

namespace ibscale {

// Item -> theoretical subscale, plus each subscale's position on an ordered
// continuum. Subscales may share a rank.
class ScaleMap {
 public:
  struct Subscale {
    std::string name;
    int rank = 0;
  };

  void add_subscale(const std::string& name, int rank) {
    for (const auto& s : subscales_)
      if (s.name == name) fail(ErrorCode::DomainError, "duplicate subscale '" + name + "'");
    subscales_.push_back({name, rank});
  }

  void assign(const std::string& item, const std::string& subscale) {
    if (!has_subscale(subscale)) fail(ErrorCode::DomainError, "unknown subscale '" + subscale + "'");
    if (index_.count(item)) fail(ErrorCode::DomainError, "item '" + item + "' mapped twice");
    index_.emplace(item, entries_.size());
    entries_.push_back({item, subscale});
  }

  bool has_subscale(const std::string& name) const {
    return std::any_of(subscales_.begin(), subscales_.end(),
                       [&](const Subscale& s) { return s.name == name; });
  }
  bool contains(const std::string& item) const { return index_.count(item) > 0; }

  const std::string& subscale_of(const std::string& item) const {
    auto it = index_.find(item);
    if (it == index_.end()) fail(ErrorCode::DomainError, "item '" + item + "' is not mapped");
    return entries_[it->second].second;
  }

  int rank_of(const std::string& subscale) const {
    for (const auto& s : subscales_)
      if (s.name == subscale) return s.rank;
    fail(ErrorCode::DomainError, "unknown subscale '" + subscale + "'");
  }

  const std::vector<Subscale>& subscales() const noexcept { return subscales_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::vector<std::string> items() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }

  std::vector<std::string> items_of(const std::string& subscale) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (e.second == subscale) out.push_back(e.first);
    return out;
  }

  // Relabels subscales (unlisted names keep their own label and rank).
  ScaleMap coarsened(const std::map<std::string, std::string>& merge) const {
    ScaleMap out;
    for (const auto& s : subscales_) {
      auto it = merge.find(s.name);
      std::string name = it == merge.end() ? s.name : it->second;
      if (!out.has_subscale(name)) out.add_subscale(name, s.rank);
    }
    for (const auto& [item, sub] : entries_) {
      auto it = merge.find(sub);
      out.assign(item, it == merge.end() ? sub : it->second);
    }
    return out;
  }

 private:
  std::vector<Subscale> subscales_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

namespace subscale {
inline const std::string kAmotivation = "Amotivation";
inline const std::string kExternalAttendance = "External Regulation by Attendance";
inline const std::string kExternalSocial = "External Regulation by Social Interaction";
inline const std::string kIntrojected = "Introjected Regulation";
inline const std::string kIdentified = "Identified Regulation";
inline const std::string kIntegrated = "Integrated Regulation";
inline const std::string kIntrinsic = "Intrinsic Motivation";
}  // namespace subscale

// The 29-item university motivation questionnaire, ordered along the
// self-determination continuum (the two external regulations share a rank).
inline ScaleMap builtin_scale_map() {
  using namespace subscale;
  ScaleMap m;
  m.add_subscale(kAmotivation, 0);
  m.add_subscale(kExternalAttendance, 1);
  m.add_subscale(kExternalSocial, 1);
  m.add_subscale(kIntrojected, 2);
  m.add_subscale(kIdentified, 3);
  m.add_subscale(kIntegrated, 4);
  m.add_subscale(kIntrinsic, 5);
  const std::vector<std::pair<std::string, std::vector<int>>> groups = {
      {kAmotivation, {1, 7, 9, 13, 16, 19}},
      {kIntrojected, {5, 8, 10, 15, 20, 23}},
      {kExternalAttendance, {3, 11, 14}},
      {kExternalSocial, {6, 28, 29}},
      {kIdentified, {2, 22, 24, 25}},
      {kIntegrated, {12, 18, 26, 27}},
      {kIntrinsic, {4, 17, 21}},
  };
  std::map<int, std::string> byItem;
  for (const auto& [name, items] : groups)
    for (int i : items) byItem.emplace(i, name);
  for (const auto& [item, name] : byItem) m.assign(std::to_string(item), name);
  return m;
}

// Rows: item,subscale[,rank]. Without a rank column subscales are ranked by
// first appearance. A header row starting with "item" is skipped when it is
// the first non-comment row.
inline ScaleMap read_scale_map_csv(std::istream& in, char delim = ',') {
  ScaleMap m;
  std::string line;
  std::size_t lineNo = 0;
  int nextRank = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineNo;
    if (detail::trim(line).empty() || detail::trim(line)[0] == '#') continue;
    auto cells = detail::split_line(line, delim);
    if (cells.size() < 2 || cells.size() > 3 || cells[0].empty() || cells[1].empty()) {
      fail(ErrorCode::ParseError, "scale map line " + std::to_string(lineNo) +
                                      ": expected item,subscale[,rank]");
    }
    bool header = first && cells[0] == "item";
    first = false;
    if (header) continue;
    if (!m.has_subscale(cells[1])) {
      int rank = nextRank;
      if (cells.size() == 3) {
        try {
          rank = std::stoi(cells[2]);
        } catch (const std::exception&) {
          fail(ErrorCode::ParseError, "scale map line " + std::to_string(lineNo) + ": bad rank");
        }
      }
      m.add_subscale(cells[1], rank);
      nextRank = std::max(nextRank, rank) + 1;
    }
    m.assign(cells[0], cells[1]);
  }
  if (m.entries().empty()) fail(ErrorCode::EmptyInput, "scale map is empty");
  return m;
}

inline ScaleMap read_scale_map_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_scale_map_csv(in);
}

inline void write_scale_map_csv(std::ostream& out, const ScaleMap& m) {
  out << "item,subscale,rank\n";
  for (const auto& [item, sub] : m.entries()) out << item << ',' << sub << ',' << m.rank_of(sub) << '\n';
}

struct Deviation {
  std::string item;
  std::string expected;
  std::size_t cluster = 0;
  std::vector<std::string> clusterPlurality;
};

struct DeviationReport {
  std::vector<Deviation> deviations;  // in partition item order
  std::vector<std::size_t> mixedClusters;
  std::vector<std::vector<std::string>> plurality;  // per cluster

  bool flags(const std::string& item) const {
    return std::any_of(deviations.begin(), deviations.end(),
                       [&](const Deviation& d) { return d.item == item; });
  }
};

// An item deviates when its subscale is not among the plurality subscales of
// its cluster. Ties keep every tied subscale and mark the cluster mixed.
inline DeviationReport deviation_report(const Partition& partition, const ScaleMap& map) {
  for (const auto& id : partition.item_ids())
    if (!map.contains(id)) fail(ErrorCode::DomainError, "item '" + id + "' is not in the scale map");
  DeviationReport report;
  auto members = partition.members();
  report.plurality.resize(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::map<std::string, std::size_t> tally;
    for (const auto& id : members[c]) ++tally[map.subscale_of(id)];
    std::size_t top = 0;
    for (const auto& [sub, n] : tally) top = std::max(top, n);
    // Keep subscale declaration order for stable output.
    for (const auto& s : map.subscales()) {
      auto it = tally.find(s.name);
      if (it != tally.end() && it->second == top) report.plurality[c].push_back(s.name);
    }
    if (report.plurality[c].size() > 1) report.mixedClusters.push_back(c);
  }
  for (std::size_t i = 0; i < partition.item_count(); ++i) {
    const auto& id = partition.item_ids()[i];
    const auto& sub = map.subscale_of(id);
    auto c = partition.cluster_of(i);
    const auto& plur = report.plurality[c];
    if (std::find(plur.begin(), plur.end(), sub) == plur.end()) {
      report.deviations.push_back({id, sub, c, plur});
    }
  }
  return report;
}

struct AlignmentScore {
  std::size_t t = 0;
  double score = 1.0;
  std::size_t sameClusterPairs = 0;
  std::size_t alignedPairs = 0;
  bool degenerate = false;  // no same-cluster pairs
};

// Among item pairs sharing a cluster, the fraction whose subscales are equal
// or adjacent on the continuum (|rank difference| <= 1). No such pairs gives
// a vacuous 1.0 flagged degenerate.
inline AlignmentScore partition_alignment(const Partition& p, const ScaleMap& map) {
  AlignmentScore s;
  const auto& ids = p.item_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!map.contains(ids[i])) fail(ErrorCode::DomainError, "item '" + ids[i] + "' is not mapped");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (p.cluster_of(i) != p.cluster_of(j)) continue;
      ++s.sameClusterPairs;
      int ri = map.rank_of(map.subscale_of(ids[i]));
      int rj = map.rank_of(map.subscale_of(ids[j]));
      if (std::abs(ri - rj) <= 1) ++s.alignedPairs;
    }
  }
  if (s.sameClusterPairs == 0) {
    s.degenerate = true;
    s.score = 1.0;
  } else {
    s.score = static_cast<double>(s.alignedPairs) / static_cast<double>(s.sameClusterPairs);
  }
  return s;
}

inline std::vector<AlignmentScore> continuum_alignment(const PartitionHierarchy& h, const ScaleMap& map) {
  std::vector<AlignmentScore> out;
  for (const auto& level : h.levels) {
    auto s = partition_alignment(level.partition, map);
    s.t = level.t;
    out.push_back(s);
  }
  return out;
}

// Synthetic respondents with planted item groups. Respondent r belongs to
// profile r mod k; its answer to item i is
// clamp(round(profileMeans[profile][group(i)] + N(0, noise)), 1, L).
struct SyntheticSpec {
  std::size_t respondents = 300;
  std::vector<std::string> itemIds;
  std::vector<std::size_t> groupOf;              // item -> group
  std::vector<std::vector<double>> profileMeans;  // profile x group
  double noise = 1.0;
  int levelCount = 7;
  std::uint64_t seed = 0;

  std::size_t group_count() const {
    return groupOf.empty() ? 0 : *std::max_element(groupOf.begin(), groupOf.end()) + 1;
  }

  void validate() const {
    if (respondents < 1) fail(ErrorCode::InvalidConfig, "need at least one respondent");
    if (itemIds.empty() || itemIds.size() != groupOf.size()) {
      fail(ErrorCode::InvalidConfig, "itemIds and groupOf must be non-empty and equal length");
    }
    if (profileMeans.empty()) fail(ErrorCode::InvalidConfig, "need at least one profile");
    if (!(noise >= 0.0)) fail(ErrorCode::InvalidConfig, "noise must be >= 0");
    for (const auto& row : profileMeans) {
      if (row.size() != group_count()) fail(ErrorCode::InvalidConfig, "profile means must cover every group");
      for (double m : row)
        if (!(m >= 1.0 && m <= levelCount)) fail(ErrorCode::InvalidConfig, "profile mean outside 1..L");
    }
  }
};

struct SyntheticData {
  ResponseMatrix responses;
  Partition planted;
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 gen(splitmix64(spec.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t items = spec.itemIds.size();
  const std::size_t k = spec.profileMeans.size();
  std::vector<int> values(spec.respondents * items);
  for (std::size_t r = 0; r < spec.respondents; ++r) {
    const auto& means = spec.profileMeans[r % k];
    for (std::size_t i = 0; i < items; ++i) {
      double v = means[spec.groupOf[i]];
      if (spec.noise > 0.0) v += spec.noise * normal(gen);
      long level = std::lround(v);
      values[r * items + i] = static_cast<int>(std::clamp<long>(level, 1, spec.levelCount));
    }
  }
  return {ResponseMatrix(spec.itemIds, std::move(values), spec.levelCount),
          Partition::from_labels(spec.itemIds, spec.groupOf)};
}

// Equal-size groups with answer means spread evenly between the given ends;
// profile p shifts every group mean by profileShift * (p - (k-1)/2).
inline SyntheticSpec spaced_groups_spec(std::size_t items, std::size_t groups, std::size_t profiles,
                                        double lowMean, double highMean, double profileShift,
                                        double noise, std::size_t respondents, std::uint64_t seed) {
  SyntheticSpec s;
  s.respondents = respondents;
  s.noise = noise;
  s.seed = seed;
  for (std::size_t i = 0; i < items; ++i) {
    s.itemIds.push_back("q" + std::to_string(i + 1));
    s.groupOf.push_back(i * groups / items);
  }
  for (std::size_t p = 0; p < profiles; ++p) {
    std::vector<double> row;
    double shift = profileShift * (static_cast<double>(p) - 0.5 * static_cast<double>(profiles - 1));
    for (std::size_t g = 0; g < groups; ++g) {
      double base = groups == 1 ? lowMean
                                : lowMean + (highMean - lowMean) * static_cast<double>(g) /
                                                static_cast<double>(groups - 1);
      row.push_back(std::clamp(base + shift, 1.0, static_cast<double>(s.levelCount)));
    }
    s.profileMeans.push_back(row);
  }
  return s;
}

// Respondents answering the builtin questionnaire, one group per subscale,
// means rising along the continuum. Profiles differ in overall motivation.
inline SyntheticSpec continuum_spec(std::size_t respondents, double noise, std::uint64_t seed,
                                    std::size_t profiles = 3) {
  ScaleMap map = builtin_scale_map();
  SyntheticSpec s;
  s.respondents = respondents;
  s.noise = noise;
  s.seed = seed;
  std::vector<std::string> names;
  for (const auto& sub : map.subscales()) names.push_back(sub.name);
  for (const auto& [item, sub] : map.entries()) {
    s.itemIds.push_back(item);
    s.groupOf.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), sub) - names.begin()));
  }
  // Group order: Amotivation, External (attendance, social), Introjected,
  // Identified, Integrated, Intrinsic.
  const std::vector<double> base = {1.5, 2.5, 2.5, 4.0, 5.5, 6.0, 6.5};
  for (std::size_t p = 0; p < profiles; ++p) {
    double shift = 0.5 * (static_cast<double>(p) - 0.5 * static_cast<double>(profiles - 1));
    std::vector<double> row;
    for (double b : base) row.push_back(std::clamp(b + shift, 1.0, 7.0));
    s.profileMeans.push_back(row);
  }
  return s;
}

}  // namespace ibscale
