#pragma once

// Structured (JSON), DOT and ASCII renderings of solutions, hierarchies and
// linkage trees. Schemas are documented in docs/formats.md.

#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ibscale/baselines.hpp"
#include "ibscale/hierarchy.hpp"
#include "ibscale/ib_solver.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/probability.hpp"
#include "ibscale/scale_analysis.hpp"

namespace ibscale {

using json = nlohmann::ordered_json;

inline json to_json(const Matrix& m) { return m.to_rows(); }

inline Matrix matrix_from_json(const json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

inline json to_json(const SolverConfig& c) {
  json j;
  j["beta"] = c.beta;
  if (c.annealing) {
    j["annealing"] = {{"start", c.annealing->start},
                      {"ratio", c.annealing->ratio},
                      {"stages", c.annealing->stages}};
  } else {
    j["annealing"] = nullptr;
  }
  j["restarts"] = c.restarts;
  j["maxIterations"] = c.maxIterations;
  j["convergenceTol"] = c.convergenceTol;
  j["seed"] = c.seed;
  j["smoothing"] = c.smoothing;
  return j;
}

inline SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  c.beta = j.at("beta").get<double>();
  if (j.contains("annealing") && !j.at("annealing").is_null()) {
    const auto& a = j.at("annealing");
    c.annealing = AnnealingSchedule{a.at("start").get<double>(), a.at("ratio").get<double>(),
                                    a.at("stages").get<std::size_t>()};
  }
  c.restarts = j.at("restarts").get<std::size_t>();
  c.maxIterations = j.at("maxIterations").get<std::size_t>();
  c.convergenceTol = j.at("convergenceTol").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.smoothing = j.at("smoothing").get<double>();
  return c;
}

inline json to_json(const Partition& p) {
  json j;
  j["clusterCount"] = p.cluster_count();
  j["clusterOf"] = p.cluster_of();
  j["members"] = p.members();
  return j;
}

inline Partition partition_from_json(const json& j, const std::vector<std::string>& itemIds) {
  return Partition::from_labels(itemIds, j.at("clusterOf").get<std::vector<std::size_t>>());
}

inline json to_json(const JointDistribution& joint, JointMode mode) {
  json j;
  j["mode"] = to_string(mode);
  j["itemIds"] = joint.item_ids();
  j["categoryCount"] = joint.category_count();
  j["matrix"] = to_json(joint.joint());
  return j;
}

inline JointDistribution joint_from_json(const json& j) {
  return JointDistribution(matrix_from_json(j.at("matrix")),
                           j.at("itemIds").get<std::vector<std::string>>());
}

inline json to_json(const IBSolution& s, const JointDistribution& joint) {
  json j;
  j["itemIds"] = joint.item_ids();
  j["clusterCount"] = s.clusterCount;
  j["beta"] = s.beta;
  j["assignment"] = to_json(s.assignment);
  j["clusterPrior"] = s.clusterPrior;
  j["relevance"] = to_json(s.relevance);
  j["functionalValue"] = s.functionalValue;
  j["infoTX"] = s.infoTX;
  j["infoTY"] = s.infoTY;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["seed"] = s.seed;
  j["emptyClusters"] = s.emptyClusters;
  json trace = json::array();
  for (const auto& tp : s.trace) trace.push_back({tp.beta, tp.functional});
  j["trace"] = trace;
  auto hard = harden(s, joint);
  j["hardened"] = to_json(hard.partition);
  return j;
}

inline json to_json(const PartitionHierarchy& h) {
  json j;
  j["infoXY"] = h.infoXY;
  json levels = json::array();
  for (const auto& l : h.levels) {
    json lj;
    lj["t"] = l.t;
    json pj = to_json(l.partition);
    for (const auto& [key, value] : pj.items()) lj[key] = value;
    lj["infoTX"] = l.scores.infoTX;
    lj["infoTY"] = l.scores.infoTY;
    lj["functionalValue"] = l.scores.functionalValue;
    lj["softFunctional"] = l.softFunctional;
    lj["converged"] = l.converged;
    levels.push_back(lj);
  }
  j["levels"] = levels;
  json links = json::array();
  for (const auto& e : h.links) {
    links.push_back({{"parent", {e.parentT, e.parentCluster}},
                     {"child", {e.childT, e.childCluster}},
                     {"jaccard", e.jaccard}});
  }
  j["links"] = links;
  json nested = json::array();
  auto n = nestedness(h);
  for (std::size_t i = 0; i < n.size(); ++i) nested.push_back({{"from", h.levels[i].t}, {"nested", bool(n[i])}});
  j["nestedness"] = nested;
  return j;
}

inline PartitionHierarchy hierarchy_from_json(const json& j, const std::vector<std::string>& itemIds) {
  PartitionHierarchy h;
  h.infoXY = j.at("infoXY").get<double>();
  for (const auto& lj : j.at("levels")) {
    HierarchyLevel l;
    l.t = lj.at("t").get<std::size_t>();
    l.partition = partition_from_json(lj, itemIds);
    l.scores = {lj.at("infoTX").get<double>(), lj.at("infoTY").get<double>(),
                lj.at("functionalValue").get<double>()};
    l.softFunctional = lj.at("softFunctional").get<double>();
    l.converged = lj.at("converged").get<bool>();
    h.levels.push_back(std::move(l));
  }
  for (const auto& e : j.at("links")) {
    h.links.push_back({e.at("parent")[0].get<std::size_t>(), e.at("parent")[1].get<std::size_t>(),
                       e.at("child")[0].get<std::size_t>(), e.at("child")[1].get<std::size_t>(),
                       e.at("jaccard").get<double>()});
  }
  return h;
}

inline json to_json(const DeviationReport& r) {
  json j;
  json devs = json::array();
  for (const auto& d : r.deviations) {
    devs.push_back({{"item", d.item},
                    {"expected", d.expected},
                    {"cluster", d.cluster},
                    {"clusterPlurality", d.clusterPlurality}});
  }
  j["deviations"] = devs;
  j["mixedClusters"] = r.mixedClusters;
  j["plurality"] = r.plurality;
  return j;
}

inline json to_json(const AlignmentScore& s) {
  return {{"t", s.t},
          {"score", s.score},
          {"sameClusterPairs", s.sameClusterPairs},
          {"alignedPairs", s.alignedPairs},
          {"degenerate", s.degenerate}};
}

inline json to_json(const LinkageTree& tree) {
  json j;
  j["linkage"] = to_string(tree.linkage);
  j["itemIds"] = tree.itemIds;
  json merges = json::array();
  for (const auto& m : tree.merges) {
    merges.push_back({{"a", m.clusterA}, {"b", m.clusterB}, {"distance", m.distance}, {"size", m.size}});
  }
  j["merges"] = merges;
  return j;
}

namespace detail {

inline std::string join_ids(const std::vector<std::string>& ids, const char* sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? sep : "") + ids[i];
  return s;
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

// One rank per level; node "t<T>c<C>" labelled with its items. Cluster
// numbers in labels are 1-based.
inline std::string hierarchy_to_dot(const PartitionHierarchy& h) {
  std::ostringstream os;
  os << "digraph ib_hierarchy {\n";
  os << "  rankdir=TB;\n";
  os << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& l : h.levels) {
    os << "  { rank=same;\n";
    auto members = l.partition.members();
    for (std::size_t c = 0; c < members.size(); ++c) {
      os << "    \"t" << l.t << "c" << c << "\" [label=\"C" << c + 1 << "(t=" << l.t << ")\\n"
         << detail::dot_escape(detail::join_ids(members[c])) << "\"];\n";
    }
    os << "  }\n";
  }
  for (const auto& e : h.links) {
    os << "  \"t" << e.parentT << "c" << e.parentCluster << "\" -> \"t" << e.childT << "c"
       << e.childCluster << "\";\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string hierarchy_to_ascii(const PartitionHierarchy& h) {
  if (h.levels.empty()) return {};
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> children;
  for (const auto& e : h.links) children[{e.parentT, e.parentCluster}].push_back(e.childCluster);
  std::map<std::size_t, std::size_t> indexOfT;
  for (std::size_t i = 0; i < h.levels.size(); ++i) indexOfT[h.levels[i].t] = i;

  std::ostringstream os;
  auto label = [&](std::size_t li, std::size_t c) {
    const auto& l = h.levels[li];
    return "C" + std::to_string(c + 1) + "(t=" + std::to_string(l.t) + ") {" +
           detail::join_ids(l.partition.members()[c], ",") + "}";
  };
  auto visit = [&](auto&& self, std::size_t li, std::size_t c, const std::string& prefix, bool last) -> void {
    if (li == 0) {
      os << label(li, c) << "\n";
    } else {
      os << prefix << (last ? "`-- " : "|-- ") << label(li, c) << "\n";
    }
    if (li + 1 >= h.levels.size()) return;
    auto it = children.find({h.levels[li].t, c});
    if (it == children.end()) return;
    std::string childPrefix = li == 0 ? "" : prefix + (last ? "    " : "|   ");
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      self(self, li + 1, it->second[k], childPrefix, k + 1 == it->second.size());
    }
  };
  for (std::size_t c = 0; c < h.levels.front().partition.cluster_count(); ++c) visit(visit, 0, c, "", true);
  return os.str();
}

inline std::string linkage_to_dot(const LinkageTree& tree) {
  std::ostringstream os;
  const std::size_t n = tree.itemIds.size();
  os << "digraph linkage_tree {\n";
  os << "  rankdir=TB;\n";
  os << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "  \"n" << i << "\" [label=\"" << detail::dot_escape(tree.itemIds[i]) << "\"];\n";
  }
  for (std::size_t s = 0; s < tree.merges.size(); ++s) {
    const auto& m = tree.merges[s];
    os << "  \"n" << n + s << "\" [shape=ellipse, label=\"d=" << m.distance << "\"];\n";
    os << "  \"n" << n + s << "\" -> \"n" << m.clusterA << "\";\n";
    os << "  \"n" << n + s << "\" -> \"n" << m.clusterB << "\";\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string info_plane_csv(const PartitionHierarchy& h) {
  std::ostringstream os;
  os.precision(17);
  os << "t,infoTX,infoTY\n";
  for (const auto& p : info_plane(h)) os << p.t << ',' << p.infoTX << ',' << p.infoTY << '\n';
  return os.str();
}

}  // namespace ibscale
