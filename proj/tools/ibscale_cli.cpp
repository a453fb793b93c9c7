// ibscale: cluster questionnaire items with the Information Bottleneck method.
//
// Commands: ingest, solve, sweep, compare, synth, report. Structured outputs
// contain no timestamps or host data, so a manifest re-run reproduces them
// byte for byte.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ibscale/ibscale.hpp"

namespace fs = std::filesystem;
using namespace ibscale;

namespace {

struct CommonOptions {
  std::string input;
  std::string mode = "answer";
  std::string delimiter = ",";
  int levels = 7;
  double beta = 50.0;
  std::string anneal;
  std::size_t restarts = 100;
  std::size_t maxIterations = 500;
  double tol = 1e-8;
  std::optional<std::uint64_t> seed;
  double smoothing = 0.0;
  std::size_t threads = 1;
  std::string out;
  std::string manifest;
};

void add_input_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("input", o.input, "Response CSV (header = item labels)");
  cmd->add_option("--delimiter", o.delimiter, "CSV delimiter")->capture_default_str();
  cmd->add_option("--levels", o.levels, "Number of answer levels L")->capture_default_str();
  cmd->add_option("--mode", o.mode, "Joint mode: answer|respondent")->capture_default_str();
  cmd->add_option("--smoothing", o.smoothing, "Additive smoothing on joint cells")->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--beta", o.beta, "Trade-off parameter beta")->capture_default_str();
  cmd->add_option("--anneal", o.anneal, "Geometric beta schedule start:ratio:stages");
  cmd->add_option("--restarts", o.restarts, "Random restarts per cluster count")->capture_default_str();
  cmd->add_option("--max-iter", o.maxIterations, "Iteration cap per restart")->capture_default_str();
  cmd->add_option("--tol", o.tol, "Convergence tolerance (largest entry change per sweep)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed (random and recorded when omitted)");
  cmd->add_option("--threads", o.threads, "Worker threads for restarts")->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--manifest", o.manifest, "Re-run from a manifest.json");
}

std::optional<AnnealingSchedule> parse_anneal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  AnnealingSchedule a;
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  if (!(is >> a.start >> c1 >> a.ratio >> c2 >> a.stages) || c1 != ':' || c2 != ':') {
    fail(ErrorCode::InvalidConfig, "--anneal expects start:ratio:stages, got '" + s + "'");
  }
  return a;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << "\n";
  return s;
}

RunManifest manifest_from_options(const std::string& command, const CommonOptions& o) {
  if (!o.manifest.empty()) {
    auto m = manifest_from_json(json::parse(read_file(o.manifest)));
    if (m.command != command) {
      fail(ErrorCode::InvalidConfig, "manifest is for '" + m.command + "', not '" + command + "'");
    }
    return m;
  }
  if (o.input.empty()) fail(ErrorCode::InvalidConfig, "an input CSV is required");
  if (o.delimiter.size() != 1) fail(ErrorCode::InvalidConfig, "delimiter must be one character");
  RunManifest m;
  m.command = command;
  m.inputPath = o.input;
  m.mode = parse_joint_mode(o.mode);
  m.delimiter = o.delimiter[0];
  m.levelCount = o.levels;
  m.solver.beta = o.beta;
  m.solver.annealing = parse_anneal(o.anneal);
  m.solver.restarts = o.restarts;
  m.solver.maxIterations = o.maxIterations;
  m.solver.convergenceTol = o.tol;
  m.solver.seed = resolve_seed(o.seed);
  m.solver.smoothing = o.smoothing;
  m.solver.validate();
  m.outputDir = o.out;
  return m;
}

struct LoadedInput {
  IngestResult ingest;
  JointDistribution joint;
};

LoadedInput load_input(RunManifest& m) {
  std::string bytes = read_file(m.inputPath);
  std::string hash = content_hash(bytes);
  if (!m.inputHash.empty() && m.inputHash != hash) {
    fail(ErrorCode::InvalidConfig, "input '" + m.inputPath + "' changed since the manifest was written");
  }
  m.inputHash = hash;
  std::istringstream is(bytes);
  LoadedInput in{read_responses_csv(is, {m.delimiter, m.levelCount}), {}};
  in.joint = estimate_joint(in.ingest.responses, m.mode, m.solver.smoothing);
  return in;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path prepare_out(const RunManifest& m) {
  if (m.outputDir.empty()) fail(ErrorCode::InvalidConfig, "--out DIR is required");
  fs::path dir(m.outputDir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

std::optional<ScaleMap> load_scale_map(const std::optional<std::string>& spec) {
  if (!spec) return std::nullopt;
  if (*spec == "builtin") return builtin_scale_map();
  return read_scale_map_csv(*spec);
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const CommonOptions& o, bool asJson) {
  if (o.input.empty()) fail(ErrorCode::InvalidConfig, "an input CSV is required");
  if (o.delimiter.size() != 1) fail(ErrorCode::InvalidConfig, "delimiter must be one character");
  auto in = read_responses_csv(o.input, {o.delimiter[0], o.levels});
  const auto& r = in.responses;
  json j;
  j["items"] = r.items();
  j["respondents"] = r.respondents();
  j["droppedRows"] = in.droppedRows;
  j["droppedLines"] = in.droppedLines;
  json hist = json::object();
  for (std::size_t i = 0; i < r.items(); ++i) {
    std::vector<std::size_t> h(static_cast<std::size_t>(r.level_count()), 0);
    for (std::size_t p = 0; p < r.respondents(); ++p) ++h[static_cast<std::size_t>(r(p, i) - 1)];
    hist[r.item_ids()[i]] = h;
  }
  j["histograms"] = hist;
  if (asJson) {
    std::cout << dump(j);
    return 0;
  }
  std::cout << "items: " << r.items() << "\n"
            << "respondents: " << r.respondents() << "\n"
            << "dropped rows: " << in.droppedRows << "\n"
            << "answer histograms (levels 1.." << r.level_count() << "):\n";
  for (std::size_t i = 0; i < r.items(); ++i) {
    std::cout << "  " << r.item_ids()[i] << ":";
    for (auto c : hist[r.item_ids()[i]]) std::cout << ' ' << c.get<std::size_t>();
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const CommonOptions& o, std::size_t t) {
  RunManifest m = manifest_from_options("solve", o);
  if (o.manifest.empty()) m.tMin = m.tMax = t;
  m.solver.threads = o.threads;
  auto in = load_input(m);
  IBSolution sol = ib_solve(in.joint, m.tMin, m.solver);
  json j;
  j["manifest"] = to_json(m);
  j["solution"] = to_json(sol, in.joint);
  j["config"] = to_json(m.solver);
  if (m.outputDir.empty()) {
    std::cout << dump(j);
    return 0;
  }
  auto dir = prepare_out(m);
  write_text(dir / "solution.json", dump(j));
  write_text(dir / "manifest.json", dump(to_json(m)));
  std::cout << "wrote " << (dir / "solution.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const CommonOptions& o, std::size_t tMin, std::size_t tMax, bool warm,
              const std::string& scaleMap, const std::string& planted) {
  RunManifest m = manifest_from_options("sweep", o);
  if (o.manifest.empty()) {
    m.tMin = tMin;
    m.tMax = tMax;
    m.splitWarmStart = warm;
    if (!scaleMap.empty()) m.scaleMap = scaleMap;
    if (!planted.empty()) m.planted = planted;
  }
  m.solver.threads = o.threads;
  auto in = load_input(m);
  if (m.tMax == 0) m.tMax = in.joint.item_count();
  auto map = load_scale_map(m.scaleMap);
  if (map) {
    for (const auto& id : in.joint.item_ids())
      if (!map->contains(id)) fail(ErrorCode::DomainError, "item '" + id + "' is not in the scale map");
  }
  std::optional<Partition> truth;
  if (m.planted) {
    json pj = json::parse(read_file(*m.planted));
    truth = partition_from_json(pj.at("planted"), in.joint.item_ids());
  }
  auto h = sweep(in.joint, m.tMin, m.tMax, m.solver, {m.splitWarmStart});
  auto dir = prepare_out(m);

  json hj;
  hj["manifest"] = to_json(m);
  hj["joint"] = to_json(in.joint, m.mode);
  hj["hierarchy"] = to_json(h);
  write_text(dir / "hierarchy.json", dump(hj));
  write_text(dir / "dendrogram.dot", hierarchy_to_dot(h));
  write_text(dir / "tree.txt", hierarchy_to_ascii(h));
  write_text(dir / "info_plane.csv", info_plane_csv(h));
  if (map) {
    json dj;
    dj["manifest"] = to_json(m);
    json levels = json::array();
    auto align = continuum_alignment(h, *map);
    for (std::size_t i = 0; i < h.levels.size(); ++i) {
      json lj = to_json(deviation_report(h.levels[i].partition, *map));
      lj = json{{"t", h.levels[i].t}, {"alignment", to_json(align[i])}, {"report", lj}};
      levels.push_back(lj);
    }
    dj["levels"] = levels;
    write_text(dir / "deviations.json", dump(dj));
  }
  if (truth) {
    json rj;
    rj["manifest"] = to_json(m);
    json levels = json::array();
    for (const auto& l : h.levels)
      levels.push_back({{"t", l.t}, {"clusterCount", l.partition.cluster_count()},
                        {"ariVsPlanted", adjusted_rand_index(l.partition, *truth)}});
    rj["plantedClusterCount"] = truth->cluster_count();
    rj["levels"] = levels;
    write_text(dir / "recovery.json", dump(rj));
  }
  write_text(dir / "manifest.json", dump(to_json(m)));
  std::cout << hierarchy_to_ascii(h);
  std::cout << "wrote bundle to " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const CommonOptions& o, std::size_t k, const std::string& linkage,
                std::size_t kmRestarts) {
  RunManifest m = manifest_from_options("compare", o);
  if (o.manifest.empty()) {
    m.k = k;
    m.tMin = m.tMax = k;
    m.baselines = true;
    m.linkage = parse_linkage(linkage);
    m.kmeansRestarts = kmRestarts;
  }
  m.solver.threads = o.threads;
  auto in = load_input(m);
  const auto& r = in.ingest.responses;
  if (m.k < 1 || m.k > r.items()) fail(ErrorCode::InvalidClusterCount, "k outside 1..items");

  auto ib = harden(ib_solve(in.joint, m.k, m.solver), in.joint).partition;
  auto vectors = ItemVectors::from_responses(r);
  auto km = kmeans(vectors, m.k, m.solver.seed, m.kmeansRestarts).partition;
  auto tree = agglomerative(vectors, m.linkage);
  auto ag = cut_tree(tree, m.k);

  const std::vector<std::pair<std::string, const Partition*>> methods = {
      {"ib", &ib}, {"kmeans", &km}, {"agglomerative", &ag}};
  json j;
  j["manifest"] = to_json(m);
  json memberships = json::object();
  for (const auto& [name, p] : methods) memberships[name] = to_json(*p);
  j["memberships"] = memberships;
  json ari = json::array();
  json warnings = json::array();
  for (const auto& [na, pa] : methods) {
    json row = json::array();
    for (const auto& [nb, pb] : methods) {
      row.push_back(adjusted_rand_index(*pa, *pb));
      if (na < nb && ari_degenerate(*pa, *pb)) {
        warnings.push_back("ARI(" + na + ", " + nb + ") undefined (both partitions trivial); reported as 1.0");
      }
    }
    ari.push_back(row);
  }
  j["methods"] = {"ib", "kmeans", "agglomerative"};
  j["ari"] = ari;
  j["warnings"] = warnings;
  j["linkageTree"] = to_json(tree);

  std::cout << "ARI matrix (k = " << m.k << ")\n";
  std::cout << std::setw(15) << "";
  for (const auto& [name, p] : methods) std::cout << std::setw(15) << name;
  std::cout << "\n";
  for (std::size_t a = 0; a < methods.size(); ++a) {
    std::cout << std::setw(15) << methods[a].first;
    for (std::size_t b = 0; b < methods.size(); ++b)
      std::cout << std::setw(15) << std::fixed << std::setprecision(4) << ari[a][b].get<double>();
    std::cout << "\n";
  }
  for (const auto& [name, p] : methods) {
    std::cout << name << ":";
    for (const auto& members : p->members()) {
      std::cout << " {";
      for (std::size_t i = 0; i < members.size(); ++i) std::cout << (i ? "," : "") << members[i];
      std::cout << "}";
    }
    std::cout << "\n";
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";

  if (!m.outputDir.empty()) {
    auto dir = prepare_out(m);
    write_text(dir / "compare.json", dump(j));
    write_text(dir / "linkage.dot", linkage_to_dot(tree));
    write_text(dir / "manifest.json", dump(to_json(m)));
  }
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string preset = "groups";
  std::size_t respondents = 300;
  std::size_t items = 12;
  std::size_t groups = 3;
  std::size_t profiles = 3;
  double low = 2.0;
  double high = 6.0;
  double shift = 0.5;
  double noise = 1.0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_synth(const SynthOptions& o) {
  std::uint64_t seed = resolve_seed(o.seed);
  SyntheticSpec spec;
  if (o.preset == "groups") {
    spec = spaced_groups_spec(o.items, o.groups, o.profiles, o.low, o.high, o.shift, o.noise,
                              o.respondents, seed);
  } else if (o.preset == "continuum") {
    spec = continuum_spec(o.respondents, o.noise, seed, o.profiles);
  } else {
    fail(ErrorCode::InvalidConfig, "unknown preset '" + o.preset + "' (groups|continuum)");
  }
  auto data = generate_synthetic(spec);
  if (o.out.empty()) fail(ErrorCode::InvalidConfig, "--out DIR is required");
  fs::create_directories(o.out);
  std::ostringstream csv;
  write_responses_csv(csv, data.responses);
  write_text(fs::path(o.out) / "responses.csv", csv.str());
  json pj;
  pj["preset"] = o.preset;
  pj["seed"] = seed;
  pj["respondents"] = spec.respondents;
  pj["noise"] = spec.noise;
  pj["profileMeans"] = spec.profileMeans;
  pj["itemIds"] = spec.itemIds;
  pj["planted"] = to_json(data.planted);
  write_text(fs::path(o.out) / "planted.json", dump(pj));
  std::cout << "wrote " << data.responses.respondents() << " respondents x " << data.responses.items()
            << " items to " << (fs::path(o.out) / "responses.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

// Recomputes every level's information terms from hierarchy.json alone and
// reports scale deviations when a map is given.
int cmd_report(const std::string& hierarchyPath, const std::string& scaleMap, bool asJson) {
  json hj = json::parse(read_file(hierarchyPath));
  auto joint = joint_from_json(hj.at("joint"));
  auto h = hierarchy_from_json(hj.at("hierarchy"), joint.item_ids());
  std::optional<ScaleMap> map = load_scale_map(scaleMap.empty() ? std::optional<std::string>{}
                                                                 : std::optional<std::string>{scaleMap});
  json out;
  out["infoXY"] = mutual_information(joint);
  json levels = json::array();
  bool consistent = std::abs(mutual_information(joint) - h.infoXY) <= 1e-12;
  for (const auto& l : h.levels) {
    auto terms = partition_information(joint, l.partition);
    bool ok = std::abs(terms.infoTX - l.scores.infoTX) <= 1e-12 &&
              std::abs(terms.infoTY - l.scores.infoTY) <= 1e-12;
    consistent = consistent && ok;
    json lj = {{"t", l.t},
               {"clusterCount", l.partition.cluster_count()},
               {"infoTX", terms.infoTX},
               {"infoTY", terms.infoTY},
               {"matchesStored", ok}};
    if (map) {
      lj["alignment"] = to_json(partition_alignment(l.partition, *map));
      lj["deviations"] = to_json(deviation_report(l.partition, *map));
    }
    levels.push_back(lj);
  }
  out["levels"] = levels;
  out["consistent"] = consistent;
  if (asJson) {
    std::cout << dump(out);
  } else {
    std::cout << "I(X;Y) = " << out["infoXY"].get<double>() << "\n";
    for (const auto& lj : levels) {
      std::cout << "t=" << lj["t"].get<std::size_t>() << "  I(T;X)=" << lj["infoTX"].get<double>()
                << "  I(T;Y)=" << lj["infoTY"].get<double>()
                << (lj["matchesStored"].get<bool>() ? "" : "  [MISMATCH]");
      if (map) {
        std::cout << "  alignment=" << lj["alignment"]["score"].get<double>() << "  deviating:";
        for (const auto& d : lj["deviations"]["deviations"]) std::cout << ' ' << d["item"].get<std::string>();
      }
      std::cout << "\n";
    }
  }
  if (!consistent) fail(ErrorCode::DomainError, "hierarchy values do not match recomputation");
  return 0;
}

void emit_error(const std::string& code, const std::string& message) {
  json e = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << e.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information Bottleneck clustering of questionnaire items"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  bool ingestJson = false;
  auto* ingest = app.add_subcommand("ingest", "Summarize a response CSV");
  add_input_flags(ingest, common);
  ingest->add_flag("--json", ingestJson, "Print the summary as JSON");

  std::size_t solveT = 2;
  auto* solve = app.add_subcommand("solve", "Solve one cluster count");
  add_input_flags(solve, common);
  add_solver_flags(solve, common);
  solve->add_option("--t", solveT, "Cluster count")->capture_default_str();

  std::size_t tMin = 1, tMax = 0;
  bool warm = false;
  std::string scaleMap, planted;
  auto* sweepCmd = app.add_subcommand("sweep", "Solve a range of cluster counts and link them");
  add_input_flags(sweepCmd, common);
  add_solver_flags(sweepCmd, common);
  sweepCmd->add_option("--t-min", tMin, "Smallest cluster count")->capture_default_str();
  sweepCmd->add_option("--t-max", tMax, "Largest cluster count (default: item count)");
  sweepCmd->add_flag("--warm-start", warm, "Seed level t+1 with a split of level t");
  sweepCmd->add_option("--scale-map", scaleMap, "Scale map CSV, or 'builtin'");
  sweepCmd->add_option("--planted", planted, "planted.json from synth; records ARI per level");

  std::size_t k = 2, kmRestarts = 20;
  std::string linkage = "average";
  auto* compare = app.add_subcommand("compare", "Compare IB with k-means and agglomerative clustering");
  add_input_flags(compare, common);
  add_solver_flags(compare, common);
  compare->add_option("--k", k, "Cluster count")->capture_default_str();
  compare->add_option("--linkage", linkage, "single|complete|average")->capture_default_str();
  compare->add_option("--kmeans-restarts", kmRestarts, "k-means restarts")->capture_default_str();

  SynthOptions synthOpt;
  auto* synth = app.add_subcommand("synth", "Generate synthetic responses with planted item groups");
  synth->add_option("--preset", synthOpt.preset, "groups|continuum")->capture_default_str();
  synth->add_option("--respondents", synthOpt.respondents)->capture_default_str();
  synth->add_option("--items", synthOpt.items)->capture_default_str();
  synth->add_option("--groups", synthOpt.groups)->capture_default_str();
  synth->add_option("--profiles", synthOpt.profiles)->capture_default_str();
  synth->add_option("--low", synthOpt.low, "Lowest group mean")->capture_default_str();
  synth->add_option("--high", synthOpt.high, "Highest group mean")->capture_default_str();
  synth->add_option("--profile-shift", synthOpt.shift)->capture_default_str();
  synth->add_option("--noise", synthOpt.noise)->capture_default_str();
  synth->add_option("--seed", synthOpt.seed);
  synth->add_option("--out", synthOpt.out, "Output directory")->required();

  std::string hierarchyPath, reportMap;
  bool reportJson = false;
  auto* report = app.add_subcommand("report", "Recompute and audit a sweep bundle");
  report->add_option("hierarchy", hierarchyPath, "hierarchy.json from a sweep")->required();
  report->add_option("--scale-map", reportMap, "Scale map CSV, or 'builtin'");
  report->add_flag("--json", reportJson);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("UsageError", e.what());
    return 64;
  }

  try {
    if (*ingest) return cmd_ingest(common, ingestJson);
    if (*solve) return cmd_solve(common, solveT);
    if (*sweepCmd) return cmd_sweep(common, tMin, tMax, warm, scaleMap, planted);
    if (*compare) return cmd_compare(common, k, linkage, kmRestarts);
    if (*synth) return cmd_synth(synthOpt);
    if (*report) return cmd_report(hierarchyPath, reportMap, reportJson);
  } catch (const Error& e) {
    emit_error(std::string(to_string(e.code())), e.what());
    return 2;
  } catch (const json::exception& e) {
    emit_error("ParseError", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what());
    return 3;
  }
  return 1;
}
