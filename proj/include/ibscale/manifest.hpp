#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include "ibscale/emit.hpp"
#include "ibscale/error.hpp"

namespace ibscale {

inline constexpr const char* kToolVersion = "0.3.0";

// FNV-1a over the raw bytes, rendered as 16 hex digits.
inline std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Everything needed to reproduce a run's structured outputs byte for byte.
struct RunManifest {
  std::string command;
  std::string inputPath;
  std::string inputHash;
  JointMode mode = JointMode::AnswerLevel;
  char delimiter = ',';
  int levelCount = 7;
  SolverConfig solver;
  std::size_t tMin = 1;
  std::size_t tMax = 1;
  bool splitWarmStart = false;
  std::optional<std::string> scaleMap;  // path, or "builtin"
  std::optional<std::string> planted;   // planted.json from synth, sweep only
  std::size_t k = 0;                    // compare only
  Linkage linkage = Linkage::Average;
  std::size_t kmeansRestarts = 20;
  bool baselines = false;
  std::string outputDir;
  std::string toolVersion = kToolVersion;
};

inline json to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["inputPath"] = m.inputPath;
  j["inputHash"] = m.inputHash;
  j["mode"] = to_string(m.mode);
  j["delimiter"] = std::string(1, m.delimiter);
  j["levelCount"] = m.levelCount;
  j["solver"] = to_json(m.solver);
  j["tMin"] = m.tMin;
  j["tMax"] = m.tMax;
  j["splitWarmStart"] = m.splitWarmStart;
  j["scaleMap"] = m.scaleMap ? json(*m.scaleMap) : json(nullptr);
  j["planted"] = m.planted ? json(*m.planted) : json(nullptr);
  j["baselines"] = {{"enabled", m.baselines},
                    {"k", m.k},
                    {"linkage", to_string(m.linkage)},
                    {"kmeansRestarts", m.kmeansRestarts}};
  j["outputDir"] = m.outputDir;
  j["toolVersion"] = m.toolVersion;
  return j;
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.inputPath = j.at("inputPath").get<std::string>();
    m.inputHash = j.at("inputHash").get<std::string>();
    m.mode = parse_joint_mode(j.at("mode").get<std::string>());
    auto d = j.at("delimiter").get<std::string>();
    m.delimiter = d.empty() ? ',' : d[0];
    m.levelCount = j.at("levelCount").get<int>();
    m.solver = solver_config_from_json(j.at("solver"));
    m.tMin = j.at("tMin").get<std::size_t>();
    m.tMax = j.at("tMax").get<std::size_t>();
    m.splitWarmStart = j.at("splitWarmStart").get<bool>();
    if (!j.at("scaleMap").is_null()) m.scaleMap = j.at("scaleMap").get<std::string>();
    if (j.contains("planted") && !j["planted"].is_null()) m.planted = j["planted"].get<std::string>();
    const auto& b = j.at("baselines");
    m.baselines = b.at("enabled").get<bool>();
    m.k = b.at("k").get<std::size_t>();
    m.linkage = parse_linkage(b.at("linkage").get<std::string>());
    m.kmeansRestarts = b.at("kmeansRestarts").get<std::size_t>();
    m.outputDir = j.at("outputDir").get<std::string>();
    m.toolVersion = j.at("toolVersion").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace ibscale
