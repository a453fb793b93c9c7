#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace ibscale;
using ibscale::testing::naive_ari;
using ibscale::testing::naive_mi;

namespace {

const std::string kCli = IBSCALE_CLI_PATH;
const std::string kResources = IBSCALE_RESOURCE_DIR;

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ibscale_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    auto out = dir_ / "stdout.txt";
    auto err = dir_ / "stderr.txt";
    std::string cmd = "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

// The machine-readable record is the stderr line holding an "error" object.
json error_record(const RunResult& r) {
  std::istringstream lines(r.err);
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("{\"error\"", 0) == 0) return json::parse(line);
  return json();
}

// Cluster label per item read straight from a "members" array.
std::vector<std::size_t> labels_from_members(const json& members, const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> at;
  for (std::size_t c = 0; c < members.size(); ++c)
    for (const auto& id : members[c]) at[id.get<std::string>()] = c;
  std::vector<std::size_t> out;
  for (const auto& id : ids) out.push_back(at.at(id));
  return out;
}

}  // namespace

TEST_F(CliTest, IngestSmallFile) {
  spit(path("a.csv"), "a,b\n1,2\n3,4\n5,6\n");
  auto r = run("ingest --json " + path("a.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["items"], 2);
  EXPECT_EQ(j["respondents"], 3);
  EXPECT_EQ(j["droppedRows"], 0);
  auto text = run("ingest " + path("a.csv"));
  EXPECT_NE(text.out.find("dropped rows: 0"), std::string::npos);
}

TEST_F(CliTest, IngestBlankCellDropsOneRow) {
  spit(path("a.csv"), "a,b\n1,2\n,4\n5,6\n");
  auto r = run("ingest --json " + path("a.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["droppedRows"], 1);
  EXPECT_EQ(j["respondents"], 2);
}

TEST_F(CliTest, IngestDemoHistogramTotals) {
  auto r = run("ingest --json " + kResources + "/demo_continuum.csv");
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(r.out);
  std::size_t total = 0;
  for (const auto& [item, hist] : j["histograms"].items())
    for (const auto& c : hist) total += c.get<std::size_t>();
  EXPECT_EQ(total, j["respondents"].get<std::size_t>() * j["items"].get<std::size_t>());
  EXPECT_EQ(j["items"], 29);
}

TEST_F(CliTest, IngestErrorsAreMachineReadable) {
  spit(path("bad.csv"), "a,b\n1,2\n1\n");
  auto r = run("ingest " + path("bad.csv"));
  EXPECT_NE(r.status, 0);
  auto e = error_record(r);
  EXPECT_EQ(e["error"]["code"], "ParseError");
  EXPECT_NE(e["error"]["message"].get<std::string>().find("3"), std::string::npos);

  spit(path("level.csv"), "a,b\n1,2\n1,9\n");
  r = run("ingest " + path("level.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(error_record(r)["error"]["code"], "InvalidLevel");

  r = run("ingest " + path("missing.csv"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(error_record(r)["error"]["code"], "IoError");

  r = run("sweep --no-such-flag");
  EXPECT_EQ(r.status, 64);
  EXPECT_EQ(error_record(r)["error"]["code"], "UsageError");
}

TEST_F(CliTest, SweepSingleLevelBundle) {
  auto r = run("sweep " + kResources + "/demo_three_groups.csv --t-min 1 --t-max 1 --restarts 3 --seed 1 --out " +
               path("b"));
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"hierarchy.json", "dendrogram.dot", "tree.txt", "info_plane.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "b" / f)) << f;
  EXPECT_FALSE(fs::exists(dir_ / "b" / "deviations.json"));
  auto h = json::parse(slurp(dir_ / "b" / "hierarchy.json"));
  ASSERT_EQ(h["hierarchy"]["levels"].size(), 1u);
  EXPECT_EQ(h["hierarchy"]["levels"][0]["clusterCount"], 1);
  std::istringstream csv(slurp(dir_ / "b" / "info_plane.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "t,infoTX,infoTY");
  double t = 0, tx = 1, ty = 1;
  char c1 = 0, c2 = 0;
  std::istringstream(row) >> t >> c1 >> tx >> c2 >> ty;
  EXPECT_EQ(t, 1.0);
  EXPECT_NEAR(tx, 0.0, 1e-12);
  EXPECT_NEAR(ty, 0.0, 1e-12);
}

TEST_F(CliTest, SweepRecoversPlantedGroupsAndRecordsIt) {
  const std::string planted = kResources + "/demo_three_groups.planted.json";
  auto r = run("sweep " + kResources + "/demo_three_groups.csv --t-min 2 --t-max 4 --restarts 30 --seed 5 " +
               "--planted " + planted + " --out " + path("b"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto rec = json::parse(slurp(dir_ / "b" / "recovery.json"));
  ASSERT_EQ(rec["levels"].size(), 3u);
  EXPECT_EQ(rec["levels"][1]["t"], 3);
  EXPECT_EQ(rec["levels"][1]["ariVsPlanted"].get<double>(), 1.0);

  // Independent pair-counting check from the emitted memberships.
  auto h = json::parse(slurp(dir_ / "b" / "hierarchy.json"));
  auto p = json::parse(slurp(planted));
  auto ids = h["joint"]["itemIds"].get<std::vector<std::string>>();
  auto truth = labels_from_members(p["planted"]["members"], ids);
  for (std::size_t i = 0; i < 3; ++i) {
    auto level = labels_from_members(h["hierarchy"]["levels"][i]["members"], ids);
    EXPECT_NEAR(rec["levels"][i]["ariVsPlanted"].get<double>(), naive_ari(level, truth), 1e-12);
  }
}

TEST_F(CliTest, ManifestRerunIsByteIdentical) {
  // No --seed: the drawn seed is stored in the manifest and reused.
  auto r = run("sweep " + kResources + "/demo_continuum.csv --t-min 1 --t-max 4 --restarts 6 --scale-map builtin " +
               "--out " + path("b"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.err.find("seed: "), std::string::npos);
  const std::vector<std::string> files{"hierarchy.json", "deviations.json", "dendrogram.dot", "tree.txt",
                                       "info_plane.csv", "manifest.json"};
  std::map<std::string, std::string> first;
  for (const auto& f : files) first[f] = slurp(dir_ / "b" / f);
  fs::copy_file(dir_ / "b" / "manifest.json", dir_ / "manifest.json");
  for (const char* threads : {"1", "4"}) {
    fs::remove_all(dir_ / "b");
    r = run("sweep --manifest " + path("manifest.json") + " --threads " + threads);
    ASSERT_EQ(r.status, 0) << r.err;
    for (const auto& f : files) EXPECT_EQ(slurp(dir_ / "b" / f), first[f]) << f << " threads " << threads;
  }
}

TEST_F(CliTest, ManifestRejectsChangedInput) {
  spit(path("a.csv"), "a,b,c\n1,2,3\n3,4,5\n5,6,7\n");
  ASSERT_EQ(run("solve " + path("a.csv") + " --t 2 --restarts 2 --seed 3 --out " + path("s")).status, 0);
  spit(path("a.csv"), "a,b,c\n1,2,3\n3,4,5\n5,6,6\n");
  auto r = run("solve --manifest " + path("s/manifest.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(error_record(r)["error"]["code"], "InvalidConfig");
}

TEST_F(CliTest, CompareNoiselessDataAgreesEverywhere) {
  ASSERT_EQ(run("synth --preset groups --noise 0 --seed 3 --out " + path("d")).status, 0);
  auto r = run("compare " + path("d/responses.csv") + " --k 3 --restarts 20 --seed 2 --out " + path("c"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(slurp(dir_ / "c" / "compare.json"));
  for (const auto& row : j["ari"])
    for (const auto& v : row) EXPECT_EQ(v.get<double>(), 1.0);
  EXPECT_TRUE(j["warnings"].empty());
  EXPECT_NE(r.out.find("ARI matrix"), std::string::npos);
}

TEST_F(CliTest, CompareSingleClusterWarns) {
  auto r = run("compare " + kResources + "/demo_three_groups.csv --k 1 --restarts 2 --seed 2 --out " + path("c"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(slurp(dir_ / "c" / "compare.json"));
  for (const auto& row : j["ari"])
    for (const auto& v : row) EXPECT_EQ(v.get<double>(), 1.0);
  EXPECT_EQ(j["warnings"].size(), 3u);
  EXPECT_NE(r.err.find("warning: "), std::string::npos);
}

TEST_F(CliTest, CompareMatrixMatchesRecomputationFromMemberships) {
  ASSERT_EQ(run("synth --preset groups --noise 2.5 --seed 9 --out " + path("d")).status, 0);
  auto r = run("compare " + path("d/responses.csv") + " --k 4 --restarts 10 --seed 4 --linkage complete --out " +
               path("c"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto j = json::parse(slurp(dir_ / "c" / "compare.json"));
  auto ids = json::parse(slurp(dir_ / "d" / "planted.json"))["itemIds"].get<std::vector<std::string>>();
  auto methods = j["methods"].get<std::vector<std::string>>();
  ASSERT_EQ(methods.size(), 3u);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      auto la = labels_from_members(j["memberships"][methods[a]]["members"], ids);
      auto lb = labels_from_members(j["memberships"][methods[b]]["members"], ids);
      EXPECT_NEAR(j["ari"][a][b].get<double>(), naive_ari(la, lb), 1e-12) << methods[a] << "/" << methods[b];
    }
  }
  EXPECT_TRUE(fs::exists(dir_ / "c" / "linkage.dot"));
}

TEST_F(CliTest, ReportRecomputesFromHierarchyAlone) {
  ASSERT_EQ(run("sweep " + kResources + "/demo_three_groups.csv --t-min 1 --t-max 5 --restarts 5 --seed 8 --out " +
                path("b"))
                .status,
            0);
  auto hfile = dir_ / "b" / "hierarchy.json";
  auto r = run("report --json " + hfile.string());
  ASSERT_EQ(r.status, 0) << r.err;
  auto rep = json::parse(r.out);
  EXPECT_TRUE(rep["consistent"].get<bool>());

  // Oracle: rebuild p(t,x) and p(t,y) from the stored joint and memberships.
  auto h = json::parse(slurp(hfile));
  auto ids = h["joint"]["itemIds"].get<std::vector<std::string>>();
  auto pxy = h["joint"]["matrix"].get<std::vector<std::vector<double>>>();
  EXPECT_NEAR(rep["infoXY"].get<double>(), naive_mi(pxy), 1e-12);
  for (std::size_t i = 0; i < h["hierarchy"]["levels"].size(); ++i) {
    const auto& level = h["hierarchy"]["levels"][i];
    auto lab = labels_from_members(level["members"], ids);
    std::size_t t = level["clusterCount"].get<std::size_t>();
    std::vector<std::vector<double>> ptx(t, std::vector<double>(ids.size(), 0.0));
    std::vector<std::vector<double>> pty(t, std::vector<double>(pxy[0].size(), 0.0));
    for (std::size_t x = 0; x < ids.size(); ++x) {
      for (std::size_t y = 0; y < pxy[x].size(); ++y) {
        ptx[lab[x]][x] += pxy[x][y];
        pty[lab[x]][y] += pxy[x][y];
      }
    }
    EXPECT_NEAR(rep["levels"][i]["infoTX"].get<double>(), naive_mi(ptx), 1e-12);
    EXPECT_NEAR(rep["levels"][i]["infoTY"].get<double>(), naive_mi(pty), 1e-12);
    EXPECT_NEAR(level["infoTY"].get<double>(), naive_mi(pty), 1e-12);
  }

  // A tampered value is caught and reported with a nonzero exit.
  h["hierarchy"]["levels"][2]["infoTY"] = 0.123;
  spit(path("tampered.json"), h.dump());
  r = run("report " + path("tampered.json"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("[MISMATCH]"), std::string::npos);
  EXPECT_EQ(error_record(r)["error"]["code"], "DomainError");
}

TEST_F(CliTest, SweepWithScaleMapWritesDeviations) {
  auto r = run("sweep " + kResources + "/demo_continuum.csv --t-min 2 --t-max 3 --restarts 10 --seed 4 " +
               "--scale-map " + kResources + "/builtin_scale_map.csv --out " + path("b"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto d = json::parse(slurp(dir_ / "b" / "deviations.json"));
  ASSERT_EQ(d["levels"].size(), 2u);
  EXPECT_EQ(d["levels"][0]["t"], 2);
  EXPECT_TRUE(d["levels"][0]["alignment"].contains("score"));
}

TEST_F(CliTest, ScaleMapMissingItemFailsWithoutBundle) {
  auto r = run("sweep " + kResources + "/demo_three_groups.csv --t-max 2 --restarts 2 --seed 1 --scale-map builtin " +
               "--out " + path("b"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(error_record(r)["error"]["code"], "DomainError");
  EXPECT_FALSE(fs::exists(dir_ / "b" / "hierarchy.json"));
}

TEST_F(CliTest, SynthIsSeedDeterministic) {
  ASSERT_EQ(run("synth --preset continuum --seed 12 --out " + path("x")).status, 0);
  ASSERT_EQ(run("synth --preset continuum --seed 12 --out " + path("y")).status, 0);
  EXPECT_EQ(slurp(dir_ / "x" / "responses.csv"), slurp(dir_ / "y" / "responses.csv"));
  EXPECT_EQ(slurp(dir_ / "x" / "planted.json"), slurp(dir_ / "y" / "planted.json"));
  auto r = run("synth --preset nope --out " + path("z"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(error_record(r)["error"]["code"], "InvalidConfig");
}
