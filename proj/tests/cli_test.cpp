#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "tvnet_cli_test";

struct Run {
  int status = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run tvnet(const std::string& args) {
  const auto err = kRoot / "stderr.txt";
  const std::string cmd = std::string(TVNET_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(err)};
}

fs::path write(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const auto p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

std::string white_noise_csv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::ostringstream os;
  os.precision(17);
  os << "a,b,c\n";
  for (std::size_t j = 0; j < n; ++j) os << normal(rng) << ',' << normal(rng) << ',' << normal(rng) << '\n';
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { fs::create_directories(kRoot); }
};

}  // namespace

TEST_F(Cli, MissingInputIsAConfigError) {
  const auto cfg = write("missing.json", R"({"input": "no_such_file.csv"})");
  const auto r = tvnet("estimate --config " + cfg.string() + " --out " + (kRoot / "o1").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("no_such_file.csv"), std::string::npos) << r.err;
  EXPECT_EQ(tvnet("bogus").status, 2);
}

TEST_F(Cli, BadCsvIsADataError) {
  write("bad.csv", "a,b\n1,2\n3,x\n");
  const auto cfg = write("bad.json", R"({"input": "bad.csv"})");
  const auto r = tvnet("estimate --config " + cfg.string() + " --out " + (kRoot / "o2").string());
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
}

TEST_F(Cli, ConstantSeriesIsANumericalError) {
  std::string text = "a,b\n";
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j = 0; j < 200; ++j) text += std::to_string(normal(rng)) + ",2.5\n";
  write("flat.csv", text);
  const auto cfg = write("flat.json", R"({"input": "flat.csv", "bands.b": 0.2})");
  const auto r = tvnet("estimate --config " + cfg.string() + " --out " + (kRoot / "o3").string());
  EXPECT_EQ(r.status, 4) << r.err;
}

TEST_F(Cli, WhiteNoiseNetworkIsMostlyEmptyAndDeterministic) {
  write("wn.csv", white_noise_csv(500, 11));
  const auto cfg = write("wn.json", R"({"input": "wn.csv", "null": 0, "boot": {"B": 300, "seed": 5}, "threads": 1})");
  const auto out1 = kRoot / "wn1", out2 = kRoot / "wn2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  ASSERT_EQ(tvnet("network --config " + cfg.string() + " --out " + out1.string()).status, 0);
  ASSERT_EQ(tvnet("network --config " + cfg.string() + " --out " + out2.string() + " --threads 1").status, 0);

  std::size_t snaps = 0, empty = 0;
  for (const auto& e : fs::directory_iterator(out1)) {
    const auto name = e.path().filename().string();
    if (name.rfind("network_", 0) != 0) continue;
    ++snaps;
    const auto j = nlohmann::json::parse(slurp(e.path()));
    empty += j.at("edges").empty() ? 1 : 0;
    EXPECT_EQ(slurp(e.path()), slurp(out2 / name)) << name;
  }
  ASSERT_GT(snaps, 0u);
  EXPECT_GE(static_cast<double>(empty) / static_cast<double>(snaps), 0.8);
  EXPECT_EQ(slurp(out1 / "bootstrap.json"), slurp(out2 / "bootstrap.json"));
  EXPECT_EQ(slurp(out1 / "curves.csv"), slurp(out2 / "curves.csv"));
  EXPECT_EQ(slurp(out1 / "heatmap.csv"), slurp(out2 / "heatmap.csv"));
  const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  EXPECT_TRUE(manifest.contains("config"));
  for (const auto& e : fs::directory_iterator(out1)) EXPECT_NE(e.path().extension(), ".tmp");
}

TEST_F(Cli, SnapshotOutsideTheDomain) {
  write("wn2.csv", white_noise_csv(300, 12));
  const auto cfg = write("snap.json", R"({"input": "wn2.csv", "bands.b": 0.2, "boot.B": 100, "snapshots": [0.05]})");
  const auto r = tvnet("network --config " + cfg.string() + " --out " + (kRoot / "o4").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("outside the evaluation domain"), std::string::npos) << r.err;
}

TEST_F(Cli, SimulateWritesAReport) {
  const auto cfg = write("sim.json", R"({"simulate": {"n": 200}, "bands.b": 0.3, "boot.B": 100, "lrv.m": 3})");
  const auto target = kRoot / "sim" / "report.json";
  fs::remove_all(kRoot / "sim");
  const auto r = tvnet("simulate --config " + cfg.string() + " --reps 2 --out " + target.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(target));
  EXPECT_FALSE(j.empty());
}
