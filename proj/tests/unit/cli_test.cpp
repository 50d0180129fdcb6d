#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "../tools/commands.hpp"

namespace fs = std::filesystem;

namespace fingertrace::cli {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("fingertrace_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fingertrace");
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void simulate_controlled(const std::string& sub, const std::string& seed = "1") {
    ASSERT_EQ(run_cli({"simulate", "--preset", "controlled-10-beacons", "--seed", seed, "--out", path(sub)}), kOk)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, SimulateWritesLogAndTruth) {
  simulate_controlled("sim");
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "packets.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "ground_truth.jsonl"));
  EXPECT_GT(fs::file_size(dir_ / "sim" / "packets.jsonl"), 0u);
  EXPECT_NE(out_.str().find("packets="), std::string::npos);
}

TEST_F(Cli, SimulateIsReproducible) {
  simulate_controlled("a", "4");
  simulate_controlled("b", "4");
  EXPECT_EQ(slurp(dir_ / "a" / "packets.jsonl"), slurp(dir_ / "b" / "packets.jsonl"));
  EXPECT_EQ(slurp(dir_ / "a" / "ground_truth.jsonl"), slurp(dir_ / "b" / "ground_truth.jsonl"));
}

TEST_F(Cli, SimulateCsvAndSavedConfig) {
  ASSERT_EQ(run_cli({"simulate", "--preset", "two-groups-crossing", "--format", "csv", "--save-config", "--out",
                     path("s")}),
            kOk);
  EXPECT_EQ(slurp(dir_ / "s" / "packets.csv").rfind("ts,sniffer,device,rssi\n", 0), 0u);
  ASSERT_EQ(run_cli({"simulate", path("s/scenario.json"), "--out", path("t"), "--format", "csv"}), kOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "s" / "packets.csv"), slurp(dir_ / "t" / "packets.csv"));
}

TEST_F(Cli, MissingInputIsUsageError) {
  EXPECT_EQ(run_cli({"analyze", path("nope.jsonl"), "--out", path("o")}), kUsageError);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_EQ(run_cli({"simulate", path("nope.json"), "--out", path("o")}), kUsageError);
  EXPECT_EQ(run_cli({"simulate", "--preset", "unknown", "--out", path("o")}), kUsageError);
}

TEST_F(Cli, BadFlagsAreUsageErrors) {
  EXPECT_EQ(run_cli({"analyze"}), kUsageError);
  EXPECT_EQ(run_cli({"analyze", path("x"), "--bogus"}), kUsageError);
  EXPECT_EQ(run_cli({"frobnicate"}), kUsageError);
  simulate_controlled("sim");
  EXPECT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("o"), "--window-len", "-5"}), kUsageError);
  EXPECT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("o"), "--k", "0"}), kUsageError);
}

TEST_F(Cli, EmptyLogFails) {
  std::ofstream(dir_ / "empty.jsonl").close();
  EXPECT_NE(run_cli({"analyze", path("empty.jsonl"), "--out", path("o")}), kOk);
}

TEST_F(Cli, AnalyzeIsDeterministic) {
  simulate_controlled("sim");
  ASSERT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("a1")}), kOk) << err_.str();
  ASSERT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("a2")}), kOk);
  for (const char* f : {"windowed.jsonl", "fingerprints.jsonl", "groups.jsonl", "ledger.csv", "rejects.jsonl"})
    EXPECT_EQ(slurp(dir_ / "a1" / f), slurp(dir_ / "a2" / f)) << f;
}

TEST_F(Cli, ControlledRunScoresPerfectGrouping) {
  simulate_controlled("sim");
  ASSERT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("an"), "--origin", "0"}), kOk);
  ASSERT_EQ(run_cli({"report", path("an"), "--truth", path("sim/ground_truth.jsonl")}), kOk) << err_.str();
  auto acc = nlohmann::json::parse(slurp(dir_ / "an" / "report" / "accuracy.json"));
  EXPECT_EQ(acc.at("grouping_accuracy").get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir_ / "an" / "report" / "histogram.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "an" / "report" / "signals" / "B01.csv"));
}

TEST_F(Cli, MetricsAndGraph) {
  simulate_controlled("sim");
  ASSERT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("an")}), kOk);
  for (const char* m : {"mi", "tmi", "similarity"}) {
    ASSERT_EQ(run_cli({"metrics", path("an"), "--metric", m}), kOk) << m << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "an" / (std::string("matrix_") + m + ".csv")));
  }
  EXPECT_EQ(run_cli({"metrics", path("an"), "--metric", "jaccard"}), kUsageError);

  ASSERT_EQ(run_cli({"graph", path("an/matrix_tmi.csv"), "--format", "dot"}), kOk) << err_.str();
  auto dot = out_.str();
  EXPECT_EQ(dot.rfind("graph social {", 0), 0u);
  EXPECT_NE(dot.find(" -- "), std::string::npos);
  ASSERT_EQ(run_cli({"graph", path("an/matrix_tmi.csv"), "--format", "graphml", "--out", path("g.graphml")}), kOk);
  EXPECT_NE(slurp(dir_ / "g.graphml").find("<graphml"), std::string::npos);
  EXPECT_EQ(run_cli({"graph", path("an/matrix_tmi.csv"), "--threshold", "1.1"}), kUsageError);
  EXPECT_EQ(run_cli({"graph", path("an/matrix_similarity.csv"), "--format", "json"}), kOk);
  EXPECT_EQ(nlohmann::json::parse(out_.str()).at("metric"), "similarity");
}

TEST_F(Cli, ReportOnNonAnalysisDirIsUsageError) {
  fs::create_directories(dir_ / "blank");
  EXPECT_EQ(run_cli({"report", path("blank")}), kUsageError);
}

TEST_F(Cli, OfficeHistogramDominatedBySingletons) {
  ASSERT_EQ(run_cli({"simulate", "--preset", "office-2-rooms", "--duration", "1800", "--out", path("sim")}), kOk);
  ASSERT_EQ(run_cli({"analyze", path("sim/packets.jsonl"), "--out", path("an")}), kOk);
  ASSERT_EQ(run_cli({"report", path("an")}), kOk);
  std::istringstream hist(slurp(dir_ / "an" / "report" / "histogram.csv"));
  std::string line;
  std::getline(hist, line);
  EXPECT_EQ(line, "group_size,count");
  std::size_t singles = 0, larger = 0;
  while (std::getline(hist, line)) {
    auto comma = line.find(',');
    auto size = std::stoul(line.substr(0, comma));
    auto count = std::stoul(line.substr(comma + 1));
    (size == 1 ? singles : larger) += count;
  }
  EXPECT_GT(singles, larger);
}

TEST_F(Cli, InstalledBinaryRuns) {
  std::string cmd = std::string("\"") + FINGERTRACE_CLI_PATH + "\" simulate --preset controlled-10-beacons --out \"" +
                    path("bin") + "\" > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "bin" / "packets.jsonl"));
  cmd = std::string("\"") + FINGERTRACE_CLI_PATH + "\" analyze > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kUsageError);
}

}  // namespace
}  // namespace fingertrace::cli
