#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "tremor/cli.hpp"

namespace tremor::cli {
namespace {

namespace fs = std::filesystem;
using tremor::testing::read_file;
using tremor::testing::TempDir;
using tremor::testing::write_file;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "tremor");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  Outcome o;
  o.code = run(static_cast<int>(argv.size()), argv.data());
  o.out = ::testing::internal::GetCapturedStdout();
  o.err = ::testing::internal::GetCapturedStderr();
  return o;
}

// Small experiment: four participants, one trial each.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file(dir_ / "scenario.json", R"({"participants": 4, "trials_each": 1, "presets": ")" +
                                           (tremor::testing::data_dir() / "presets.json").string() + "\"}");
    write_config("config.json", R"("window_sizes": ["raw", 0.015625, 0.125], "classifiers": ["knn", "gnb", "tree"])");
  }

  void write_config(const std::string& name, const std::string& extra) {
    write_file(dir_ / name, "{\"layout\": \"" + (tremor::testing::data_dir() / "hallway_layout.csv").string() +
                                "\", \"scenario\": \"scenario.json\", \"output\": \"out\", \"seed\": 3, " + extra +
                                "}");
  }

  std::string config() const { return (dir_ / "config.json").string(); }
  fs::path out() const { return dir_ / "out"; }

  Outcome simulate() { return invoke({"simulate", "--config", config()}); }

  TempDir dir_{"cli"};
};

TEST_F(CliTest, SimulateWritesDataset) {
  const auto r = simulate();
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out, "participants=4 trials=4 seed=3\n");
  EXPECT_TRUE(fs::exists(out() / "dataset" / "manifest.json"));
}

TEST_F(CliTest, SimulateIsReproducible) {
  ASSERT_EQ(simulate().code, kOk);
  const auto first = read_file(out() / "dataset" / "manifest.json");
  const auto record = read_file(out() / "dataset" / "records" / "P01_T1.csv");
  fs::remove_all(out());
  ASSERT_EQ(simulate().code, kOk);
  EXPECT_EQ(read_file(out() / "dataset" / "manifest.json"), first);
  EXPECT_EQ(read_file(out() / "dataset" / "records" / "P01_T1.csv"), record);
}

TEST_F(CliTest, SeedFlagWinsOverConfig) {
  const auto r = invoke({"simulate", "--config", config(), "--seed", "11"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("seed=11"), std::string::npos);
}

TEST_F(CliTest, MissingScenarioIsConfigFailure) {
  write_config("config.json", R"("window_sizes": [0.125], "classifiers": ["knn"])");
  fs::remove(dir_ / "scenario.json");
  const auto r = simulate();
  EXPECT_EQ(r.code, kConfigFailure);
  EXPECT_NE(r.err.find("scenario.json"), std::string::npos) << r.err;
}

TEST_F(CliTest, BadFlagsAndValues) {
  EXPECT_EQ(invoke({"simulate", "--bogus"}).code, kConfigFailure);
  EXPECT_EQ(invoke({}).code, kConfigFailure);
  EXPECT_EQ(invoke({"privacy", "--config", config(), "--classifiers", "svm"}).code, kConfigFailure);
  EXPECT_EQ(invoke({"localize", "--config", config(), "--window-sizes", "0.5,0.1"}).code, kConfigFailure);
  EXPECT_EQ(invoke({"localize", "--config", (dir_ / "nope.json").string()}).code, kConfigFailure);
  EXPECT_EQ(invoke({"--help"}).code, kOk);
}

TEST_F(CliTest, LocalizeWritesPathsAndSweep) {
  ASSERT_EQ(simulate().code, kOk);
  const auto r = invoke({"localize", "--config", config()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(out() / "localize" / "paths" / "P01_T1.csv"));
  const auto sweep = read_file(out() / "localize" / "rmse_vs_window.csv");
  EXPECT_EQ(sweep.substr(0, sweep.find('\n')), "window_s,rmse_m,n_events");
  // raw is skipped for localization; both numeric windows have events and an RMSE.
  std::istringstream lines(sweep);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(line.find(",,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, LocalizeWithoutTruthLeavesRmseEmpty) {
  ASSERT_EQ(simulate().code, kOk);
  auto doc = nlohmann::json::parse(read_file(out() / "dataset" / "manifest.json"));
  for (auto& t : doc["trials"]) t.erase("truth_path");
  write_file(out() / "dataset" / "manifest.json", doc.dump());
  const auto r = invoke({"localize", "--config", config(), "--window-sizes", "0.015625"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(out() / "localize" / "paths" / "P02_T1.csv"));
  const auto sweep = read_file(out() / "localize" / "rmse_vs_window.csv");
  EXPECT_NE(sweep.find("\n0.015625,,"), std::string::npos) << sweep;
}

TEST_F(CliTest, EmptyManifestIsConfigFailure) {
  write_file(out() / "dataset" / "manifest.json", R"({"trials": []})");
  EXPECT_EQ(invoke({"localize", "--config", config()}).code, kConfigFailure);
  EXPECT_EQ(invoke({"privacy", "--config", config()}).code, kConfigFailure);
}

TEST_F(CliTest, UnreadableRecordsAreRuntimeFailure) {
  ASSERT_EQ(simulate().code, kOk);
  for (const auto& e : fs::directory_iterator(out() / "dataset" / "records")) write_file(e.path(), "t,S01\n0,NaN\n");
  EXPECT_EQ(invoke({"localize", "--config", config()}).code, kRuntimeFailure);
}

TEST_F(CliTest, PrivacyRowCounts) {
  ASSERT_EQ(simulate().code, kOk);
  auto r = invoke({"privacy", "--config", config()});
  ASSERT_EQ(r.code, kOk) << r.err;
  auto sweep = read_file(out() / "privacy" / "sweep.csv");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 1 + 3 * 3);
  EXPECT_EQ(sweep.substr(0, sweep.find('\n')), "window_s,classifier,accuracy,n_instances,class_balance");
  EXPECT_TRUE(fs::exists(out() / "privacy" / "pca_scatter.csv"));

  r = invoke({"privacy", "--config", config(), "--classifiers", "gnb", "--window-sizes", "0.125"});
  ASSERT_EQ(r.code, kOk) << r.err;
  sweep = read_file(out() / "privacy" / "sweep.csv");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 2);
}

TEST_F(CliTest, PrivacySyntheticSweep) {
  ASSERT_EQ(simulate().code, kOk);
  const auto r = invoke({"privacy", "--config", config(), "--classifiers", "gnb", "--synthesize", "100"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto syn = read_file(out() / "privacy" / "synthetic_sweep.csv");
  EXPECT_EQ(std::count(syn.begin(), syn.end(), '\n'), 1 + 3);
  EXPECT_NE(syn.find(",200,0.5\n"), std::string::npos) << syn;
}

TEST_F(CliTest, ReportNeedsInputs) {
  const auto r = invoke({"report", "--config", config()});
  EXPECT_EQ(r.code, kConfigFailure);
  EXPECT_NE(r.err.find("sweep.csv"), std::string::npos);
}

TEST_F(CliTest, ReportMergesAndIsStable) {
  ASSERT_EQ(simulate().code, kOk);
  ASSERT_EQ(invoke({"localize", "--config", config()}).code, kOk);
  ASSERT_EQ(invoke({"privacy", "--config", config(), "--classifiers", "gnb"}).code, kOk);
  ASSERT_EQ(invoke({"report", "--config", config()}).code, kOk);
  const auto first = read_file(out() / "report.json");
  const auto doc = nlohmann::json::parse(first);
  EXPECT_TRUE(doc.contains("localization"));
  EXPECT_TRUE(doc.contains("privacy"));
  EXPECT_EQ(doc["seeds"]["root"], 3);
  EXPECT_EQ(doc["tool"], "tremor");
  ASSERT_EQ(invoke({"report", "--config", config()}).code, kOk);
  EXPECT_EQ(read_file(out() / "report.json"), first);
}

TEST(ParseLists, WindowsAndClassifiers) {
  const auto w = parse_window_list("raw,0.125, 0.25");
  ASSERT_EQ(w.size(), 3u);
  EXPECT_FALSE(w[0].has_value());
  EXPECT_EQ(*w[2], 0.25);
  EXPECT_EQ(parse_classifier_list("knn,mlp").size(), 2u);
  EXPECT_THROW(parse_window_list("0.1,abc"), tremor::Error);
}

}  // namespace
}  // namespace tremor::cli
