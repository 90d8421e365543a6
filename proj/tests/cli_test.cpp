#include "adtarget/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "gtest/gtest.h"

namespace adtarget {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "adtarget");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("adtarget_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kSixType = ADTARGET_DATA_DIR "/six_type.json";
const std::string kTwo = ADTARGET_DATA_DIR "/two_feature.json";

TEST_F(CliTest, OptimizeSixType) {
  auto r = run({"optimize", "--data", kSixType, "--L", "0.30", "--eps", "0.005"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  EXPECT_NEAR(doc["lift"].get<double>(), 1.99, 0.01);
  EXPECT_EQ(doc["features"][0]["types"], nlohmann::json::array({"t1", "t2"}));
}

TEST_F(CliTest, SixTypeNeedsLooseTolerance) {
  // The stored percentages sum to 99.90 / 100.10.
  auto r = run({"validate", "--data", kSixType, "--eps", "0.005"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "valid: 1 features, 6 types\n");
  auto strict = run({"validate", "--data", kSixType, "--eps", "1e-9"});
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.out.find("p-sum"), std::string::npos);
}

TEST_F(CliTest, CoverageFloorOutOfRange) {
  auto r = run({"optimize", "--data", kTwo, "--L", "1.5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("L must lie in [0,1]"), std::string::npos);
  EXPECT_EQ(run({"optimize", "--data", kTwo, "--L", "abc"}).code, 1);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"optimize", "--L", "0.5"}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, RuntimeErrors) {
  EXPECT_EQ(run({"optimize", "--data", path("missing.json"), "--L", "0.5"}).code, 3);
  EXPECT_EQ(run({"optimize", "--data", kTwo, "--L", "0.5", "--exclude", "Nope"}).code, 3);
  std::ofstream(path("bad.csv")) << "feature,label,q,p\nf,a,x,1\n";
  auto r = run({"validate", "--data", path("bad.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 2, field q"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidDatasetExitsTwo) {
  std::ofstream(path("sum.csv")) << "feature,label,q,p\nf,a,0.5,0.9\nf,b,0.5,0.9\n";
  auto r = run({"optimize", "--data", path("sum.csv"), "--L", "0.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("p-sum = 1.8"), std::string::npos) << r.err;
}

TEST_F(CliTest, OptimizeFormats) {
  auto csv = run({"optimize", "--data", kTwo, "--L", "0.2", "--format", "csv"});
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.substr(0, 2), "L,");
  EXPECT_NE(csv.out.find("\n0.2,2,0.25,"), std::string::npos) << csv.out;
  auto text = run({"optimize", "--data", kTwo, "--L", "0.2", "--format", "text"});
  EXPECT_NE(text.out.find("profit            70000"), std::string::npos) << text.out;
  auto overridden = run({"optimize", "--data", kTwo, "--L", "0.2", "--budget", "0"});
  EXPECT_EQ(nlohmann::json::parse(overridden.out)["metrics"]["profit"].get<double>(), 90000.0);
}

TEST_F(CliTest, SweepWithGridFileAndSideOutputs) {
  std::ofstream(path("grid.txt")) << "0\n0.5\n# comment\n1\n";
  auto r = run({"sweep", "--data", kTwo, "--grid-file", path("grid.txt"), "--matrix-out", path("m.csv"),
                "--freq-out", path("f.csv"), "--out", path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(slurp(path("s.json")));
  ASSERT_EQ(doc["points"].size(), 3u);
  EXPECT_NEAR(doc["points"][0]["lift"].get<double>(), 3.2, 1e-12);
  EXPECT_NEAR(doc["points"][1]["lift"].get<double>(), 1.6, 1e-12);
  EXPECT_EQ(doc["points"][2]["lift"].get<double>(), 1.0);
  EXPECT_EQ(slurp(path("m.csv")), "feature,0,0.5,1\nA,1,1,0\nB,1,0,0\n");
  EXPECT_EQ(slurp(path("f.csv")), "feature,count\nA,2\nB,1\n");

  auto freq = run({"freq", "--sweep", path("s.json")});
  ASSERT_EQ(freq.code, 0);
  EXPECT_EQ(freq.out, "feature,count\nA,2\nB,1\n");
}

TEST_F(CliTest, SweepGroupsReportCoActivation) {
  std::ofstream(path("groups.json")) << R"([["A","B"]])";
  auto r = run({"sweep", "--data", kTwo, "--grid-points", "3", "--groups", path("groups.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("keep 'A', exclude B"), std::string::npos) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["correlation"][0]["keep"], "A");
}

TEST_F(CliTest, GridOptionsAreExclusive) {
  std::ofstream(path("grid.txt")) << "0\n";
  EXPECT_EQ(run({"sweep", "--data", kTwo, "--grid-points", "3", "--grid-file", path("grid.txt")}).code, 1);
}

TEST_F(CliTest, IdenticalInvocationsAreByteIdentical) {
  auto gen = run({"gen-demo", "--seed", "3", "--out", path("demo.csv")});
  ASSERT_EQ(gen.code, 0);
  auto again = run({"gen-demo", "--seed", "3", "--out", path("demo2.csv")});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(path("demo.csv")), slurp(path("demo2.csv")));
  EXPECT_EQ(slurp(path("demo.csv")).substr(0, 17), "feature,label,q,p");

  std::vector<std::string> args = {"sweep", "--data", path("demo.csv"), "--grid-points", "8"};
  auto a = run(args);
  args.push_back("--jobs");
  args.push_back("3");
  auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, GenDemoCustomSchema) {
  auto r = run({"gen-demo", "--schema", ADTARGET_DATA_DIR "/small_schema.json", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc["features"].size(), 3u);
  EXPECT_EQ(doc["features"][2]["types"].size(), 7u);
  EXPECT_EQ(run({"gen-demo", "--concentration", "0"}).code, 3);
}

TEST_F(CliTest, StandaloneBinaryRuns) {
  std::string cmd = std::string(ADTARGET_CLI_PATH) + " optimize --data " + kTwo + " --L 0.2 --format csv > " +
                    path("out.csv");
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(path("out.csv")).find("0.2,2,0.25,"), std::string::npos);
}

}  // namespace
}  // namespace adtarget
