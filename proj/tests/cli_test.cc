#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stgib");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = stgib::cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json ReadJson(const fs::path& p) { return json::parse(Slurp(p)); }

void WriteJson(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("stgib_cli_" + std::to_string(::getpid()));
    fs::create_directories(root_);
    ASSERT_EQ(Cli({"synth", "--nodes", "5", "--steps", "160", "--planted", "4", "--seed", "3", "--out",
                   (root_ / "data").string()})
                  .code,
              0);
    json cfg = ReadJson(root_ / "data" / "experiment.json");
    cfg["input_steps"] = 4;
    cfg["output_steps"] = 2;
    cfg["model"]["embed_dim"] = 4;
    cfg["model"]["spatial_dim"] = 4;
    cfg["model"]["temporal_dim"] = 4;
    cfg["model"]["heads"] = 2;
    cfg["model"]["head_hidden"] = 8;
    cfg["train"]["epochs"] = 2;
    cfg["train"]["batch_size"] = 16;
    WriteJson(root_ / "data" / "experiment.json", cfg);
    ASSERT_EQ(Cli({"train", "--config", Config(), "--out", Run()}).code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string Config() { return (root_ / "data" / "experiment.json").string(); }
  static std::string Run() { return (root_ / "run").string(); }
  static std::string Path(const std::string& name) { return (root_ / name).string(); }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, SynthIsDeterministic) {
  ASSERT_EQ(Cli({"synth", "--nodes", "5", "--steps", "160", "--planted", "4", "--seed", "3", "--out", Path("again")}).code, 0);
  EXPECT_EQ(Slurp(root_ / "again" / "values.arr"), Slurp(root_ / "data" / "values.arr"));
  EXPECT_EQ(Slurp(root_ / "again" / "planted_edges.json"), Slurp(root_ / "data" / "planted_edges.json"));
  ASSERT_EQ(Cli({"synth", "--nodes", "5", "--steps", "160", "--planted", "4", "--seed", "4", "--out", Path("other")}).code, 0);
  EXPECT_NE(Slurp(root_ / "other" / "values.arr"), Slurp(root_ / "data" / "values.arr"));
}

TEST_F(CliTest, SynthRejectsEmptyPlantedSet) {
  const Outcome o = Cli({"synth", "--planted", "0", "--out", Path("none")});
  EXPECT_EQ(o.code, 2);
  EXPECT_FALSE(o.err.empty());
}

TEST_F(CliTest, TrainWritesRunArtifacts) {
  for (const char* f : {"config.json", "epochs.jsonl", "best.ckpt", "last.ckpt", "metrics.json"})
    EXPECT_TRUE(fs::exists(root_ / "run" / f)) << f;
  const json m = ReadJson(root_ / "run" / "metrics.json");
  EXPECT_TRUE(m.dump().find("mae") != std::string::npos);
  std::ifstream log(root_ / "run" / "epochs.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(log, line)) ++n;
  EXPECT_EQ(n, 2);
}

TEST_F(CliTest, TrainAblationZeroesTemporalKl) {
  ASSERT_EQ(Cli({"train", "--config", Config(), "--ablation", "no_temporal_ib", "--out", Path("abl")}).code, 0);
  std::ifstream log(root_ / "abl" / "epochs.jsonl");
  std::string line;
  while (std::getline(log, line)) {
    const json j = json::parse(line);
    EXPECT_EQ(j.at("kl_temporal").get<double>(), 0.0);
    EXPECT_GT(j.at("kl_spatial").get<double>(), 0.0);
  }
  EXPECT_EQ(Cli({"train", "--config", Config(), "--ablation", "random_drop=2", "--out", Path("bad")}).code, 2);
  EXPECT_EQ(Cli({"train", "--config", Config(), "--ablation", "sideways", "--out", Path("bad")}).code, 2);
}

TEST_F(CliTest, EvaluateAndCorruptCheckpoint) {
  const std::string ckpt = (root_ / "run" / "best.ckpt").string();
  ASSERT_EQ(Cli({"evaluate", "--checkpoint", ckpt, "--split", "test", "--out", Path("eval")}).code, 0);
  EXPECT_TRUE(fs::exists(root_ / "eval" / "metrics_test.json"));

  fs::copy_file(ckpt, root_ / "broken.ckpt");
  fs::copy_file(root_ / "run" / "config.json", root_ / "config.json");
  fs::resize_file(root_ / "broken.ckpt", fs::file_size(root_ / "broken.ckpt") / 2);
  EXPECT_EQ(Cli({"evaluate", "--checkpoint", Path("broken.ckpt"), "--out", Path("eval2")}).code, 4);
  EXPECT_EQ(Cli({"evaluate", "--checkpoint", Path("missing.ckpt"), "--out", Path("eval3")}).code, 4);
}

TEST_F(CliTest, ExplainFlags) {
  const std::string ckpt = (root_ / "run" / "best.ckpt").string();
  EXPECT_EQ(Cli({"explain", "--checkpoint", ckpt, "--threshold", "0.5", "--top-fraction", "0.2"}).code, 2);
  EXPECT_EQ(Cli({"explain", "--checkpoint", ckpt}).code, 2);
  ASSERT_EQ(Cli({"explain", "--checkpoint", ckpt, "--top-fraction", "0.2", "--out", Path("expl")}).code, 0);
  const json s = ReadJson(root_ / "expl" / "explain_summary.json");
  const double sparsity = s.at("rows")[0].at("sparsity");
  EXPECT_NEAR(sparsity, 0.8, 1.0 / 20 + 1e-12);  // 20 candidate edges
  const std::string csv = Slurp(root_ / "expl" / "explain.csv");
  EXPECT_EQ(csv.rfind("graph_kind,sparsity,fidelity,baseline_fidelity,auc\n", 0), 0u);
}

TEST_F(CliTest, RobustnessWritesOneRowPerLevel) {
  ASSERT_EQ(Cli({"robustness", "--config", Config(), "--drop-levels", "0.1,0.3,0.5", "--out", Path("rob")}).code, 0);
  std::ifstream in(root_ / "rob" / "robustness.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "drop_rate,mae,rmse,mape");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(Cli({"robustness", "--config", Config(), "--drop-levels", "0.1,1.5", "--out", Path("rob2")}).code, 2);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  std::ofstream(root_ / "bad.json") << "{\"task\": \"synthetic\", \"bogus\": 1}";
  EXPECT_EQ(Cli({"train", "--config", Path("bad.json"), "--out", Path("x")}).code, 2);
  std::ofstream(root_ / "garbled.json") << "{not json";
  EXPECT_EQ(Cli({"train", "--config", Path("garbled.json"), "--out", Path("x")}).code, 2);
  EXPECT_EQ(Cli({"train"}).code, 2);
  EXPECT_EQ(Cli({"frobnicate"}).code, 2);
}

TEST_F(CliTest, DivergenceExitsThree) {
  json cfg = ReadJson(Config());
  cfg["train"]["learning_rate"] = 1e300;
  cfg["train"]["grad_clip"] = 0.0;
  WriteJson(root_ / "diverge.json", cfg);
  // Data paths are relative to the config file.
  EXPECT_EQ(Cli({"train", "--config", (root_ / "data" / "diverge.json").string(), "--out", Path("div")}).code, 2);
  fs::copy_file(root_ / "diverge.json", root_ / "data" / "diverge.json");
  const Outcome o = Cli({"train", "--config", (root_ / "data" / "diverge.json").string(), "--out", Path("div")});
  EXPECT_EQ(o.code, 3) << o.err;
}

}  // namespace
