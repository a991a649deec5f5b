#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json_util.hpp"
#include "oracles.hpp"

namespace rpft {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;

  json doc() const { return json::parse(out); }
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rpft");
  std::ostringstream out;
  std::ostringstream err;
  Invocation r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliWithData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tmp_ = new testing::TempDir("cli");
    const Invocation g =
        invoke({"gen-synthetic", "--classes", "3", "--dim", "8", "--shots", "6",
                "--val-per-class", "4", "--test-per-class", "5", "--out", dir().string()});
    ASSERT_EQ(g.code, 0) << g.err;
  }
  static void TearDownTestSuite() {
    delete tmp_;
    tmp_ = nullptr;
  }
  static fs::path dir() { return tmp_->path() / "data"; }
  static std::vector<std::string> data_flags() {
    return {"--train", (dir() / "train").string(), "--val",  (dir() / "val").string(),
            "--test",  (dir() / "test").string(),  "--text-anchors", (dir() / "text").string(),
            "--shots", "2"};
  }
  static std::vector<std::string> with_data(std::vector<std::string> head) {
    for (auto& f : data_flags()) head.push_back(f);
    return head;
  }

 private:
  static inline testing::TempDir* tmp_ = nullptr;
};

TEST_F(CliWithData, GenSyntheticWritesFourBundles) {
  for (const char* b : {"train", "val", "test", "text"}) {
    EXPECT_TRUE(fs::exists(dir() / b / "meta.json")) << b;
    EXPECT_TRUE(fs::exists(dir() / b / "features.bin")) << b;
  }
  EXPECT_FALSE(fs::exists(dir() / "text" / "labels.bin"));
}

TEST_F(CliWithData, GenSyntheticRefusesOverwriteWithoutForce) {
  const std::vector<std::string> args{"gen-synthetic", "--classes", "3", "--dim", "8",
                                      "--out", dir().string()};
  EXPECT_EQ(invoke(args).code, cli::kExitUsage);
  auto forced = args;
  forced.push_back("--force");
  testing::TempDir other("cli-force");
  forced[6] = (other.path() / "d").string();
  EXPECT_EQ(invoke(forced).code, 0);
  EXPECT_EQ(invoke(forced).code, 0);
}

TEST_F(CliWithData, RunEmitsResultJson) {
  const Invocation r = invoke(with_data({"run", "--method", "tip-adapter-krr", "--seeds", "1,2"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json d = r.doc();
  EXPECT_EQ(d["invocation"]["subcommand"], "run");
  EXPECT_EQ(d["invocation"]["method"], "tip-adapter-krr");
  EXPECT_EQ(d["method"], "tip-adapter-krr");
  EXPECT_EQ(d["grid_points"], 1);
  EXPECT_EQ(d["per_seed"].size(), 2u);
  EXPECT_TRUE(d["per_seed"][0]["krr"].is_object());
  EXPECT_GE(d["mean_accuracy"].get<double>(), 0.0);
  EXPECT_LE(d["mean_accuracy"].get<double>(), 100.0);
}

TEST_F(CliWithData, RunHonoursHyperparameterFlags) {
  const Invocation r = invoke(with_data({"run", "--method", "tip-adapter", "--alpha", "0.25"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json d = r.doc();
  EXPECT_EQ(d["invocation"]["hyperparam_flags"]["alpha"], 0.25);
  EXPECT_EQ(d["per_seed"][0]["hyperparams"]["alpha"], 0.25);
}

TEST_F(CliWithData, SweepUsesGridFile) {
  testing::TempDir tmp("grid");
  const fs::path grid = tmp.path() / "grid.json";
  std::ofstream(grid) << R"({"alpha": [0.5, 1.0], "beta": [3.0]})";
  const Invocation r =
      invoke(with_data({"sweep", "--method", "tip-adapter", "--grid", grid.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.doc()["grid_points"], 2);

  std::ofstream(grid, std::ios::trunc) << R"({"alpha": [1.0], "temperature": [2.0]})";
  EXPECT_EQ(invoke(with_data({"sweep", "--method", "tip-adapter", "--grid", grid.string()})).code,
            cli::kExitUsage);
}

TEST_F(CliWithData, CompareEmitsDeltaTable) {
  const Invocation r = invoke(
      with_data({"compare", "--methods", "tip-adapter,tip-adapter-krr", "--seeds", "1,2"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json d = r.doc();
  ASSERT_EQ(d["deltas"].size(), 1u);
  EXPECT_EQ(d["deltas"][0]["baseline"], "tip-adapter");
  EXPECT_EQ(d["deltas"][0]["method"], "tip-adapter-krr");
  EXPECT_EQ(d["deltas"][0]["per_seed"].size(), 2u);
}

TEST_F(CliWithData, CompareCsvAndOutFile) {
  testing::TempDir tmp("csv");
  const fs::path out = tmp.path() / "table.csv";
  const Invocation r = invoke(with_data({"compare", "--methods", "zero-shot-clip,tip-adapter",
                                         "--format", "csv", "--out", out.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "method,seed_1,mean");
}

TEST_F(CliWithData, CompareNeedsTwoMethods) {
  EXPECT_EQ(invoke(with_data({"compare", "--methods", "tip-adapter"})).code, cli::kExitUsage);
}

TEST_F(CliWithData, JobsDoNotChangeOutput) {
  auto run = [](const char* jobs) {
    const Invocation r = invoke(with_data({"compare", "--methods", "tip-adapter,ape", "--seeds",
                                           "1,2,3", "--jobs", jobs}));
    EXPECT_EQ(r.code, 0) << r.err;
    return testing::without_key(r.doc(), "wall_clock_seconds");
  };
  EXPECT_EQ(run("1"), run("3"));
}

TEST_F(CliWithData, InspectReportsBundle) {
  const Invocation r = invoke({"inspect", "--bundle", (dir() / "train").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json d = r.doc();
  EXPECT_EQ(d["kind"], "image");
  EXPECT_EQ(d["n"], 18);
  EXPECT_EQ(d["d"], 8);
  EXPECT_EQ(d["has_labels"], true);
  EXPECT_EQ(d["per_class_counts"], json::array({6, 6, 6}));
}

TEST_F(CliWithData, MissingBundleIsDataError) {
  const Invocation r = invoke({"inspect", "--bundle", (dir() / "nope").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_EQ(json::parse(r.err)["error"], "IoFailure");
}

TEST(Cli, GradcheckDefaultPasses) {
  const Invocation r = invoke({"gradcheck"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.doc()["pass"], true);
  EXPECT_LE(r.doc()["keys_max_rel_error"].get<double>(), 1e-4);
}

TEST(Cli, GradcheckSharpKernelPasses) {
  const Invocation r = invoke({"gradcheck", "--beta", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.doc()["pass"], true);
}

TEST(Cli, BrokenGradientFailsNumerically) {
  const Invocation r = invoke({"gradcheck", "--break-gradient"});
  EXPECT_EQ(r.code, cli::kExitNumerical);
  EXPECT_EQ(r.doc()["pass"], false);
  EXPECT_EQ(json::parse(r.err)["error"], "DivergedLoss");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({"run", "--method", "tip-adapter", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  const Invocation unknown = invoke({"run", "--method", "coop", "--train", "a", "--val", "b",
                                     "--test", "c", "--text-anchors", "d"});
  EXPECT_EQ(unknown.code, cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--method", "tip-adapter", "--seed", "1", "--seeds", "1,2"}).code,
            cli::kExitUsage);
}

TEST(Cli, HelpExitsZeroAndListsMethods) {
  const Invocation r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("tip-adapter-f-krr"), std::string::npos);
}

}  // namespace
}  // namespace rpft
