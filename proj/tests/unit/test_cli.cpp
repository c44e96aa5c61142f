#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ipl/cli/app.hpp"
#include "ipl/config.hpp"

using namespace ipl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ipl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }
  std::string out(const std::string& name) const { return (dir_ / name).string(); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST(Config, MinimalBanditDefaults) {
  const cfg::RunConfig c = cfg::parse_config(json{{"env", {{"kind", "gaussian-bandit"}}}});
  EXPECT_EQ(c.train.beta, 0.01);
  EXPECT_EQ(c.flow.layers, 4u);
  EXPECT_EQ(c.flow.hidden, 3u);
  EXPECT_EQ(c.algo, cfg::Algo::NfpOnPolicy);
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    cfg::parse_config(json{{"train", {{"beta_", 0.1}}}});
    FAIL() << "expected ConfigError";
  } catch (const cfg::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("beta_"), std::string::npos);
  }
  EXPECT_THROW(cfg::parse_config(json{{"beta_", 1}}), cfg::ConfigError);
  EXPECT_THROW(cfg::parse_config(json{{"train", {{"beta", "high"}}}}), cfg::ConfigError);
}

TEST(Config, RoundTrip) {
  json doc{{"algo", "nbp-offpolicy"},
           {"env", {{"kind", "multi-goal-2d"}, {"horizon", 30}}},
           {"train", {{"beta", 0.3}, {"tau", 100}}},
           {"nbp", {{"rho_init", -9.0}}},
           {"seed", 42}};
  const cfg::RunConfig a = cfg::parse_config(doc);
  const json emitted = cfg::to_json(a);
  const cfg::RunConfig b = cfg::parse_config(emitted);
  EXPECT_EQ(cfg::to_json(b), emitted);
  EXPECT_EQ(b.seed, 42u);
  EXPECT_EQ(b.nbp.rho_init, -9.0);
  EXPECT_EQ(b.env.horizon, 30u);
}

TEST(Config, Overrides) {
  json doc = json::object();
  cfg::apply_override(doc, "train.beta=0.5");
  cfg::apply_override(doc, "env.kind=bimodal-axis");
  EXPECT_EQ(doc["train"]["beta"], 0.5);
  EXPECT_EQ(doc["env"]["kind"], "bimodal-axis");
  EXPECT_THROW(cfg::apply_override(doc, "novalue"), cfg::ConfigError);
}

TEST_F(Cli, TrainWithZeroStepsWritesEmptyArtifacts) {
  ASSERT_EQ(run({"train", "--out", out("z"), "train.total_steps=0"}), cli::kExitOk) << err_.str();
  for (const char* f : {"effective_config.json", "metrics.jsonl", "trajectories.csv", "policy.ckpt.json", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "z" / f)) << f;
  }
  EXPECT_EQ(fs::file_size(dir_ / "z" / "metrics.jsonl"), 0u);
}

TEST_F(Cli, EffectiveConfigReproducesRun) {
  ASSERT_EQ(run({"train", "--out", out("a"), "--seed", "3", "train.total_steps=256", "train.rollout_length=128",
                 "train.epochs=1", "flow.embed_hidden=[8]"}),
            cli::kExitOk)
      << err_.str();
  ASSERT_EQ(run({"train", "--config", out("a/effective_config.json"), "--out", out("b")}), cli::kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.jsonl"), slurp(dir_ / "b" / "metrics.jsonl"));
  EXPECT_FALSE(slurp(dir_ / "a" / "metrics.jsonl").empty());
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run({"train", "--out", out("x"), "beta_=1"}), cli::kExitConfig);
  EXPECT_NE(err_.str().find("beta_"), std::string::npos);
  EXPECT_EQ(run({"fly"}), cli::kExitConfig);
  EXPECT_EQ(run({"train", "--config", out("missing.json")}), cli::kExitConfig);
}

TEST_F(Cli, DivergenceExitsThree) {
  EXPECT_EQ(run({"train", "--out", out("d"), "train.lr_policy=1e300", "train.total_steps=512",
                 "train.rollout_length=512", "train.epochs=1"}),
            cli::kExitDivergence);
  EXPECT_TRUE(fs::exists(dir_ / "d" / "crash.ckpt.json"));
}

TEST_F(Cli, VerifyOperatorsReport) {
  ASSERT_EQ(run({"verify", "--suite", "operators", "--instances", "1000", "--seed", "7", "--out", out("v")}),
            cli::kExitOk)
      << err_.str();
  const json report = json::parse(slurp(dir_ / "v" / "verify-report.json"));
  EXPECT_NE(report.dump().find("1000"), std::string::npos);
}

TEST_F(Cli, GradCheckExitReflectsResult) {
  EXPECT_EQ(run({"grad-check", "--target", "nfp-logprob", "--out", out("g")}), cli::kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("PASS"), std::string::npos);
  EXPECT_EQ(run({"grad-check", "--target", "nfp-logprob", "--tol", "1e-300", "--out", out("h")}),
            cli::kExitVerification);
}
