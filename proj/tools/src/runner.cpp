#include "ipl/cli/runner.hpp"

#include <cmath>
#include <fstream>

#include "ipl/offpolicy.hpp"
#include "ipl/onpolicy.hpp"

namespace ipl::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalSalt = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kExpertSalt = 0xbb67ae8584caa73bULL;

void finish_run(const cfg::RunConfig& config, RunResult& result, const std::optional<fs::path>& dir) {
  if (!dir) return;
  result.policy.save(*dir / "policy.ckpt.json");
  const auto trajectories =
      evaluate_rollouts(config.env, result.policy, config.eval.episodes, config.seed ^ kEvalSalt);
  env::write_trajectories_csv(*dir / "trajectories.csv", trajectories);
  result.summary["evaluation"] = rollout_summary(config.env, trajectories);
}

rl::MetricLog open_log(const std::optional<fs::path>& dir) {
  return dir ? rl::MetricLog(*dir / "metrics.jsonl") : rl::MetricLog();
}

}  // namespace

RunResult run_train(const cfg::RunConfig& config, const std::optional<fs::path>& dir) {
  if (config.command != cfg::Command::Train) throw cfg::ConfigError("run_train needs a train config");
  RunResult result{PolicyHandle(config), {}, nlohmann::json::object()};
  if (result.policy.kind() == cfg::PolicyKind::Nbp) {
    rl::OffPolicyTrainer trainer(config.env, config.nbp, config.train);
    if (dir) {
      trainer.set_metrics_path(*dir / "metrics.jsonl");
      trainer.set_crash_checkpoint(*dir / "crash.ckpt.json");
    }
    trainer.run();
    nn::hard_sync(result.policy.params(), trainer.policy().params());
    result.log = trainer.log();
    result.summary["updates"] = trainer.updates_done();
    result.summary["steps"] = trainer.steps_done();
  } else {
    rl::OnPolicyTrainer trainer(config.env, *result.policy.density(), config.train);
    if (dir) {
      trainer.set_metrics_path(*dir / "metrics.jsonl");
      trainer.set_crash_checkpoint(*dir / "crash.ckpt.json");
    }
    trainer.run();
    result.log = trainer.log();
    result.summary["steps"] = trainer.steps_done();
  }
  finish_run(config, result, dir);
  return result;
}

imit::Expert expert_for(const cfg::RunConfig& config) {
  if (config.env.kind != env::EnvKind::BimodalAxis) {
    throw cfg::ConfigError(std::string("no scripted expert for environment '") + env::kind_name(config.env.kind) + "'");
  }
  return imit::axis_expert(config.env, config.imitation.expert_sigma, config.seed ^ kExpertSalt);
}

RunResult run_imitate(const cfg::RunConfig& config, const std::optional<fs::path>& dir) {
  if (config.command != cfg::Command::Imitate) throw cfg::ConfigError("run_imitate needs an imitate config");
  const imit::DemoDataset data =
      imit::generate_expert_dataset(config.env, expert_for(config), config.imitation.expert_episodes, config.seed);
  if (dir) imit::save_dataset(data, *dir / "expert.csv");

  RunResult result{PolicyHandle(config), open_log(dir), nlohmann::json::object()};
  imit::ImitationConfig loop = config.imitation.loop;
  loop.seed = config.seed;
  switch (result.policy.kind()) {
    case cfg::PolicyKind::Nfp:
      imit::train_bc(*result.policy.density(), data, loop, &result.log);
      break;
    case cfg::PolicyKind::Gaussian:
      loop.augment = 0;
      imit::train_bc(*result.policy.density(), data, loop, &result.log);
      break;
    case cfg::PolicyKind::Nbp: {
      ent::DensityClassifier disc(config.env.state_dim, {config.env.action_low, config.env.action_high}, {64, 64},
                                  config.seed ^ kExpertSalt);
      imit::train_gan(*result.policy.blackbox(), disc, data, loop, &result.log);
      break;
    }
  }
  result.summary["demonstrations"] = data.size();
  const SignMass mass = sign_mass(result.policy, std::vector<double>(config.env.state_dim, 0.0), 10000, config.seed);
  result.summary["origin_sign_mass"] = {{"positive", mass.positive}, {"negative", mass.negative}, {"mean", mass.mean}};
  finish_run(config, result, dir);
  return result;
}

std::vector<env::Trajectory> evaluate_rollouts(const env::EnvSpec& spec, const PolicyHandle& policy,
                                               std::size_t episodes, std::uint64_t seed) {
  env::Env environment(spec, seed);
  Rng rng(seed ^ kEvalSalt);
  const env::ActFn act = policy.actor(rng);
  std::vector<env::Trajectory> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) out.push_back(env::rollout(environment, act));
  return out;
}

std::vector<std::size_t> goal_counts(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories) {
  std::vector<std::size_t> counts(spec.multigoal.goals.size() / 2, 0);
  for (const auto& t : trajectories) {
    const int g = env::goal_hit(spec.multigoal, t.final_state);
    if (g >= 0) ++counts[static_cast<std::size_t>(g)];
  }
  return counts;
}

std::size_t goals_reached(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories) {
  std::size_t n = 0;
  for (std::size_t c : goal_counts(spec, trajectories)) n += c > 0 ? 1 : 0;
  return n;
}

nlohmann::json rollout_summary(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories) {
  nlohmann::json out;
  out["episodes"] = trajectories.size();
  double total = 0.0;
  for (const auto& t : trajectories) total += t.total_reward();
  out["return_mean"] = trajectories.empty() ? 0.0 : total / static_cast<double>(trajectories.size());
  if (spec.kind == env::EnvKind::MultiGoal2d) {
    out["goal_counts"] = goal_counts(spec, trajectories);
    out["goals_reached"] = goals_reached(spec, trajectories);
  } else if (spec.kind == env::EnvKind::BimodalAxis) {
    const imit::Coverage c = imit::mode_coverage(trajectories, imit::axis_modes(spec.axis.bound));
    out["mode_coverage"] = {{"positive", c.fractions[0]}, {"negative", c.fractions[1]}, {"other", c.other}};
  }
  return out;
}

double target_correlation(const env::BanditParams& params, double beta, std::size_t grid) {
  const double h = 2.0 / static_cast<double>(grid);
  std::vector<double> a(2);
  double z = 0.0, m0 = 0.0, m1 = 0.0, s00 = 0.0, s11 = 0.0, s01 = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    a[0] = -1.0 + (static_cast<double>(i) + 0.5) * h;
    for (std::size_t j = 0; j < grid; ++j) {
      a[1] = -1.0 + (static_cast<double>(j) + 0.5) * h;
      const double w = std::exp(env::bandit_reward(params, a) / beta);
      z += w;
      m0 += w * a[0];
      m1 += w * a[1];
      s00 += w * a[0] * a[0];
      s11 += w * a[1] * a[1];
      s01 += w * a[0] * a[1];
    }
  }
  m0 /= z;
  m1 /= z;
  const double c00 = s00 / z - m0 * m0;
  const double c11 = s11 / z - m1 * m1;
  const double c01 = s01 / z - m0 * m1;
  return c01 / std::sqrt(c00 * c11);
}

BanditStats bandit_stats(const env::EnvSpec& spec, const PolicyHandle& policy, std::size_t samples,
                         std::uint64_t seed, Tensor* draws) {
  if (spec.kind != env::EnvKind::GaussianBandit) throw cfg::ConfigError("bandit statistics need the gaussian-bandit");
  Rng rng(seed);
  const Tensor a = policy.sample(Tensor({samples, spec.state_dim}), rng);
  BanditStats out;
  out.samples = samples;
  out.correlation = env::sample_correlation(a, 0, 1);
  out.target_correlation = target_correlation(spec.bandit, spec.bandit.beta_opt);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      s += a.at(r, j);
      ss += a.at(r, j) * a.at(r, j);
    }
    const double n = static_cast<double>(a.rows());
    out.mean.push_back(s / n);
    out.stddev.push_back(std::sqrt(std::max(0.0, ss / n - (s / n) * (s / n))));
  }
  if (draws != nullptr) *draws = a;
  return out;
}

SignMass sign_mass(const PolicyHandle& policy, const std::vector<double>& state, std::size_t samples,
                   std::uint64_t seed) {
  Rng rng(seed);
  const Tensor a = policy.sample(Tensor::row(state).repeat_rows(samples), rng);
  SignMass out;
  for (std::size_t r = 0; r < samples; ++r) {
    const double v = a.at(r, 0);
    out.positive += v > 0.0 ? 1.0 : 0.0;
    out.negative += v < 0.0 ? 1.0 : 0.0;
    out.mean += v;
  }
  const double n = static_cast<double>(samples);
  out.positive /= n;
  out.negative /= n;
  out.mean /= n;
  return out;
}

RunResult load_run(const fs::path& run_dir, cfg::RunConfig& config) {
  config = cfg::parse_config_file(run_dir / "effective_config.json");
  RunResult result{PolicyHandle(config), {}, nlohmann::json::object()};
  result.policy.load(run_dir / "policy.ckpt.json");
  return result;
}

}  // namespace ipl::cli
