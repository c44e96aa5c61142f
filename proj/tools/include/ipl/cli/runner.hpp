#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "ipl/cli/policy_handle.hpp"
#include "ipl/imitation.hpp"
#include "ipl/metrics.hpp"

namespace ipl::cli {

struct RunResult {
  PolicyHandle policy;
  rl::MetricLog log;
  nlohmann::json summary;
};

/// Trains with the configured algorithm. With a run directory, metrics are
/// mirrored to metrics.jsonl and the policy lands in policy.ckpt.json plus
/// eval.episodes evaluation rollouts in trajectories.csv.
RunResult run_train(const cfg::RunConfig& config, const std::optional<std::filesystem::path>& dir = {});

/// Expert demonstrations on the configured environment, then behaviour
/// cloning or adversarial imitation. Writes expert.csv besides the train
/// artifacts.
RunResult run_imitate(const cfg::RunConfig& config, const std::optional<std::filesystem::path>& dir = {});

/// The scripted expert for an environment (bimodal-axis only).
imit::Expert expert_for(const cfg::RunConfig& config);

std::vector<env::Trajectory> evaluate_rollouts(const env::EnvSpec& spec, const PolicyHandle& policy,
                                               std::size_t episodes, std::uint64_t seed);

/// Per-goal counts of episodes that ended inside a goal's radius.
std::vector<std::size_t> goal_counts(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories);
std::size_t goals_reached(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories);

/// Mean return plus environment-specific coverage figures.
nlohmann::json rollout_summary(const env::EnvSpec& spec, const std::vector<env::Trajectory>& trajectories);

struct BanditStats {
  std::size_t samples = 0;
  double correlation = 0.0;
  /// Correlation of exp(r(a) / beta) restricted to the box, by quadrature.
  double target_correlation = 0.0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

double target_correlation(const env::BanditParams& params, double beta, std::size_t grid = 400);
BanditStats bandit_stats(const env::EnvSpec& spec, const PolicyHandle& policy, std::size_t samples,
                         std::uint64_t seed, Tensor* draws = nullptr);

struct SignMass {
  double positive = 0.0;  // share of actions > 0
  double negative = 0.0;  // share of actions < 0
  double mean = 0.0;
};

/// Distribution of the first action coordinate at one state.
SignMass sign_mass(const PolicyHandle& policy, const std::vector<double>& state, std::size_t samples,
                   std::uint64_t seed);

/// Reads effective_config.json and policy.ckpt.json from a finished run.
RunResult load_run(const std::filesystem::path& run_dir, cfg::RunConfig& config);

}  // namespace ipl::cli
