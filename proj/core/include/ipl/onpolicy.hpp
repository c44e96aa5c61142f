#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "ipl/adam.hpp"
#include "ipl/environments.hpp"
#include "ipl/metrics.hpp"
#include "ipl/mlp.hpp"
#include "ipl/policy.hpp"
#include "ipl/train_config.hpp"

namespace ipl::rl {

/// A training loss or gradient became non-finite.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// State-value regressor V(s): [n, 64, 64, 1] with tanh hidden units.
class ValueFunction {
public:
  ValueFunction(std::size_t state_dim, std::uint64_t seed);
  const nn::MlpSpec& spec() const noexcept { return spec_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  Var forward(const nn::BoundParams& p, Var states) const { return nn::mlp_forward(p, spec_, states); }
  Tensor predict(const Tensor& states) const { return nn::mlp_eval(params_, spec_, states); }

private:
  nn::MlpSpec spec_;
  nn::ParamSet params_;
};

/// Transitions of one rollout with their stored log-probabilities and GAE
/// targets.
struct Rollout {
  Tensor states;   // [T x n]
  Tensor actions;  // [T x m], as sampled (before clipping)
  Tensor old_logp; // [T x 1]
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> episode_returns;  // episodes finished in this rollout
};

struct UpdateReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double first_ratio_mean = 0.0;  // mean ratio on the first minibatch
  double first_ratio_max_dev = 0.0;  // max |ratio - 1| on the first minibatch
  double clip_fraction = 0.0;
  std::size_t updates = 0;
};

/// Clipped-surrogate epochs over shuffled minibatches, jointly minimizing
///   -mean(min(r A, clip(r, 1-eps, 1+eps) A)) - beta H + value_coef * mse
/// where r = exp(log pi(a|s) - old_logp) and H is the reparameterized
/// entropy estimate at the minibatch states.
UpdateReport onpolicy_update(StochasticPolicy& policy, ValueFunction& value, const Rollout& rollout,
                             const TrainConfig& config, nn::Adam& policy_opt, nn::Adam& value_opt, Rng& rng);

class OnPolicyTrainer {
public:
  OnPolicyTrainer(env::EnvSpec env, StochasticPolicy& policy, TrainConfig config);

  /// Mirror metrics to a JSONL file and save a checkpoint there on divergence.
  void set_metrics_path(const std::filesystem::path& path) { log_ = MetricLog(path); }
  void set_crash_checkpoint(const std::filesystem::path& path) { crash_path_ = path; }

  /// Collects `steps` transitions with the current policy.
  Rollout collect(std::size_t steps);
  /// total_steps / rollout_length iterations of collect + update.
  void run();

  const MetricLog& log() const noexcept { return log_; }
  const ValueFunction& value() const noexcept { return value_; }
  std::size_t steps_done() const noexcept { return steps_; }
  const UpdateReport& last_report() const noexcept { return last_; }

private:
  env::EnvSpec spec_;
  StochasticPolicy& policy_;
  TrainConfig config_;
  env::Env env_;
  Rng rng_;
  ValueFunction value_;
  nn::Adam policy_opt_;
  nn::Adam value_opt_;
  MetricLog log_;
  WallClock clock_;
  std::optional<std::filesystem::path> crash_path_;
  std::vector<double> obs_;
  double episode_return_ = 0.0;
  std::size_t steps_ = 0;
  UpdateReport last_;
};

}  // namespace ipl::rl
