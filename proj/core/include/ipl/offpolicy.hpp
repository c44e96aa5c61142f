#pragma once

#include <filesystem>
#include <optional>

#include "ipl/blackbox_policy.hpp"
#include "ipl/entropy_estimator.hpp"
#include "ipl/onpolicy.hpp"
#include "ipl/replay_buffer.hpp"

namespace ipl::rl {

/// Q(s, a): [n + m, 64, 64, 1] ReLU network over the concatenation.
class Critic {
public:
  Critic(std::size_t state_dim, std::size_t action_dim, std::uint64_t seed);
  const nn::MlpSpec& spec() const noexcept { return spec_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  Var forward(const nn::BoundParams& p, Var states, Var actions) const;

private:
  nn::MlpSpec spec_;
  nn::ParamSet params_;
};

/// One Adam step on mean (Q(s,a) - r - gamma (1 - done) Q_target(s', a'))^2
/// with a' drawn from the target policy with fresh per-row noise. Returns
/// the loss before the step.
double td_critic_update(Critic& critic, nn::Adam& opt, const nbp::NoisyMlpPolicy& target_policy,
                        const nn::ParamSet& target_critic, const Batch& batch, double gamma, Rng& rng,
                        double max_grad_norm = 0.0);

/// Loss of the TD step without updating, for inspection.
double td_loss(const Critic& critic, const nn::ParamSet& target_critic, const Tensor& next_actions, const Batch& batch,
               double gamma);

struct PolicyUpdateReport {
  double q_mean = 0.0;
  double entropy_surrogate = 0.0;  // -mean c(s, a)
  double loss = 0.0;
};

/// Ascends mean Q(s, f(s, eps)) + beta * (-mean c(s, f(s, eps))) through the
/// sample path; critic and classifier are frozen.
PolicyUpdateReport pathwise_policy_update(nbp::NoisyMlpPolicy& policy, nn::Adam& opt, const Critic& critic,
                                          const ent::DensityClassifier& clf, const Tensor& states, double beta,
                                          Rng& rng, double max_grad_norm = 0.0);

/// The off-policy loop for the blackbox policy: act, store, then per update
/// critic step, classifier step, policy step; hard target sync every tau
/// environment steps.
class OffPolicyTrainer {
public:
  OffPolicyTrainer(env::EnvSpec env, nbp::NbpSpec policy_spec, TrainConfig config);

  void set_metrics_path(const std::filesystem::path& path) { log_ = MetricLog(path); }
  void set_crash_checkpoint(const std::filesystem::path& path) { crash_path_ = path; }

  /// Runs `steps` environment steps (default: the configured total).
  void run(std::optional<std::size_t> steps = std::nullopt);

  nbp::NoisyMlpPolicy& policy() noexcept { return policy_; }
  const nbp::NoisyMlpPolicy& target_policy() const noexcept { return target_policy_; }
  const Critic& critic() const noexcept { return critic_; }
  const nn::ParamSet& target_critic() const noexcept { return target_critic_; }
  const ent::DensityClassifier& classifier() const noexcept { return clf_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  const MetricLog& log() const noexcept { return log_; }
  std::size_t steps_done() const noexcept { return steps_; }
  std::size_t updates_done() const noexcept { return updates_; }

private:
  void update();
  void emit(std::size_t step);

  env::EnvSpec spec_;
  TrainConfig config_;
  env::Env env_;
  Rng rng_;
  nbp::NoisyMlpPolicy policy_;
  nbp::NoisyMlpPolicy target_policy_;
  Critic critic_;
  nn::ParamSet target_critic_;
  ent::DensityClassifier clf_;
  nn::Adam policy_opt_;
  nn::Adam critic_opt_;
  nn::Adam clf_opt_;
  ReplayBuffer buffer_;
  MetricLog log_;
  WallClock clock_;
  EpisodeTracker episodes_;
  std::optional<std::filesystem::path> crash_path_;
  std::vector<double> obs_;
  std::size_t steps_ = 0;
  std::size_t updates_ = 0;
  double last_critic_loss_ = 0.0;
  double last_clf_loss_ = 0.0;
  double last_entropy_ = 0.0;
  bool have_losses_ = false;
};

}  // namespace ipl::rl
