#pragma once

#include <cstdint>

namespace ipl::rl {

/// Hyperparameters shared by the on-policy and off-policy trainers.
struct TrainConfig {
  double beta = 0.01;  // entropy coefficient
  double gamma = 0.99;
  double lr_policy = 3e-4;
  double lr_critic = 3e-4;
  double lr_classifier = 3e-4;
  std::uint64_t seed = 0;
  std::size_t total_steps = 0;  // environment steps
  std::size_t log_interval = 1000;
  bool record_wall_time = false;
  /// Global gradient-norm clip per update; 0 disables.
  double max_grad_norm = 0.0;

  // on-policy
  std::size_t rollout_length = 2048;
  std::size_t epochs = 10;
  std::size_t minibatch = 64;
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  bool normalize_advantages = false;
  /// Reparameterized entropy draws per minibatch state.
  std::size_t entropy_samples = 1;

  // off-policy
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  std::size_t tau = 500;  // hard target sync period in steps
  std::size_t warmup = 0;  // 0 selects max(batch_size, 1000)
  std::size_t updates_per_step = 1;
  /// Positives for the classifier: fresh current-policy samples at the
  /// batch states (true) or the stored replay actions (false).
  bool classifier_fresh_positives = true;
  /// Entropy values are flagged while the classifier loss exceeds this.
  double classifier_loss_flag = 1.35;
  bool dropout_at_eval = true;

  std::size_t effective_warmup() const { return warmup > 0 ? warmup : (batch_size > 1000 ? batch_size : 1000); }
};

}  // namespace ipl::rl
