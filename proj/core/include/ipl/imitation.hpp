#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "ipl/adam.hpp"
#include "ipl/blackbox_policy.hpp"
#include "ipl/entropy_estimator.hpp"
#include "ipl/environments.hpp"
#include "ipl/metrics.hpp"
#include "ipl/policy.hpp"

namespace ipl::imit {

struct DemoDataset {
  Tensor states;   // [N x n]
  Tensor actions;  // [N x m]
  std::string expert;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;

  std::size_t size() const { return states.rows(); }
  void validate() const;
  /// Uniformly drawn rows (with replacement).
  std::pair<Tensor, Tensor> sample(std::size_t batch, Rng& rng) const;
};

/// Expert behaviour: `begin` runs at every episode start.
struct Expert {
  std::string description;
  std::function<void()> begin;
  env::ActFn act;
};

/// The two-mode expert of the axis task.
Expert axis_expert(const env::EnvSpec& spec, double sigma, std::uint64_t seed);

/// Rolls the expert for `episodes` episodes and flattens (s, a) pairs.
/// Actions are recorded as the expert emitted them, before the environment
/// clips them to the box. Clipping would put atoms at the box edges.
DemoDataset generate_expert_dataset(const env::EnvSpec& spec, const Expert& expert, std::size_t episodes,
                                    std::uint64_t seed);

/// CSV (s..., a...) plus `<path>.meta.json` with expert, seed, episodes and
/// dimensions.
void save_dataset(const DemoDataset& data, const std::filesystem::path& csv_path);
DemoDataset load_dataset(const std::filesystem::path& csv_path);

/// Appends `extra` independent N(0, 1) columns to each action row; used to
/// lift scalar actions into a flow of dimension >= 2.
Tensor augment_actions(const Tensor& actions, std::size_t extra, Rng& rng);

/// One Adam step on -(1/B) sum log pi(a|s); returns the loss before the step.
double bc_mle_update(StochasticPolicy& policy, nn::Adam& opt, const Tensor& states, const Tensor& actions);

struct GanReport {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

/// Discriminator step (expert pairs positive, policy pairs negative) then a
/// generator step ascending log sigmoid(D(s, f(s, eps))) through the sample
/// path. Losses are those before each step.
GanReport gan_imitation_update(nbp::NoisyMlpPolicy& policy, ent::DensityClassifier& disc, nn::Adam& g_opt,
                               nn::Adam& d_opt, const Tensor& expert_states, const Tensor& expert_actions, Rng& rng);

struct ImitationConfig {
  std::size_t steps = 3000;
  std::size_t batch = 256;
  double lr = 1e-3;
  double d_lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t log_interval = 100;
  /// Extra N(0, 1) action columns for the behaviour-cloned policy.
  std::size_t augment = 0;
};

/// Behaviour cloning loop; logs "nll" per interval.
void train_bc(StochasticPolicy& policy, const DemoDataset& data, const ImitationConfig& config,
              rl::MetricLog* log = nullptr);
/// Adversarial imitation loop; logs d_loss as classifier_loss and "g_loss".
void train_gan(nbp::NoisyMlpPolicy& policy, ent::DensityClassifier& disc, const DemoDataset& data,
               const ImitationConfig& config, rl::MetricLog* log = nullptr);

struct Coverage {
  std::vector<double> fractions;  // per descriptor
  double other = 0.0;             // trajectories matching none
};

using ModeDescriptor = std::function<bool(const env::Trajectory&)>;

/// Fraction of trajectories matching each (disjoint) descriptor.
Coverage mode_coverage(const std::vector<env::Trajectory>& trajectories, const std::vector<ModeDescriptor>& modes);

/// Descriptors "ended at +bound" and "ended at -bound".
std::vector<ModeDescriptor> axis_modes(double bound);

}  // namespace ipl::imit
