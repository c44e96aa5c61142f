#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ipl/rng.hpp"

namespace ipl::env {

enum class EnvKind { GaussianBandit, MultiGoal2d, BimodalAxis, TabularRandom };

const char* kind_name(EnvKind kind);
EnvKind parse_kind(const std::string& name);

struct BanditParams {
  /// Row-major 2x2 covariance; reward is -a' inv(sigma) a.
  std::vector<double> sigma{1.0, 0.95, 0.95, 1.0};
  /// Temperature of the reference maximum-entropy policy.
  double beta_opt = 0.1;
};

struct MultiGoalParams {
  std::vector<double> goals{5.0, 0.0, -5.0, 0.0, 0.0, 5.0, 0.0, -5.0};  // 4 x 2
  double step_scale = 0.1;
  double noise_sigma = 0.01;
  double goal_radius = 0.5;
  double init_sigma = 0.1;
};

struct AxisParams {
  double bound = 10.0;
};

/// One-hot states of a random finite MDP; the scalar action in [-1, 1] is
/// binned uniformly into nA discrete actions.
struct TabularEnvParams {
  std::size_t states = 5;
  std::size_t actions = 3;
  std::uint64_t mdp_seed = 0;
};

struct EnvSpec {
  EnvKind kind = EnvKind::GaussianBandit;
  std::size_t state_dim = 1;
  std::size_t action_dim = 2;
  std::vector<double> action_low{-1.0, -1.0};
  std::vector<double> action_high{1.0, 1.0};
  std::size_t horizon = 1;
  /// Observation noise standard deviation; 0 leaves observations exact.
  double obs_noise = 0.0;
  BanditParams bandit;
  MultiGoalParams multigoal;
  AxisParams axis;
  TabularEnvParams tabular;

  void validate() const;
};

/// Default settings for a kind.
EnvSpec make_spec(EnvKind kind);
/// Copy of `spec` whose observations carry i.i.d. N(0, sigma^2) noise.
EnvSpec noisy_wrap(EnvSpec spec, double sigma);

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  /// Terminal: no bootstrapping past this transition.
  bool terminal = false;
  /// Terminal or horizon reached.
  bool done = false;
};

/// Initial true state; deterministic in `rng`.
std::vector<double> env_reset(const EnvSpec& spec, Rng& rng);
/// Pure transition of the true state. The action is clipped to the box
/// first; the bandit reward alone scores the raw action. `t` is the index of
/// this step within the episode.
StepResult env_step(const EnvSpec& spec, const std::vector<double>& state, std::vector<double> action, std::size_t t,
                    Rng& rng);

/// Stateful episode runner holding the true state; observations pass
/// through the observation-noise channel.
class Env {
public:
  Env(EnvSpec spec, std::uint64_t seed);

  const EnvSpec& spec() const noexcept { return spec_; }
  std::vector<double> reset();
  /// Returns the observed next state in `state`.
  StepResult step(const std::vector<double>& action);
  const std::vector<double>& true_state() const noexcept { return state_; }
  std::size_t t() const noexcept { return t_; }

private:
  std::vector<double> observe(const std::vector<double>& s);

  EnvSpec spec_;
  Rng dyn_rng_;
  Rng obs_rng_;
  std::vector<double> state_;
  std::size_t t_ = 0;
};

struct TrajectoryStep {
  std::vector<double> s;  // observation the action was chosen on
  std::vector<double> a;  // action as executed (clipped)
  double r = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::vector<double> final_state;  // true state after the last step
  double total_reward() const;
};

using ActFn = std::function<std::vector<double>(const std::vector<double>& observation)>;

/// Runs one episode to `done`.
Trajectory rollout(Env& env, const ActFn& act);

/// CSV with header episode,t,s0..,a0..,r,done.
void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& episodes);

/// Reward -a' inv(sigma) a.
double bandit_reward(const BanditParams& p, const std::vector<double>& a);
/// log of exp(-a' inv(sigma) a / beta) / Z on the box [-1, 1]^2, with Z from
/// a midpoint grid of `grid` x `grid` cells.
double bandit_optimal_logdensity(const BanditParams& p, double beta, const std::vector<double>& a, std::size_t grid = 400);
double bandit_log_normalizer(const BanditParams& p, double beta, std::size_t grid = 400);

/// Expert for the axis task: commits to +bound or -bound with probability
/// 1/2 at reset and moves toward it with clamp(target - s, -1, 1) plus
/// N(0, sigma^2) noise.
class AxisExpert {
public:
  AxisExpert(double bound, double sigma, std::uint64_t seed) : bound_(bound), sigma_(sigma), rng_(seed) {}
  void begin_episode();
  std::vector<double> operator()(const std::vector<double>& observation);
  double target() const noexcept { return target_; }

private:
  double bound_;
  double sigma_;
  Rng rng_;
  double target_ = 0.0;
};

/// Pearson correlation of two columns of a sample matrix [N x m].
double sample_correlation(const Tensor& samples, std::size_t i = 0, std::size_t j = 1);

/// Index of the goal within goal_radius of a point, or -1.
int goal_hit(const MultiGoalParams& p, const std::vector<double>& position);

}  // namespace ipl::env
