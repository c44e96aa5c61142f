#pragma once

#include <filesystem>
#include <memory>

#include "ipl/blackbox_policy.hpp"
#include "ipl/config.hpp"
#include "ipl/environments.hpp"
#include "ipl/flow_policy.hpp"
#include "ipl/gaussian_policy.hpp"

namespace ipl::cli {

/// Owns whichever policy a run trains and samples it at environment width.
class PolicyHandle {
public:
  /// Freshly initialized from the config's specs and seed.
  explicit PolicyHandle(const cfg::RunConfig& config);

  cfg::PolicyKind kind() const noexcept { return kind_; }
  nn::ParamSet& params();
  const nn::ParamSet& params() const;
  /// Null for the blackbox policy.
  StochasticPolicy* density() const noexcept;
  nbp::NoisyMlpPolicy* blackbox() const noexcept { return nbp_.get(); }

  /// One action per state row, truncated to the environment's action width.
  Tensor sample(const Tensor& states, Rng& rng) const;
  /// Sampling actor over `rng`, which must outlive the returned function.
  env::ActFn actor(Rng& rng) const;

  void save(const std::filesystem::path& path) const;
  /// Replaces the parameters, checking the stored spec hash.
  void load(const std::filesystem::path& path);

private:
  cfg::PolicyKind kind_;
  std::size_t env_action_dim_;
  bool dropout_;
  std::unique_ptr<flow::FlowPolicy> nfp_;
  std::unique_ptr<GaussianPolicy> gaussian_;
  std::unique_ptr<nbp::NoisyMlpPolicy> nbp_;
};

}  // namespace ipl::cli
