#pragma once

#include <cstdint>

#include "ipl/mlp.hpp"
#include "ipl/policy.hpp"

namespace ipl {

/// Factorized Gaussian: a = mu(s) + exp(log_std) * eps with a
/// state-independent diagonal scale. Baseline for the flow policy.
struct GaussianSpec {
  std::size_t state_dim = 1;
  std::size_t action_dim = 2;
  std::vector<std::size_t> hidden{64, 64};
  double log_std_init = 0.0;

  std::string describe() const;
};

class GaussianPolicy final : public StochasticPolicy {
public:
  GaussianPolicy(GaussianSpec spec, std::uint64_t seed);
  GaussianPolicy(GaussianSpec spec, nn::ParamSet params);

  const GaussianSpec& spec() const noexcept { return spec_; }
  std::size_t state_dim() const override { return spec_.state_dim; }
  std::size_t action_dim() const override { return spec_.action_dim; }
  nn::ParamSet& params() override { return params_; }
  const nn::ParamSet& params() const override { return params_; }

  PolicySample sample(const nn::BoundParams& p, Var states, const Tensor& noise) const override;
  Var log_prob(const nn::BoundParams& p, Var states, Var actions) const override;

private:
  GaussianSpec spec_;
  nn::MlpSpec mean_;
  nn::ParamSet params_;
};

}  // namespace ipl
