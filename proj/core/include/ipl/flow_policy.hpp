#pragma once

#include <cstdint>
#include <utility>

#include "ipl/mlp.hpp"
#include "ipl/policy.hpp"

namespace ipl::flow {

/// Architecture of a coupling-layer flow policy over R^m conditioned on R^n.
struct FlowSpec {
  std::size_t state_dim = 1;
  std::size_t action_dim = 2;
  std::size_t layers = 4;             // K
  std::size_t hidden = 3;             // k, width of the s/t hidden layers
  std::size_t st_hidden_layers = 3;   // 0 gives affine s/t maps
  std::vector<std::size_t> embed_hidden{64, 64};
  /// s = B * tanh(raw / B) when B > 0; raw s otherwise.
  double scale_bound = 5.0;

  void validate() const;
  /// d = floor(m / 2); m = 2 gives 1.
  std::size_t split() const { return action_dim / 2; }
  std::string describe() const;
};

/// One affine coupling transform. Odd-indexed layers reverse their input
/// before splitting.
struct CouplingLayer {
  std::size_t m = 2;
  std::size_t d = 1;
  bool reverse = false;
  nn::MlpSpec s_net;
  nn::MlpSpec t_net;
  double scale_bound = 5.0;
};

CouplingLayer make_layer(const FlowSpec& spec, std::size_t index);

struct CouplingResult {
  Var y;
  Var logdet;  // [B x 1]
};

/// y_{1:d} = x'_{1:d}, y_{d+1:m} = x'_{d+1:m} * exp(s(x'_{1:d})) + t(x'_{1:d})
/// with x' the (possibly reversed) input; logdet = sum_j s_j.
CouplingResult coupling_forward(const CouplingLayer& layer, const nn::BoundParams& p, Var x);
/// Inverse map; `logdet` is that of the forward transform at the recovered x.
CouplingResult coupling_inverse(const CouplingLayer& layer, const nn::BoundParams& p, Var y);

/// log N(eps; 0, I) per row, [B x 1].
Var standard_normal_logpdf(Var eps);

class FlowPolicy final : public StochasticPolicy {
public:
  FlowPolicy(FlowSpec spec, std::uint64_t seed);
  /// Adopts existing parameters; their spec string must equal spec.describe().
  FlowPolicy(FlowSpec spec, nn::ParamSet params);

  const FlowSpec& spec() const noexcept { return spec_; }
  std::size_t state_dim() const override { return spec_.state_dim; }
  std::size_t action_dim() const override { return spec_.action_dim; }
  nn::ParamSet& params() override { return params_; }
  const nn::ParamSet& params() const override { return params_; }
  const CouplingLayer& layer(std::size_t i) const { return layers_.at(i); }
  const nn::MlpSpec& embed_spec() const noexcept { return embed_; }

  /// a = g_K o ... o g_2 (L(s) + g_1(eps)); logp = log rho0(eps) - sum logdet.
  PolicySample sample(const nn::BoundParams& p, Var states, const Tensor& noise) const override;
  /// Inverts the stack back to eps and applies the change of variables.
  Var log_prob(const nn::BoundParams& p, Var states, Var actions) const override;
  /// The recovered base noise for given (state, action) rows.
  Var invert(const nn::BoundParams& p, Var states, Var actions, Var* logdet_total = nullptr) const;

private:
  void build();

  FlowSpec spec_;
  nn::MlpSpec embed_;
  std::vector<CouplingLayer> layers_;
  nn::ParamSet params_;
};

/// Monte-Carlo entropy of pi(.|state) from `samples` draws with a seeded
/// noise stream; returns the estimate and its standard error.
std::pair<double, double> entropy_monte_carlo(const StochasticPolicy& policy, const Tensor& state, std::size_t samples,
                                              std::uint64_t seed);

}  // namespace ipl::flow
