#pragma once

#include <cstdint>
#include <map>

#include "ipl/mlp.hpp"

namespace ipl::nbp {

/// Parameter-noise policy: every body parameter is drawn as
/// mu + softplus(rho) * eps, and a Bernoulli keep-mask multiplies the last
/// hidden layer. Actions are tanh outputs rescaled to the action box.
struct NbpSpec {
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  std::vector<std::size_t> hidden{64, 64};
  bool layer_norm = true;
  double dropout_p = 0.1;
  double rho_init = -4.0;
  std::vector<double> action_low{-1.0, -1.0};
  std::vector<double> action_high{1.0, 1.0};

  void validate() const;
  nn::MlpSpec body() const;
  std::string describe() const;
};

Tensor sigma_from_rho(const Tensor& rho);

/// Noise for one forward pass. With `batch == 0` every tensor is shaped like
/// its mean parameter and shared by all rows; otherwise each row has its own
/// draw, every tensor [B x out] (weights perturb in output space), mask [B x h].
struct NbpNoise {
  std::size_t batch = 0;
  std::map<std::string, Tensor> eps;
  Tensor mask;
};

class NoisyMlpPolicy {
public:
  NoisyMlpPolicy(NbpSpec spec, std::uint64_t seed);
  NoisyMlpPolicy(NbpSpec spec, nn::ParamSet params);

  const NbpSpec& spec() const noexcept { return spec_; }
  const nn::MlpSpec& body() const noexcept { return body_; }
  /// Names "mu.<p>" and "rho.<p>" for every body parameter <p>.
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  /// Shared noise (batch == 0) or per-row noise for `batch` rows.
  NbpNoise draw_noise(Rng& rng, std::size_t batch, bool dropout = true) const;
  /// Noise with eps = 0 and an all-ones mask: the mean network.
  NbpNoise zero_noise() const;

  /// Actions for a state batch; dispatches on noise.batch.
  Var sample(const nn::BoundParams& p, Var states, const NbpNoise& noise) const;
  /// Gradient-free action rows with fresh noise per row.
  Tensor act(const Tensor& states, Rng& rng, bool dropout = true) const;

private:
  Var sample_shared(const nn::BoundParams& p, Var states, const NbpNoise& noise) const;
  Var sample_per_row(const nn::BoundParams& p, Var states, const NbpNoise& noise) const;
  Var to_box(Var y) const;

  NbpSpec spec_;
  nn::MlpSpec body_;
  nn::ParamSet params_;
};

}  // namespace ipl::nbp
