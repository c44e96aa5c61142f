#pragma once

#include "ipl/params.hpp"

namespace ipl {

/// Reparameterized draw: rows of `action` and `logp` ([B x 1]) follow the
/// rows of the state batch.
struct PolicySample {
  Var action;
  Var logp;
};

/// A policy with a tractable density, sampled as a = f(s, eps) with eps
/// standard normal. Used by the on-policy trainer and behaviour cloning.
class StochasticPolicy {
public:
  virtual ~StochasticPolicy() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  /// Width of the standard-normal noise consumed per sample.
  virtual std::size_t noise_dim() const { return action_dim(); }

  virtual nn::ParamSet& params() = 0;
  virtual const nn::ParamSet& params() const = 0;

  virtual PolicySample sample(const nn::BoundParams& p, Var states, const Tensor& noise) const = 0;
  virtual Var log_prob(const nn::BoundParams& p, Var states, Var actions) const = 0;

  /// -(1/B) sum_i log pi(f(s_i, eps_i) | s_i), differentiable through the
  /// sample path and the density.
  Var entropy_estimate(const nn::BoundParams& p, Var states, const Tensor& noise) const;

  /// Gradient-free helpers on the current parameters.
  Tensor act(const Tensor& states, const Tensor& noise) const;
  Tensor log_prob_value(const Tensor& states, const Tensor& actions) const;
};

}  // namespace ipl
