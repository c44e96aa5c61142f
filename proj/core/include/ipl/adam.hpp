#pragma once

#include <cstdint>

#include "ipl/params.hpp"

namespace ipl::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates per parameter name and the step count.
struct AdamState {
  std::uint64_t t = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

/// One bias-corrected Adam update. `grads` must cover every parameter with
/// matching shapes; non-finite entries raise DomainError before anything is
/// modified.
void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, const AdamConfig& config);

/// Scales every gradient by min(1, max_norm / ||g||_2) over the whole map.
/// Returns the norm before scaling.
double clip_global_norm(GradMap& grads, double max_norm);

/// Convenience pairing of a config with its state.
class Adam {
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(ParamSet& params, const GradMap& grads) { adam_step(params, grads, state_, config_); }
  const AdamState& state() const noexcept { return state_; }
  AdamConfig& config() noexcept { return config_; }

private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace ipl::nn
