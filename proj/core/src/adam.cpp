#include "ipl/adam.hpp"

#include <cmath>

namespace ipl::nn {

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, const AdamConfig& config) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
    if (it->second.shape() != p.shape()) throw ShapeError("adam_step: gradient shape mismatch for '" + name + "'");
    if (!it->second.all_finite()) throw DomainError("adam_step: non-finite gradient for '" + name + "'");
  }

  state.t += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : params) {
    const auto& g = grads.at(name).values();
    auto& m = state.m.try_emplace(name, Tensor(p.shape())).first->second.values();
    auto& v = state.v.try_emplace(name, Tensor(p.shape())).first->second.values();
    auto& w = p.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      w[i] -= config.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
    }
  }
}

double clip_global_norm(GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.values()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (double& x : g.values()) x *= f;
    }
  }
  return norm;
}

}  // namespace ipl::nn
