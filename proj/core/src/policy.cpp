#include "ipl/policy.hpp"

namespace ipl {

Var StochasticPolicy::entropy_estimate(const nn::BoundParams& p, Var states, const Tensor& noise) const {
  return ad::neg(ad::mean(sample(p, states, noise).logp));
}

Tensor StochasticPolicy::act(const Tensor& states, const Tensor& noise) const {
  ad::Graph g;
  return sample(nn::bind(g, params(), false), g.constant(states), noise).action.value();
}

Tensor StochasticPolicy::log_prob_value(const Tensor& states, const Tensor& actions) const {
  ad::Graph g;
  return log_prob(nn::bind(g, params(), false), g.constant(states), g.constant(actions)).value();
}

}  // namespace ipl
