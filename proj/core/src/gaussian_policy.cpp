#include "ipl/gaussian_policy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ipl {

std::string GaussianSpec::describe() const {
  std::ostringstream out;
  out << "gaussian(n=" << state_dim << ",m=" << action_dim << ",hidden=";
  for (std::size_t i = 0; i < hidden.size(); ++i) out << (i ? "-" : "") << hidden[i];
  out << ")";
  return out.str();
}

namespace {
nn::MlpSpec mean_spec(const GaussianSpec& spec) {
  std::vector<std::size_t> widths{spec.state_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.action_dim);
  return nn::MlpSpec{widths, nn::Activation::Tanh, nn::Activation::Identity};
}

Var log_normalizer(Var log_std, std::size_t m) {
  // sum_j log_std_j + (m/2) log(2 pi), as a [1 x 1] scalar
  const double c = 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
  return ad::add(ad::sum(log_std), log_std.graph->scalar(c));
}
}  // namespace

GaussianPolicy::GaussianPolicy(GaussianSpec spec, std::uint64_t seed) : spec_(std::move(spec)), mean_(mean_spec(spec_)) {
  params_ = nn::ParamSet(spec_.describe());
  params_.merge("mean.", nn::init_params(mean_, seed));
  params_.add("log_std", Tensor({1, spec_.action_dim}, spec_.log_std_init));
}

GaussianPolicy::GaussianPolicy(GaussianSpec spec, nn::ParamSet params)
    : spec_(std::move(spec)), mean_(mean_spec(spec_)), params_(std::move(params)) {
  if (params_.spec() != spec_.describe()) throw std::invalid_argument("Gaussian policy parameters do not match spec");
  if (!params_.contains("log_std") || params_.at("log_std").shape() != Shape{1, spec_.action_dim}) {
    throw std::invalid_argument("Gaussian policy parameters lack log_std");
  }
}

PolicySample GaussianPolicy::sample(const nn::BoundParams& p, Var states, const Tensor& noise) const {
  ad::Graph& g = *states.graph;
  if (noise.rank() != 2 || noise.cols() != spec_.action_dim || noise.rows() != states.value().rows()) {
    throw ShapeError("Gaussian sample: noise must be [B x m] matching the state batch");
  }
  const Var eps = g.constant(noise);
  const Var log_std = p["log_std"];
  const Var action = ad::add(nn::mlp_forward(p.sub("mean."), mean_, states), ad::mul(eps, ad::exp(log_std)));
  const Var logp =
      ad::sub(ad::scale(ad::sum_rows(ad::square(eps)), -0.5), log_normalizer(log_std, spec_.action_dim));
  return {action, logp};
}

Var GaussianPolicy::log_prob(const nn::BoundParams& p, Var states, Var actions) const {
  const Var log_std = p["log_std"];
  const Var z = ad::mul(ad::sub(actions, nn::mlp_forward(p.sub("mean."), mean_, states)), ad::exp(ad::neg(log_std)));
  return ad::sub(ad::scale(ad::sum_rows(ad::square(z)), -0.5), log_normalizer(log_std, spec_.action_dim));
}

}  // namespace ipl
