#include "ipl/blackbox_policy.hpp"

#include <cmath>
#include <sstream>

#include "ipl/mlp_detail.hpp"

namespace ipl::nbp {

void NbpSpec::validate() const {
  if (state_dim == 0 || action_dim == 0) throw std::invalid_argument("NBP dimensions must be positive");
  if (hidden.empty()) throw std::invalid_argument("NBP needs at least one hidden layer");
  if (action_low.size() != action_dim || action_high.size() != action_dim) {
    throw std::invalid_argument("NBP action box must have action_dim bounds");
  }
  for (std::size_t i = 0; i < action_dim; ++i) {
    if (!(std::isfinite(action_low[i]) && std::isfinite(action_high[i]) && action_low[i] < action_high[i])) {
      throw std::invalid_argument("NBP action box bounds must be finite with low < high");
    }
  }
  if (!std::isfinite(rho_init)) throw std::invalid_argument("NBP rho_init must be finite");
  body().validate();
}

nn::MlpSpec NbpSpec::body() const {
  std::vector<std::size_t> widths{state_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(action_dim);
  return nn::MlpSpec{widths, nn::Activation::Relu, nn::Activation::Tanh, layer_norm, dropout_p};
}

std::string NbpSpec::describe() const {
  std::ostringstream out;
  out << "nbp(" << body().describe() << ",box=";
  for (std::size_t i = 0; i < action_dim; ++i) out << (i ? ";" : "") << action_low[i] << ":" << action_high[i];
  out << ")";
  return out.str();
}

Tensor sigma_from_rho(const Tensor& rho) {
  ad::Graph g;
  return ad::softplus(g.constant(rho)).value();
}

NoisyMlpPolicy::NoisyMlpPolicy(NbpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  body_ = spec_.body();
  params_ = nn::ParamSet(spec_.describe());
  const nn::ParamSet mu = nn::init_params(body_, seed);
  params_.merge("mu.", mu);
  for (const auto& [name, t] : mu) params_.add("rho." + name, Tensor(t.shape(), spec_.rho_init));
}

NoisyMlpPolicy::NoisyMlpPolicy(NbpSpec spec, nn::ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  body_ = spec_.body();
  if (params_.spec() != spec_.describe()) {
    throw std::invalid_argument("NBP parameters were produced by '" + params_.spec() + "', expected '" +
                                spec_.describe() + "'");
  }
  const nn::ParamSet mu = nn::init_params(body_, 0);
  if (params_.size() != 2 * mu.size()) throw std::invalid_argument("NBP parameter set has the wrong size");
  for (const auto& [name, t] : mu) {
    for (const char* prefix : {"mu.", "rho."}) {
      if (!params_.contains(prefix + name) || params_.at(prefix + name).shape() != t.shape()) {
        throw std::invalid_argument(std::string("NBP parameters lack a compatible '") + prefix + name + "'");
      }
    }
  }
}

NbpNoise NoisyMlpPolicy::draw_noise(Rng& rng, std::size_t batch, bool dropout) const {
  NbpNoise noise;
  noise.batch = batch;
  for (const auto& [name, t] : params_) {
    if (name.rfind("mu.", 0) != 0) continue;
    const std::string base = name.substr(3);
    // Per-row weight noise lives in output space, see ad::noisy_matmul.
    const Shape shape = batch > 0 ? Shape{batch, t.cols()} : t.shape();
    noise.eps.emplace(base, rng.normal_tensor(shape));
  }
  const Shape mask_shape{batch == 0 ? 1 : batch, body_.last_hidden_width()};
  noise.mask = dropout ? nn::dropout_mask(mask_shape, spec_.dropout_p, rng) : Tensor(mask_shape, 1.0);
  return noise;
}

NbpNoise NoisyMlpPolicy::zero_noise() const {
  NbpNoise noise;
  for (const auto& [name, t] : params_) {
    if (name.rfind("mu.", 0) == 0) noise.eps.emplace(name.substr(3), Tensor(t.shape()));
  }
  noise.mask = Tensor({1, body_.last_hidden_width()}, 1.0);
  return noise;
}

Var NoisyMlpPolicy::to_box(Var y) const {
  std::vector<double> center(spec_.action_dim);
  std::vector<double> half(spec_.action_dim);
  for (std::size_t i = 0; i < spec_.action_dim; ++i) {
    center[i] = 0.5 * (spec_.action_high[i] + spec_.action_low[i]);
    half[i] = 0.5 * (spec_.action_high[i] - spec_.action_low[i]);
  }
  ad::Graph& g = *y.graph;
  return ad::add(ad::mul(y, g.constant(Tensor::row(half))), g.constant(Tensor::row(center)));
}

Var NoisyMlpPolicy::sample(const nn::BoundParams& p, Var states, const NbpNoise& noise) const {
  if (noise.eps.size() * 2 != params_.size()) throw ShapeError("NBP noise does not cover every parameter");
  return noise.batch == 0 ? sample_shared(p, states, noise) : sample_per_row(p, states, noise);
}

Var NoisyMlpPolicy::sample_shared(const nn::BoundParams& p, Var states, const NbpNoise& noise) const {
  ad::Graph& g = *states.graph;
  nn::BoundParams theta;
  for (const auto& [name, eps] : noise.eps) {
    const Var mu = p["mu." + name];
    if (eps.shape() != mu.shape()) {
      throw ShapeError("NBP noise for '" + name + "' is " + shape_string(eps.shape()) + ", expected " +
                       shape_string(mu.shape()));
    }
    theta.set(name, ad::add(mu, ad::mul(ad::softplus(p["rho." + name]), g.constant(eps))));
  }
  return to_box(nn::mlp_forward(theta, body_, states, &noise.mask));
}

Var NoisyMlpPolicy::sample_per_row(const nn::BoundParams& p, Var states, const NbpNoise& noise) const {
  ad::Graph& g = *states.graph;
  const std::size_t batch = states.value().rows();
  if (noise.batch != batch) throw ShapeError("NBP per-row noise batch does not match the state batch");
  auto vector_param = [&](const std::string& name) {
    const Tensor& eps = noise.eps.at(name);
    const Var mu = p["mu." + name];
    if (eps.shape() != Shape{batch, mu.value().cols()}) throw ShapeError("NBP per-row noise for '" + name + "'");
    return ad::add(mu, ad::mul(g.constant(eps), ad::softplus(p["rho." + name])));
  };
  nn::LayerOps ops;
  ops.affine = [&](std::size_t i, Var x) {
    const std::string k = std::to_string(i);
    const Var w = ad::noisy_matmul(x, p["mu.w" + k], ad::softplus(p["rho.w" + k]), noise.eps.at("w" + k));
    return ad::add(w, vector_param("b" + k));
  };
  ops.norm_affine = [&](std::size_t i, Var x) {
    const std::string k = "ln" + std::to_string(i);
    return ad::add(ad::mul(x, vector_param(k + ".gain")), vector_param(k + ".bias"));
  };
  return to_box(nn::mlp_forward_layers(body_, states, &noise.mask, ops));
}

Tensor NoisyMlpPolicy::act(const Tensor& states, Rng& rng, bool dropout) const {
  ad::Graph g;
  const NbpNoise noise = draw_noise(rng, states.rows(), dropout);
  return sample(nn::bind(g, params_, false), g.constant(states), noise).value();
}

}  // namespace ipl::nbp
