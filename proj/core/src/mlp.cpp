#include "ipl/mlp.hpp"

#include <cmath>
#include <sstream>

#include "ipl/mlp_detail.hpp"

namespace ipl::nn {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("MlpSpec needs at least two widths");
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("MlpSpec widths must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("MlpSpec dropout_p must lie in [0, 1)");
  if (output == Activation::Relu) throw std::invalid_argument("MlpSpec output activation must be identity or tanh");
}

std::size_t MlpSpec::last_hidden_width() const { return widths[widths.size() - 2]; }

std::size_t MlpSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    n += widths[i] * widths[i + 1] + widths[i + 1];
    if (layer_norm && i + 2 < widths.size()) n += 2 * widths[i + 1];
  }
  return n;
}

std::string MlpSpec::describe() const {
  std::ostringstream out;
  out << "mlp(widths=";
  for (std::size_t i = 0; i < widths.size(); ++i) out << (i ? "-" : "") << widths[i];
  out << ",hidden=" << activation_name(hidden) << ",output=" << activation_name(output)
      << ",layer_norm=" << (layer_norm ? 1 : 0) << ",dropout=" << dropout_p << ")";
  return out.str();
}

ParamSet init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamSet params(spec.describe());
  for (std::size_t i = 0; i < spec.layers(); ++i) {
    const std::size_t in = spec.widths[i];
    const std::size_t out = spec.widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    params.add("w" + std::to_string(i), rng.uniform_tensor({in, out}, -limit, limit));
    params.add("b" + std::to_string(i), Tensor({1, out}));
    if (spec.layer_norm && i + 1 < spec.layers()) {
      params.add("ln" + std::to_string(i) + ".gain", Tensor({1, out}, 1.0));
      params.add("ln" + std::to_string(i) + ".bias", Tensor({1, out}));
    }
  }
  return params;
}

namespace {
Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Identity: return x;
  }
  return x;
}
}  // namespace

Var mlp_forward_layers(const MlpSpec& spec, Var input, const Tensor* dropout_mask, const LayerOps& ops) {
  spec.validate();
  if (input.value().rank() != 2 || input.value().cols() != spec.widths.front()) {
    throw ShapeError("mlp_forward: input " + shape_string(input.shape()) + " does not match width " +
                     std::to_string(spec.widths.front()));
  }
  if (dropout_mask != nullptr) {
    const std::size_t h = spec.last_hidden_width();
    const Shape& ms = dropout_mask->shape();
    const bool ok = (dropout_mask->size() == h && (ms.size() == 1 || (ms.size() == 2 && ms[0] == 1))) ||
                    (ms.size() == 2 && ms[1] == h && ms[0] == input.value().rows());
    if (!ok || spec.layers() < 2) {
      throw ShapeError("mlp_forward: dropout mask " + shape_string(ms) + " does not match last hidden width " +
                       std::to_string(h));
    }
  }
  Var h = input;
  const std::size_t n = spec.layers();
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n && dropout_mask != nullptr) h = ad::mask_mul(h, *dropout_mask);
    h = ops.affine(i, h);
    if (i + 1 < n) {
      if (spec.layer_norm) h = ops.norm_affine(i, ad::layer_norm(h));
      h = activate(h, spec.hidden);
    } else {
      h = activate(h, spec.output);
    }
  }
  return h;
}

Var mlp_forward(const BoundParams& params, const MlpSpec& spec, Var input, const Tensor* dropout_mask) {
  LayerOps ops;
  ops.affine = [&](std::size_t i, Var x) {
    const std::string k = std::to_string(i);
    return ad::add(ad::matmul(x, params["w" + k]), params["b" + k]);
  };
  ops.norm_affine = [&](std::size_t i, Var x) {
    const std::string k = "ln" + std::to_string(i);
    return ad::add(ad::mul(x, params[k + ".gain"]), params[k + ".bias"]);
  };
  return mlp_forward_layers(spec, input, dropout_mask, ops);
}

Tensor mlp_eval(const ParamSet& params, const MlpSpec& spec, const Tensor& input, const Tensor* dropout_mask) {
  ad::Graph g;
  return mlp_forward(bind(g, params, false), spec, g.constant(input), dropout_mask).value();
}

Tensor dropout_mask(Shape shape, double p, Rng& rng) {
  Tensor mask(std::move(shape), 1.0);
  if (p <= 0.0) return mask;
  for (auto& v : mask.values()) v = rng.bernoulli(p) ? 0.0 : 1.0;
  return mask;
}

void hard_sync(ParamSet& target, const ParamSet& source) {
  if (target.size() != source.size()) throw std::invalid_argument("hard_sync: parameter sets differ in size");
  for (const auto& [name, t] : source) {
    if (!target.contains(name)) throw std::invalid_argument("hard_sync: target lacks parameter '" + name + "'");
    if (target.at(name).shape() != t.shape()) throw ShapeError("hard_sync: shape mismatch for '" + name + "'");
  }
  for (const auto& [name, t] : source) target.at(name) = t;
}

}  // namespace ipl::nn
