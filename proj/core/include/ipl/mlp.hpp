#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ipl/params.hpp"
#include "ipl/rng.hpp"

namespace ipl::nn {

enum class Activation { Relu, Tanh, Identity };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Feed-forward stack: widths[0] inputs, widths.back() outputs.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::Relu;
  Activation output = Activation::Identity;
  bool layer_norm = false;
  double dropout_p = 0.0;

  /// Throws std::invalid_argument unless widths has >= 2 positive entries,
  /// 0 <= dropout_p < 1 and the output activation is identity or tanh.
  void validate() const;
  std::size_t layers() const { return widths.size() - 1; }
  std::size_t last_hidden_width() const;
  std::size_t parameter_count() const;
  /// Canonical text used for hashing and checkpoints.
  std::string describe() const;
};

/// Glorot-uniform weights (w<i>, [in x out]), zero biases (b<i>), unit
/// layer-norm gains (ln<i>.gain) and zero layer-norm biases (ln<i>.bias).
ParamSet init_params(const MlpSpec& spec, std::uint64_t seed);

/// Affine + activation stack over rows of `input`. Hidden layers with
/// layer-norm standardize the affine output and apply the learned gain and
/// bias before the activation. A dropout mask, when given, multiplies the
/// last hidden layer just before the output layer; it is 0/1 valued with
/// no rescaling.
Var mlp_forward(const BoundParams& params, const MlpSpec& spec, Var input, const Tensor* dropout_mask = nullptr);

/// Convenience evaluation without gradients.
Tensor mlp_eval(const ParamSet& params, const MlpSpec& spec, const Tensor& input, const Tensor* dropout_mask = nullptr);

/// Bernoulli keep-mask: each entry is 0 with probability p, else 1.
Tensor dropout_mask(Shape shape, double p, Rng& rng);

/// Overwrites target values with source values. Name and shape sets must
/// match exactly.
void hard_sync(ParamSet& target, const ParamSet& source);

}  // namespace ipl::nn
