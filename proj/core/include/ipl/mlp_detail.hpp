#pragma once

#include <functional>

#include "ipl/mlp.hpp"

namespace ipl::nn {

/// Per-layer hooks for mlp_forward_layers: the affine map of layer i and the
/// learned gain/bias applied after layer-norm standardization.
struct LayerOps {
  std::function<Var(std::size_t, Var)> affine;
  std::function<Var(std::size_t, Var)> norm_affine;
};

/// The activation/normalization/dropout skeleton shared by every MLP
/// variant; only the parameter arithmetic differs.
Var mlp_forward_layers(const MlpSpec& spec, Var input, const Tensor* dropout_mask, const LayerOps& ops);

}  // namespace ipl::nn
