#pragma once

// Reverse-mode automatic differentiation over dense double tensors.
//
// A Graph is an append-only tape: every op evaluates eagerly, stores its
// forward value, and records enough to run its vector-Jacobian product.
// Node order is topological by construction. Graphs are rebuilt for every
// loss evaluation and consumed by a single call to backward().

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "ipl/tensor.hpp"

namespace ipl::ad {

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Tanh,
  Relu,
  Sigmoid,
  Exp,
  Log,
  Softplus,
  Sum,
  SumRows,
  Mean,
  Square,
  Neg,
  Concat,
  Slice,
  Scale,
  MaskMul,
  LayerNorm,
  Minimum,
  Clamp,
  NoisyMatMul,
};

const char* op_name(OpKind kind);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const noexcept { return graph != nullptr && id >= 0; }
};

/// Result of backward(): gradient of the root with respect to every node.
class Gradients {
public:
  Gradients() = default;
  Gradients(std::vector<std::optional<Tensor>> grads, std::vector<Shape> shapes)
      : grads_(std::move(grads)), shapes_(std::move(shapes)) {}

  /// Gradient for a node; all-zero when the node does not reach the root.
  Tensor operator[](Var v) const;
  bool reached(Var v) const;

private:
  std::vector<std::optional<Tensor>> grads_;
  std::vector<Shape> shapes_;
};

class Graph {
public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Differentiable input.
  Var leaf(Tensor value);
  /// Non-differentiable input.
  Var constant(Tensor value);
  Var scalar(double value) { return constant(Tensor::scalar(value)); }

  const Tensor& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(Var v) const;
  bool consumed() const noexcept { return consumed_; }

  /// Reverse accumulation from a single-element root. A graph can be
  /// differentiated once.
  Gradients backward(Var root);

  // Used by the op functions below.
  struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<int> inputs;
    Tensor value;
    Tensor saved;  // op-specific: mask, normalized values, noise...
    double a = 0.0;
    double b = 0.0;
    std::size_t i0 = 0;
    std::size_t i1 = 0;
    bool requires_grad = false;
  };
  Var push(Node node);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

private:
  void accumulate_input_grads(const Node& n, const Tensor& g, std::vector<std::optional<Tensor>>& grads) const;

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise binary ops broadcast the smaller operand when it is a scalar,
// a row vector matching the trailing extent, or a column matching the
// leading extent of a rank-2 operand.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var minimum(Var a, Var b);

/// [n x k] * [k x m] -> [n x m].
Var matmul(Var a, Var b);

Var tanh(Var x);
Var relu(Var x);
Var sigmoid(Var x);
Var exp(Var x);
Var log(Var x);
/// log(1 + e^x), evaluated stably.
Var softplus(Var x);
Var square(Var x);
Var neg(Var x);
Var scale(Var x, double factor);
Var clamp(Var x, double lo, double hi);

/// Sum of all elements as a scalar.
Var sum(Var x);
/// Row sums of a rank-2 tensor, [n x c] -> [n x 1].
Var sum_rows(Var x);
/// Mean of all elements as a scalar.
Var mean(Var x);

/// Concatenate rank-2 tensors with equal row counts along columns.
Var concat(const std::vector<Var>& parts);
/// Columns [begin, end) of a rank-2 tensor.
Var slice(Var x, std::size_t begin, std::size_t end);

/// Multiply by a fixed mask (dropout). The mask is a constant and broadcasts
/// like the binary ops.
Var mask_mul(Var x, const Tensor& mask);

/// Per-row standardization: (x - mean) / sqrt(var + eps).
Var layer_norm(Var x, double eps = 1e-5);

/// Affine map with independently perturbed weights per row, sampled in
/// output space: with W[b] = mu + sigma * E[b] and E[b] standard normal,
/// x[b] W[b] has the law of
///   y[b, o] = (x mu)[b, o] + sqrt(sum_i x[b, i]^2 sigma[i, o]^2) * noise[b, o].
/// `noise` is a constant [batch x out] tensor.
Var noisy_matmul(Var x, Var mu, Var sigma, const Tensor& noise);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace ipl::ad

namespace ipl {
using ad::Var;
}  // namespace ipl
