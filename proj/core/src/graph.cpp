#include "ipl/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace ipl::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

ConstMapMatrix as_matrix(const Tensor& t) {
  return ConstMapMatrix(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
MapMatrix as_matrix(Tensor& t) {
  return MapMatrix(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

enum Bcast : std::size_t { kSame = 0, kScalar = 1, kRow = 2, kCol = 3 };

Bcast classify(const Shape& big, const Shape& small) {
  if (big == small) return kSame;
  const std::size_t n = shape_size(small);
  if (n == 1) return kScalar;
  if (big.size() == 2) {
    const bool row_like = (small.size() == 1 && small[0] == big[1]) ||
                          (small.size() == 2 && small[0] == 1 && small[1] == big[1]);
    if (row_like) return kRow;
    if (small.size() == 2 && small[1] == 1 && small[0] == big[0]) return kCol;
  }
  if (shape_size(big) == n) return kSame;
  throw ShapeError("cannot broadcast " + shape_string(small) + " to " + shape_string(big));
}

inline std::size_t bindex(std::size_t mode, std::size_t i, std::size_t cols) {
  switch (mode) {
    case kScalar: return 0;
    case kRow: return i % cols;
    case kCol: return i / cols;
    default: return i;
  }
}

std::size_t trailing(const Shape& s) { return s.empty() ? 1 : s.back(); }

void require_finite(const Tensor& t, OpKind kind) {
  if (!t.all_finite()) throw DomainError(std::string("non-finite value produced by op '") + op_name(kind) + "'");
}

Graph& graph_of(Var v) {
  if (!v.valid()) throw std::invalid_argument("operation on an unbound Var");
  return *v.graph;
}

Graph& common_graph(Var a, Var b) {
  if (a.graph != b.graph) throw std::invalid_argument("operands belong to different graphs");
  return graph_of(a);
}

bool needs_grad(Var v) { return v.graph->node(v.id).requires_grad; }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Var binary(OpKind kind, Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  const bool a_big = va.size() >= vb.size();
  const Shape& out_shape = a_big ? va.shape() : vb.shape();
  const std::size_t ma = a_big ? kSame : classify(out_shape, va.shape());
  const std::size_t mb = a_big ? classify(out_shape, vb.shape()) : kSame;
  const std::size_t cols = trailing(out_shape);

  Tensor out(out_shape);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = va[bindex(ma, i, cols)];
    const double y = vb[bindex(mb, i, cols)];
    switch (kind) {
      case OpKind::Add: out[i] = x + y; break;
      case OpKind::Sub: out[i] = x - y; break;
      case OpKind::Mul: out[i] = x * y; break;
      case OpKind::Div:
        if (y == 0.0) throw DomainError("division by zero");
        out[i] = x / y;
        break;
      case OpKind::Minimum: out[i] = std::min(x, y); break;
      default: throw std::logic_error("binary(): unsupported op");
    }
  }
  require_finite(out, kind);
  Graph::Node node;
  node.kind = kind;
  node.inputs = {a.id, b.id};
  node.value = std::move(out);
  node.i0 = ma;
  node.i1 = mb;
  node.requires_grad = needs_grad(a) || needs_grad(b);
  return g.push(std::move(node));
}

template <class F>
Var unary(OpKind kind, Var x, F&& f, double a = 0.0, double b = 0.0) {
  Graph& g = graph_of(x);
  const Tensor& vx = x.value();
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(vx[i]);
  require_finite(out, kind);
  Graph::Node node;
  node.kind = kind;
  node.inputs = {x.id};
  node.value = std::move(out);
  node.a = a;
  node.b = b;
  node.requires_grad = needs_grad(x);
  return g.push(std::move(node));
}

Tensor& grad_slot(std::vector<std::optional<Tensor>>& grads, int id, const Shape& shape) {
  auto& slot = grads[static_cast<std::size_t>(id)];
  if (!slot) slot.emplace(shape);
  return *slot;
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::MatMul: return "matmul";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Softplus: return "softplus";
    case OpKind::Sum: return "sum";
    case OpKind::SumRows: return "sum-rows";
    case OpKind::Mean: return "mean";
    case OpKind::Square: return "square";
    case OpKind::Neg: return "neg";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Scale: return "scale";
    case OpKind::MaskMul: return "dropout-mask-mul";
    case OpKind::LayerNorm: return "layer-norm";
    case OpKind::Minimum: return "minimum";
    case OpKind::Clamp: return "clamp";
    case OpKind::NoisyMatMul: return "noisy-matmul";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_of(*this).value(*this); }

Tensor Gradients::operator[](Var v) const {
  const auto i = static_cast<std::size_t>(v.id);
  if (v.id < 0 || i >= shapes_.size()) throw std::out_of_range("gradient requested for unknown node");
  if (grads_[i]) return *grads_[i];
  return Tensor(shapes_[i]);
}

bool Gradients::reached(Var v) const {
  const auto i = static_cast<std::size_t>(v.id);
  return v.id >= 0 && i < grads_.size() && grads_[i].has_value();
}

Var Graph::push(Node node) {
  if (consumed_) throw std::logic_error("graph already consumed by backward()");
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::leaf(Tensor value) {
  require_finite(value, OpKind::Leaf);
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::constant(Tensor value) {
  require_finite(value, OpKind::Constant);
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const {
  if (v.graph != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("Var does not belong to this graph");
  }
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

OpKind Graph::kind(Var v) const { return node(v.id).kind; }

Gradients Graph::backward(Var root) {
  if (consumed_) throw std::logic_error("graph already consumed by backward()");
  if (root.graph != this) throw std::invalid_argument("backward root belongs to a different graph");
  if (value(root).size() != 1) {
    throw ShapeError("backward root must be scalar, got " + shape_string(value(root).shape()));
  }
  consumed_ = true;

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[static_cast<std::size_t>(root.id)].emplace(value(root).shape(), 1.0);

  for (int id = root.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    auto& g = grads[static_cast<std::size_t>(id)];
    if (!g || !n.requires_grad || n.inputs.empty()) continue;
    accumulate_input_grads(n, *g, grads);
  }

  std::vector<Shape> shapes;
  shapes.reserve(nodes_.size());
  for (const auto& n : nodes_) shapes.push_back(n.value.shape());
  return Gradients(std::move(grads), std::move(shapes));
}

void Graph::accumulate_input_grads(const Node& n, const Tensor& g, std::vector<std::optional<Tensor>>& grads) const {
  auto input = [&](std::size_t k) -> const Node& { return nodes_[static_cast<std::size_t>(n.inputs[k])]; };
  auto wants = [&](std::size_t k) { return input(k).requires_grad; };
  auto slot = [&](std::size_t k) -> Tensor& { return grad_slot(grads, n.inputs[k], input(k).value.shape()); };

  switch (n.kind) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;

    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Minimum: {
      const Tensor& va = input(0).value;
      const Tensor& vb = input(1).value;
      const std::size_t cols = trailing(n.value.shape());
      const std::size_t total = n.value.size();
      if (wants(0)) {
        Tensor& ga = slot(0);
        for (std::size_t i = 0; i < total; ++i) {
          const double x = va[bindex(n.i0, i, cols)];
          const double y = vb[bindex(n.i1, i, cols)];
          double d = 0.0;
          switch (n.kind) {
            case OpKind::Add:
            case OpKind::Sub: d = 1.0; break;
            case OpKind::Mul: d = y; break;
            case OpKind::Div: d = 1.0 / y; break;
            case OpKind::Minimum: d = x <= y ? 1.0 : 0.0; break;
            default: break;
          }
          ga[bindex(n.i0, i, cols)] += g[i] * d;
        }
      }
      if (wants(1)) {
        Tensor& gb = slot(1);
        for (std::size_t i = 0; i < total; ++i) {
          const double x = va[bindex(n.i0, i, cols)];
          const double y = vb[bindex(n.i1, i, cols)];
          double d = 0.0;
          switch (n.kind) {
            case OpKind::Add: d = 1.0; break;
            case OpKind::Sub: d = -1.0; break;
            case OpKind::Mul: d = x; break;
            case OpKind::Div: d = -x / (y * y); break;
            case OpKind::Minimum: d = x <= y ? 0.0 : 1.0; break;
            default: break;
          }
          gb[bindex(n.i1, i, cols)] += g[i] * d;
        }
      }
      return;
    }

    case OpKind::MatMul: {
      const Tensor& va = input(0).value;
      const Tensor& vb = input(1).value;
      auto gm = as_matrix(g);
      if (wants(0)) as_matrix(slot(0)).noalias() += gm * as_matrix(vb).transpose();
      if (wants(1)) as_matrix(slot(1)).noalias() += as_matrix(va).transpose() * gm;
      return;
    }

    case OpKind::NoisyMatMul: {
      const Tensor& x = input(0).value;
      const Tensor& mu = input(1).value;
      const Tensor& sigma = input(2).value;
      if (wants(1)) as_matrix(slot(1)).noalias() += as_matrix(x).transpose() * as_matrix(g);
      const bool gx = wants(0);
      const bool gs = wants(2);
      if (gx) as_matrix(slot(0)).noalias() += as_matrix(g) * as_matrix(mu).transpose();
      if (!gx && !gs) return;
      // d stddev / d v = 1 / (2 stddev); rows with zero spread get no gradient.
      const Eigen::MatrixXd sig2 = as_matrix(sigma).array().square().matrix();
      const Eigen::ArrayXXd stddev = (as_matrix(x).array().square().matrix() * sig2).array().sqrt();
      const Eigen::MatrixXd h =
          (stddev > 0.0).select(as_matrix(g).array() * as_matrix(n.saved).array() / stddev, 0.0).matrix();
      if (gx) as_matrix(slot(0)).array() += as_matrix(x).array() * (h * sig2.transpose()).array();
      if (gs) {
        as_matrix(slot(2)).array() +=
            as_matrix(sigma).array() * (as_matrix(x).array().square().matrix().transpose() * h).array();
      }
      return;
    }

    case OpKind::Tanh:
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Softplus:
    case OpKind::Square:
    case OpKind::Neg:
    case OpKind::Scale:
    case OpKind::Clamp: {
      const Tensor& x = input(0).value;
      const Tensor& y = n.value;
      Tensor& gx = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (n.kind) {
          case OpKind::Tanh: d = 1.0 - y[i] * y[i]; break;
          case OpKind::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case OpKind::Sigmoid: d = y[i] * (1.0 - y[i]); break;
          case OpKind::Exp: d = y[i]; break;
          case OpKind::Log: d = 1.0 / x[i]; break;
          case OpKind::Softplus: d = stable_sigmoid(x[i]); break;
          case OpKind::Square: d = 2.0 * x[i]; break;
          case OpKind::Neg: d = -1.0; break;
          case OpKind::Scale: d = n.a; break;
          case OpKind::Clamp: d = (x[i] >= n.a && x[i] <= n.b) ? 1.0 : 0.0; break;
          default: break;
        }
        gx[i] += g[i] * d;
      }
      return;
    }

    case OpKind::MaskMul: {
      const std::size_t cols = trailing(n.value.shape());
      Tensor& gx = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.saved[bindex(n.i1, i, cols)];
      return;
    }

    case OpKind::Sum: {
      Tensor& gx = slot(0);
      const double s = g[0];
      for (auto& v : gx.values()) v += s;
      return;
    }

    case OpKind::Mean: {
      Tensor& gx = slot(0);
      const double s = g[0] / static_cast<double>(gx.size());
      for (auto& v : gx.values()) v += s;
      return;
    }

    case OpKind::SumRows: {
      Tensor& gx = slot(0);
      const std::size_t r = gx.rows();
      const std::size_t c = gx.cols();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i];
      return;
    }

    case OpKind::Concat: {
      const std::size_t rows = n.value.rows();
      const std::size_t total = n.value.cols();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t c = input(k).value.cols();
        if (wants(k)) {
          Tensor& gk = slot(k);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gk[r * c + j] += g[r * total + offset + j];
        }
        offset += c;
      }
      return;
    }

    case OpKind::Slice: {
      Tensor& gx = slot(0);
      const std::size_t rows = gx.rows();
      const std::size_t cols = gx.cols();
      const std::size_t width = n.i1 - n.i0;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < width; ++j) gx[r * cols + n.i0 + j] += g[r * width + j];
      return;
    }

    case OpKind::LayerNorm: {
      const Tensor& xhat = n.saved;
      Tensor& gx = slot(0);
      const std::size_t rows = xhat.rows();
      const std::size_t cols = xhat.cols();
      const double inv_n = 1.0 / static_cast<double>(cols);
      const Tensor& x = input(0).value;
      for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mu += x[r * cols + j];
        mu *= inv_n;
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) var += (x[r * cols + j] - mu) * (x[r * cols + j] - mu);
        var *= inv_n;
        const double inv_std = 1.0 / std::sqrt(var + n.a);
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          sum_g += g[r * cols + j];
          sum_gx += g[r * cols + j] * xhat[r * cols + j];
        }
        for (std::size_t j = 0; j < cols; ++j) {
          gx[r * cols + j] += inv_std * (g[r * cols + j] - inv_n * sum_g - xhat[r * cols + j] * inv_n * sum_gx);
        }
      }
      return;
    }
  }
}

Var add(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var sub(Var a, Var b) { return binary(OpKind::Sub, a, b); }
Var mul(Var a, Var b) { return binary(OpKind::Mul, a, b); }
Var div(Var a, Var b) { return binary(OpKind::Div, a, b); }
Var minimum(Var a, Var b) { return binary(OpKind::Minimum, a, b); }

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(va.shape()) + " and " + shape_string(vb.shape()));
  }
  Tensor out({va.rows(), vb.cols()});
  as_matrix(out).noalias() = as_matrix(va) * as_matrix(vb);
  require_finite(out, OpKind::MatMul);
  Graph::Node node;
  node.kind = OpKind::MatMul;
  node.inputs = {a.id, b.id};
  node.value = std::move(out);
  node.requires_grad = needs_grad(a) || needs_grad(b);
  return g.push(std::move(node));
}

Var noisy_matmul(Var x, Var mu, Var sigma, const Tensor& noise) {
  Graph& g = common_graph(x, mu);
  common_graph(mu, sigma);
  const Tensor& vx = x.value();
  const Tensor& vm = mu.value();
  const Tensor& vs = sigma.value();
  if (vx.rank() != 2 || vm.rank() != 2 || vx.cols() != vm.rows() || vs.shape() != vm.shape()) {
    throw ShapeError("noisy_matmul: incompatible shapes");
  }
  const std::size_t batch = vx.rows();
  const std::size_t outw = vm.cols();
  if (noise.shape() != Shape{batch, outw}) {
    throw ShapeError("noisy_matmul: noise must be " + shape_string({batch, outw}) + ", got " +
                     shape_string(noise.shape()));
  }
  Tensor out({batch, outw});
  const Eigen::MatrixXd stddev =
      (as_matrix(vx).array().square().matrix() * as_matrix(vs).array().square().matrix()).array().sqrt().matrix();
  as_matrix(out).noalias() = as_matrix(vx) * as_matrix(vm);
  as_matrix(out).array() += stddev.array() * as_matrix(noise).array();
  require_finite(out, OpKind::NoisyMatMul);
  Graph::Node node;
  node.kind = OpKind::NoisyMatMul;
  node.inputs = {x.id, mu.id, sigma.id};
  node.value = std::move(out);
  node.saved = noise;
  node.requires_grad = needs_grad(x) || needs_grad(mu) || needs_grad(sigma);
  return g.push(std::move(node));
}

Var tanh(Var x) { return unary(OpKind::Tanh, x, [](double v) { return std::tanh(v); }); }
Var relu(Var x) { return unary(OpKind::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; }); }
Var sigmoid(Var x) { return unary(OpKind::Sigmoid, x, stable_sigmoid); }
Var exp(Var x) { return unary(OpKind::Exp, x, [](double v) { return std::exp(v); }); }
Var log(Var x) {
  return unary(OpKind::Log, x, [](double v) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
    return std::log(v);
  });
}
Var softplus(Var x) { return unary(OpKind::Softplus, x, stable_softplus); }
Var square(Var x) { return unary(OpKind::Square, x, [](double v) { return v * v; }); }
Var neg(Var x) { return unary(OpKind::Neg, x, [](double v) { return -v; }); }
Var scale(Var x, double factor) {
  return unary(OpKind::Scale, x, [factor](double v) { return v * factor; }, factor);
}
Var clamp(Var x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return unary(OpKind::Clamp, x, [lo, hi](double v) { return std::clamp(v, lo, hi); }, lo, hi);
}

namespace {
Var reduce(OpKind kind, Var x) {
  Graph& g = graph_of(x);
  const Tensor& vx = x.value();
  Tensor out;
  if (kind == OpKind::SumRows) {
    if (vx.rank() != 2) throw ShapeError("sum_rows requires a rank-2 tensor");
    out = Tensor({vx.rows(), 1});
    for (std::size_t r = 0; r < vx.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < vx.cols(); ++c) s += vx.at(r, c);
      out[r] = s;
    }
  } else {
    if (vx.size() == 0) throw ShapeError("reduction over an empty tensor");
    double s = 0.0;
    for (double v : vx.values()) s += v;
    if (kind == OpKind::Mean) s /= static_cast<double>(vx.size());
    out = Tensor::scalar(s);
  }
  require_finite(out, kind);
  Graph::Node node;
  node.kind = kind;
  node.inputs = {x.id};
  node.value = std::move(out);
  node.requires_grad = needs_grad(x);
  return g.push(std::move(node));
}
}  // namespace

Var sum(Var x) { return reduce(OpKind::Sum, x); }
Var sum_rows(Var x) { return reduce(OpKind::SumRows, x); }
Var mean(Var x) { return reduce(OpKind::Mean, x); }

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Graph& g = graph_of(parts.front());
  const std::size_t rows = parts.front().value().rows();
  std::size_t total = 0;
  bool grad = false;
  for (const Var& p : parts) {
    if (p.graph != &g) throw std::invalid_argument("concat operands belong to different graphs");
    if (p.value().rank() != 2 || p.value().rows() != rows) throw ShapeError("concat: row counts differ");
    total += p.value().cols();
    grad = grad || needs_grad(p);
  }
  Tensor out({rows, total});
  std::size_t offset = 0;
  Graph::Node node;
  node.kind = OpKind::Concat;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t c = v.cols();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) out[r * total + offset + j] = v[r * c + j];
    offset += c;
    node.inputs.push_back(p.id);
  }
  node.value = std::move(out);
  node.requires_grad = grad;
  return g.push(std::move(node));
}

Var slice(Var x, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2 || begin >= end || end > v.cols()) {
    throw ShapeError("slice: columns [" + std::to_string(begin) + "," + std::to_string(end) + ") out of range for " +
                     shape_string(v.shape()));
  }
  const std::size_t rows = v.rows();
  const std::size_t width = end - begin;
  Tensor out({rows, width});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] = v[r * v.cols() + begin + j];
  Graph::Node node;
  node.kind = OpKind::Slice;
  node.inputs = {x.id};
  node.value = std::move(out);
  node.i0 = begin;
  node.i1 = end;
  node.requires_grad = needs_grad(x);
  return g.push(std::move(node));
}

Var mask_mul(Var x, const Tensor& mask) {
  Graph& g = graph_of(x);
  const Tensor& v = x.value();
  const std::size_t mode = classify(v.shape(), mask.shape());
  const std::size_t cols = trailing(v.shape());
  Tensor out(v.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] * mask[bindex(mode, i, cols)];
  require_finite(out, OpKind::MaskMul);
  Graph::Node node;
  node.kind = OpKind::MaskMul;
  node.inputs = {x.id};
  node.value = std::move(out);
  node.saved = mask;
  node.i1 = mode;
  node.requires_grad = needs_grad(x);
  return g.push(std::move(node));
}

Var layer_norm(Var x, double eps) {
  Graph& g = graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2) throw ShapeError("layer_norm requires a rank-2 tensor");
  const std::size_t rows = v.rows();
  const std::size_t cols = v.cols();
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += v[r * cols + j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (v[r * cols + j] - mu) * (v[r * cols + j] - mu);
    var /= static_cast<double>(cols);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] = (v[r * cols + j] - mu) * inv_std;
  }
  require_finite(out, OpKind::LayerNorm);
  Graph::Node node;
  node.kind = OpKind::LayerNorm;
  node.inputs = {x.id};
  node.saved = out;
  node.value = std::move(out);
  node.a = eps;
  node.requires_grad = needs_grad(x);
  return g.push(std::move(node));
}

}  // namespace ipl::ad
