#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "ipl/grad_check.hpp"
#include "ipl/graph.hpp"
#include "ipl/rng.hpp"

using namespace ipl;
using namespace ipl::ad;

namespace {

/// Entries uniform in [lo, hi] with |x| >= gap, keeping probes away from kinks.
Tensor away_from_zero(Shape shape, Rng& rng, double lo, double hi, double gap = 0.05) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) {
    do {
      v = rng.uniform(lo, hi);
    } while (std::abs(v) < gap);
  }
  return t;
}

struct OpCase {
  std::string name;
  Shape shape;
  double lo;
  double hi;
  ScalarFn f;
};

// Every case reduces to a scalar through a fixed weighting so that each
// output coordinate gets a distinct cotangent.
Var weighted(Graph& g, Var y) {
  Tensor w(y.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.17 * static_cast<double>(i % 7);
  return sum(mul(y, g.constant(w)));
}

std::vector<OpCase> op_cases() {
  const Tensor other = Tensor::matrix({{0.4, -1.3, 0.8}, {1.1, 0.2, -0.6}});
  const Tensor right = Tensor::matrix({{0.5, -0.2}, {1.4, 0.3}, {-0.7, 0.9}});
  const Tensor mask = Tensor::matrix({{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}});
  const Tensor noise = Tensor::matrix({{0.3, -1.2}, {0.8, 0.5}});
  const Tensor sig = Tensor::matrix({{0.2, 0.5}, {0.1, 0.3}, {0.4, 0.25}});
  return {
      {"add", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, add(x, g.constant(other))); }},
      {"add_row_broadcast", {2, 3}, -2, 2,
       [](Graph& g, Var x) { return weighted(g, add(g.constant(Tensor::ones({2, 3})), x)); }},
      {"sub", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, sub(g.constant(other), x)); }},
      {"mul", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, mul(x, x)); }},
      {"div_numerator", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, div(x, g.constant(other))); }},
      {"div_denominator", {2, 3}, 0.5, 2, [=](Graph& g, Var x) { return weighted(g, div(g.constant(other), x)); }},
      {"matmul_left", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, matmul(x, g.constant(right))); }},
      {"matmul_right", {3, 2}, -2, 2, [=](Graph& g, Var x) { return weighted(g, matmul(g.constant(other), x)); }},
      {"tanh", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, ad::tanh(x)); }},
      {"relu", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, relu(x)); }},
      {"sigmoid", {2, 3}, -3, 3, [](Graph& g, Var x) { return weighted(g, sigmoid(x)); }},
      {"exp", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, ad::exp(x)); }},
      {"log", {2, 3}, 0.2, 3, [](Graph& g, Var x) { return weighted(g, ad::log(x)); }},
      {"softplus", {2, 3}, -4, 4, [](Graph& g, Var x) { return weighted(g, softplus(x)); }},
      {"sum", {2, 3}, -2, 2, [](Graph&, Var x) { return mul(sum(x), sum(x)); }},
      {"sum_rows", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, square(sum_rows(x))); }},
      {"mean", {2, 3}, -2, 2, [](Graph&, Var x) { return square(mean(x)); }},
      {"square", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, square(x)); }},
      {"neg", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, neg(x)); }},
      {"concat", {2, 3}, -2, 2,
       [=](Graph& g, Var x) { return weighted(g, square(concat({g.constant(other), x, x}))); }},
      {"slice", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, square(slice(x, 1, 3))); }},
      {"scale", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, scale(x, -2.5)); }},
      {"mask_mul", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, mask_mul(square(x), mask)); }},
      {"layer_norm", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, square(layer_norm(x))); }},
      {"minimum", {2, 3}, -2, 2, [=](Graph& g, Var x) { return weighted(g, minimum(x, g.constant(other))); }},
      {"clamp", {2, 3}, -2, 2, [](Graph& g, Var x) { return weighted(g, clamp(x, -0.8, 0.9)); }},
      {"noisy_matmul_x", {2, 3}, -2, 2,
       [=](Graph& g, Var x) { return weighted(g, noisy_matmul(x, g.constant(right), g.constant(sig), noise)); }},
      {"noisy_matmul_mu", {3, 2}, -2, 2,
       [=](Graph& g, Var x) { return weighted(g, noisy_matmul(g.constant(other), x, g.constant(sig), noise)); }},
      {"noisy_matmul_sigma", {3, 2}, 0.1, 1,
       [=](Graph& g, Var x) { return weighted(g, noisy_matmul(g.constant(other), g.constant(right), x, noise)); }},
  };
}

bool near_kink(const std::string& name, const Tensor& x) {
  const Tensor other = Tensor::matrix({{0.4, -1.3, 0.8}, {1.1, 0.2, -0.6}});
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (name == "minimum" && std::abs(x[i] - other[i]) < 0.05) return true;
    if (name == "clamp" && (std::abs(x[i] + 0.8) < 0.05 || std::abs(x[i] - 0.9) < 0.05)) return true;
  }
  return false;
}

}  // namespace

TEST(Ops, ForwardValues) {
  Graph g;
  EXPECT_NEAR(softplus(g.scalar(0.0)).value().item(), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(sigmoid(g.scalar(0.0)).value().item(), 0.5);
  const Tensor x = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(matmul(g.constant(Tensor::identity(3)), g.constant(x)).value(), x);
  EXPECT_NEAR(softplus(g.scalar(800.0)).value().item(), 800.0, 1e-12);
  EXPECT_NEAR(softplus(g.scalar(-800.0)).value().item(), 0.0, 1e-300);
}

TEST(Ops, ShapeAndDomainErrors) {
  Graph g;
  const Var a = g.constant(Tensor({2, 3}, 1.0));
  const Var b = g.constant(Tensor({3, 4}, 1.0));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(ad::log(g.scalar(0.0)), DomainError);
  EXPECT_THROW(ad::log(g.scalar(-1.0)), DomainError);
  EXPECT_THROW(div(g.scalar(1.0), g.scalar(0.0)), DomainError);
  EXPECT_THROW(ad::exp(g.scalar(1e6)), DomainError);
  EXPECT_THROW(slice(a, 2, 4), ShapeError);
}

TEST(Backward, SumOfSquares) {
  Graph g;
  const Var x = g.leaf(Tensor::row({1, 2, 3}));
  const auto grads = g.backward(sum(square(x)));
  EXPECT_EQ(grads[x], Tensor::row({2, 4, 6}));
}

TEST(Backward, LogSoftplusChain) {
  Graph g;
  const Var w = g.leaf(Tensor::scalar(0.0));
  const auto grads = g.backward(ad::log(softplus(w)));
  EXPECT_NEAR(grads[w].item(), 0.5 / std::log(2.0), 1e-12);
  const auto fd = finite_diff_check([](Graph&, Var v) { return ad::log(softplus(v)); }, Tensor::scalar(0.0), 1e-5,
                                    1e-8);
  EXPECT_TRUE(fd.pass) << fd.max_rel_error;
}

TEST(Backward, ConstantRootGivesZeroGradients) {
  Graph g;
  const Var x = g.leaf(Tensor::row({1, 2}));
  const Var c = g.constant(Tensor::row({3, 4}));
  const auto grads = g.backward(sum(c));
  EXPECT_FALSE(grads.reached(x));
  EXPECT_EQ(grads[x], Tensor::zeros({1, 2}));
}

TEST(Backward, RejectsNonScalarRootAndReuse) {
  Graph g;
  const Var x = g.leaf(Tensor::row({1, 2}));
  EXPECT_THROW(g.backward(x), ShapeError);
  g.backward(sum(x));
  EXPECT_TRUE(g.consumed());
  EXPECT_THROW(g.backward(sum(x)), std::logic_error);
}

TEST(Backward, GradientShapesMatchValues) {
  Graph g;
  Rng rng(3);
  const Var x = g.leaf(rng.normal_tensor({4, 3}));
  const Var w = g.leaf(rng.normal_tensor({3, 2}));
  const Var b = g.leaf(rng.normal_tensor({1, 2}));
  const Var y = ad::tanh(add(matmul(x, w), b));
  const auto grads = g.backward(mean(square(y)));
  for (Var v : {x, w, b, y}) EXPECT_EQ(grads[v].shape(), v.shape());
}

TEST(Backward, FiniteDiffScalarExample) {
  const auto r = finite_diff_check([](Graph&, Var x) { return mul(x, x); }, Tensor::scalar(3.0), 1e-5, 1e-5);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.analytic_at_worst, 6.0, 1e-12);
  EXPECT_NEAR(r.numeric_at_worst, 6.0, 1e-8);
}

TEST(Backward, FiniteDiffRejectsNonFiniteProbe) {
  EXPECT_THROW(finite_diff_check([](Graph&, Var x) { return ad::log(x); }, Tensor::scalar(1e-7), 1e-5, 1e-5),
               DomainError);
}

// Every op against central differences at 100 random points, h = 1e-5.
class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const OpCase c = op_cases().at(GetParam());
  Rng rng(1000 + GetParam());
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    Tensor x = away_from_zero(c.shape, rng, c.lo, c.hi);
    while (near_kink(c.name, x)) x = away_from_zero(c.shape, rng, c.lo, c.hi);
    const auto r = finite_diff_check(c.f, x, 1e-5, 1e-5);
    worst = std::max(worst, r.max_rel_error);
  }
  EXPECT_LE(worst, 1e-5) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, op_cases().size()),
                         [](const auto& info) { return op_cases().at(info.param).name; });

TEST(Properties, BackwardIsLinear) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x0 = rng.normal_tensor({3, 2});
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    auto f = [](Graph&, Var x) { return sum(ad::tanh(mul(x, x))); };
    auto h = [](Graph&, Var x) { return mean(softplus(x)); };
    auto grad_of = [&](const std::function<Var(Graph&, Var)>& fn) {
      Graph g;
      const Var x = g.leaf(x0);
      return g.backward(fn(g, x))[x];
    };
    Graph g;
    const Var x = g.leaf(x0);
    const Var combo = add(scale(f(g, x), a), scale(h(g, x), b));
    const Tensor gc = g.backward(combo)[x];
    const Tensor gf = grad_of(f), gh = grad_of(h);
    for (std::size_t i = 0; i < gc.size(); ++i) EXPECT_NEAR(gc[i], a * gf[i] + b * gh[i], 1e-12);
  }
}

TEST(Properties, SeededRebuildIsBitIdentical) {
  auto build = [] {
    Rng rng(99);
    Graph g;
    const Var x = g.leaf(rng.normal_tensor({5, 4}));
    const Var w = g.leaf(rng.normal_tensor({4, 3}));
    const Tensor mask = Tensor({5, 3}, 1.0);
    const Var y = layer_norm(mask_mul(relu(matmul(x, w)), mask));
    const Var loss = mean(square(y));
    const auto grads = g.backward(loss);
    return std::make_tuple(loss.value(), grads[x], grads[w]);
  };
  EXPECT_EQ(build(), build());
}
