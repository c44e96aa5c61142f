#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ipl/flow_policy.hpp"

using namespace ipl;
using namespace ipl::flow;

namespace {

FlowSpec small_spec(std::size_t n, std::size_t m, std::size_t layers = 4) {
  FlowSpec s;
  s.state_dim = n;
  s.action_dim = m;
  s.layers = layers;
  s.hidden = 6;
  s.embed_hidden = {16, 16};
  return s;
}

/// Random parameters with larger weights than the init so that every layer
/// does visible work.
FlowPolicy random_flow(const FlowSpec& spec, std::uint64_t seed) {
  FlowPolicy pol(spec, seed);
  Rng rng(seed + 1);
  for (auto& [name, t] : pol.params()) {
    for (auto& v : t.values()) v += 0.3 * rng.normal();
  }
  return pol;
}

FlowPolicy zero_flow(const FlowSpec& spec) {
  FlowPolicy pol(spec, 0);
  for (auto& [name, t] : pol.params()) t = Tensor::zeros(t.shape());
  return pol;
}

Tensor forward_values(const CouplingLayer& layer, const nn::ParamSet& p, const Tensor& x, double* logdet = nullptr) {
  ad::Graph g;
  const auto r = coupling_forward(layer, nn::bind(g, p, false), g.constant(x));
  if (logdet != nullptr) *logdet = r.logdet.value().item();
  return r.y.value();
}

Tensor inverse_values(const CouplingLayer& layer, const nn::ParamSet& p, const Tensor& y) {
  ad::Graph g;
  return coupling_inverse(layer, nn::bind(g, p, false), g.constant(y)).y.value();
}

nn::ParamSet layer_params(const FlowPolicy& pol, std::size_t i) {
  return pol.params().extract("layer" + std::to_string(i) + ".");
}

double log_prob(const FlowPolicy& pol, const Tensor& s, const Tensor& a) { return pol.log_prob_value(s, a).item(); }

}  // namespace

TEST(Coupling, IdentityNetsPermuteOnly) {
  const FlowPolicy pol = zero_flow(small_spec(1, 3));
  const Tensor x = Tensor::row({0.5, -1.0, 2.0});
  double ld = 1.0;
  EXPECT_EQ(forward_values(pol.layer(0), layer_params(pol, 0), x, &ld), x);
  EXPECT_EQ(ld, 0.0);
  EXPECT_EQ(forward_values(pol.layer(1), layer_params(pol, 1), x, &ld), Tensor::row({2.0, -1.0, 0.5}));
  EXPECT_EQ(ld, 0.0);
  EXPECT_EQ(inverse_values(pol.layer(1), layer_params(pol, 1), Tensor::row({2.0, -1.0, 0.5})), x);
}

TEST(Coupling, HandEvaluatedLinearScale) {
  FlowSpec spec = small_spec(1, 2, 1);
  spec.st_hidden_layers = 0;
  spec.scale_bound = 0.0;
  FlowPolicy pol = zero_flow(spec);
  pol.params().at("layer0.s.w0") = Tensor::matrix({{1.0}});
  const nn::ParamSet p = layer_params(pol, 0);
  double ld = 0.0;
  const Tensor y = forward_values(pol.layer(0), p, Tensor::row({1.0, 2.0}), &ld);
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_NEAR(y[1], 2.0 * std::numbers::e, 1e-15);
  EXPECT_DOUBLE_EQ(ld, 1.0);
  const Tensor x = inverse_values(pol.layer(0), p, Tensor::row({1.0, 2.0 * std::numbers::e}));
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_NEAR(x[1], 2.0, 1e-15);
}

TEST(Coupling, RoundTripProperty) {
  Rng rng(21);
  double worst = 0.0;
  for (int probe = 0; probe < 1000; ++probe) {
    const std::size_t m = 2 + rng.index(3);
    const FlowPolicy pol = random_flow(small_spec(1, m, 2), 100 + probe % 25);
    const std::size_t li = rng.index(2);
    const Tensor x = rng.normal_tensor({1, m});
    const auto p = layer_params(pol, li);
    const Tensor back = inverse_values(pol.layer(li), p, forward_values(pol.layer(li), p, x));
    worst = std::max(worst, max_abs_diff(back, x));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Coupling, LogDetMatchesNumericalJacobian) {
  Rng rng(22);
  for (std::size_t m = 2; m <= 4; ++m) {
    for (int trial = 0; trial < 10; ++trial) {
      const FlowPolicy pol = random_flow(small_spec(1, m, 2), 300 + 10 * m + trial);
      for (std::size_t li = 0; li < 2; ++li) {
        const auto p = layer_params(pol, li);
        const Tensor x = rng.normal_tensor({1, m});
        double ld = 0.0;
        forward_values(pol.layer(li), p, x, &ld);
        Eigen::MatrixXd jac(m, m);
        const double h = 1e-6;
        for (std::size_t j = 0; j < m; ++j) {
          Tensor xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          const Tensor yp = forward_values(pol.layer(li), p, xp), ym = forward_values(pol.layer(li), p, xm);
          for (std::size_t i = 0; i < m; ++i) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (yp[i] - ym[i]) / (2 * h);
        }
        const double numeric = std::log(std::abs(jac.determinant()));
        EXPECT_LE(std::abs(ld - numeric) / std::max({std::abs(ld), std::abs(numeric), 1e-8}), 1e-5)
            << "m=" << m << " layer " << li;
      }
    }
  }
}

TEST(Policy, IdentityFlowIsBaseNoise) {
  const FlowPolicy pol = zero_flow(small_spec(2, 2));
  Rng rng(5);
  const Tensor s = rng.normal_tensor({3, 2});
  const Tensor eps = rng.normal_tensor({3, 2});
  ad::Graph g;
  const auto out = pol.sample(nn::bind(g, pol.params(), false), g.constant(s), eps);
  EXPECT_EQ(out.action.value(), eps);
  for (std::size_t r = 0; r < 3; ++r) {
    const double base = -0.5 * (eps.at(r, 0) * eps.at(r, 0) + eps.at(r, 1) * eps.at(r, 1)) - std::log(2 * std::numbers::pi);
    EXPECT_NEAR(out.logp.value()[r], base, 1e-14);
  }
  EXPECT_NEAR(log_prob(pol, Tensor::row({0.3, -0.2}), Tensor::row({0.0, 0.0})), -1.8378770664093453, 1e-12);
}

TEST(Policy, SamplePathLogpMatchesLogProb) {
  Rng rng(6);
  double worst = 0.0;
  for (std::size_t m : {2u, 3u, 4u}) {
    const FlowPolicy pol = random_flow(small_spec(3, m), 40 + m);
    const Tensor s = rng.normal_tensor({50, 3});
    const Tensor eps = rng.normal_tensor({50, m});
    ad::Graph g;
    const auto out = pol.sample(nn::bind(g, pol.params(), false), g.constant(s), eps);
    worst = std::max(worst, max_abs_diff(out.logp.value(), pol.log_prob_value(s, out.action.value())));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Policy, FullStackRoundTrip) {
  Rng rng(7);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const FlowPolicy pol = random_flow(small_spec(2, 2 + k % 3), 500 + k);
    const std::size_t m = pol.action_dim();
    const Tensor s = rng.normal_tensor({20, 2});
    const Tensor eps = rng.normal_tensor({20, m});
    ad::Graph g;
    const auto bp = nn::bind(g, pol.params(), false);
    const Var states = g.constant(s);
    const Var a = pol.sample(bp, states, eps).action;
    worst = std::max(worst, max_abs_diff(pol.invert(bp, states, a).value(), eps));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Policy, DensityIntegratesToOne) {
  for (std::uint64_t seed : {11u, 12u}) {
    const FlowPolicy pol = random_flow(small_spec(1, 2), seed);
    const Tensor s = Tensor::row({0.4});
    const Tensor draws = pol.act(s.repeat_rows(20000), Rng(seed).normal_tensor({20000, 2}));
    double lo[2], hi[2];
    for (std::size_t j = 0; j < 2; ++j) {
      double mu = 0, sq = 0;
      for (std::size_t r = 0; r < draws.rows(); ++r) {
        mu += draws.at(r, j);
        sq += draws.at(r, j) * draws.at(r, j);
      }
      mu /= 20000.0;
      const double sd = std::sqrt(sq / 20000.0 - mu * mu);
      lo[j] = mu - 8 * sd;
      hi[j] = mu + 8 * sd;
    }
    std::size_t inside = 0;
    for (std::size_t r = 0; r < draws.rows(); ++r) {
      inside += draws.at(r, 0) > lo[0] && draws.at(r, 0) < hi[0] && draws.at(r, 1) > lo[1] && draws.at(r, 1) < hi[1];
    }
    ASSERT_GE(static_cast<double>(inside) / 20000.0, 0.999);

    const std::size_t n = 300;
    const double hx = (hi[0] - lo[0]) / n, hy = (hi[1] - lo[1]) / n;
    Tensor grid({n * n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        grid.at(i * n + j, 0) = lo[0] + (i + 0.5) * hx;
        grid.at(i * n + j, 1) = lo[1] + (j + 0.5) * hy;
      }
    }
    const Tensor lp = pol.log_prob_value(s.repeat_rows(n * n), grid);
    double mass = 0.0;
    for (double v : lp.values()) mass += std::exp(v) * hx * hy;
    EXPECT_NEAR(mass, 1.0, 1e-2) << "seed " << seed;
  }
}

TEST(Policy, StateConditioning) {
  const FlowPolicy pol = random_flow(small_spec(2, 2), 77);
  const Tensor a = Tensor::row({0.1, -0.3});
  EXPECT_NE(log_prob(pol, Tensor::row({0.0, 0.0}), a), log_prob(pol, Tensor::row({1.0, -1.0}), a));
}

TEST(Policy, ParameterGradientsOfLogProb) {
  const FlowPolicy pol = random_flow(small_spec(2, 3, 3), 88);
  Rng rng(9);
  const Tensor s = rng.normal_tensor({4, 2});
  const Tensor a = rng.normal_tensor({4, 3});
  const auto r = nn::check_param_gradients(
      pol.params(),
      [&](ad::Graph& g, const nn::BoundParams& p) { return ad::mean(pol.log_prob(p, g.constant(s), g.constant(a))); },
      1e-5, 1e-4);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(Entropy, StandardNormalValue) {
  const FlowPolicy pol = zero_flow(small_spec(1, 2));
  const auto [h, se] = entropy_monte_carlo(pol, Tensor::row({0.0}), 100000, 3);
  EXPECT_NEAR(h, 1.0 + std::log(2 * std::numbers::pi), 3 * se);
}

TEST(Entropy, ScalingByEAddsDimension) {
  FlowSpec spec = small_spec(1, 2, 2);
  spec.scale_bound = 0.0;
  const FlowPolicy base = zero_flow(spec);
  FlowPolicy scaled = zero_flow(spec);
  // s = 1 on the transformed half of each layer; the two layers cover both coordinates.
  scaled.params().at("layer0.s.b3") = Tensor::row({1.0});
  scaled.params().at("layer1.s.b3") = Tensor::row({1.0});
  const Tensor s = Tensor::row({0.0});
  const Tensor eps = Rng(4).normal_tensor({1, 2});
  const Tensor a = scaled.act(s, eps);
  // the second layer leaves its output in reversed order
  EXPECT_NEAR(a[0], std::numbers::e * eps[1], 1e-12);
  EXPECT_NEAR(a[1], std::numbers::e * eps[0], 1e-12);
  const auto h0 = entropy_monte_carlo(base, s, 5000, 8).first;
  const auto h1 = entropy_monte_carlo(scaled, s, 5000, 8).first;
  EXPECT_NEAR(h1 - h0, 2.0, 1e-12);
}

TEST(Entropy, EstimatorGradient) {
  const FlowPolicy pol = random_flow(small_spec(2, 2, 4), 99);
  Rng rng(10);
  const Tensor s = rng.normal_tensor({6, 2});
  const Tensor eps = rng.normal_tensor({6, 2});
  const auto r = nn::check_param_gradients(
      pol.params(),
      [&](ad::Graph& g, const nn::BoundParams& p) { return pol.entropy_estimate(p, g.constant(s), eps); }, 1e-5,
      1e-4);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(Entropy, SingleSampleEstimatesAreUnbiased) {
  const FlowPolicy pol = random_flow(small_spec(1, 2), 123);
  const Tensor s = Tensor::row({0.2});
  const auto [big, big_se] = entropy_monte_carlo(pol, s, 100000, 1);
  double sum = 0.0, sq = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double v = entropy_monte_carlo(pol, s, 1, 1000 + i).first;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, big, 3 * std::hypot(se, big_se));
}

TEST(Spec, RejectsScalarActions) {
  EXPECT_THROW(FlowPolicy(small_spec(1, 1), 0), std::invalid_argument);
  FlowPolicy pol(small_spec(1, 2), 0);
  EXPECT_THROW(FlowPolicy(small_spec(1, 3), pol.params()), std::invalid_argument);
}
