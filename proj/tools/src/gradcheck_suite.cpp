#include "ipl/cli/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "ipl/blackbox_policy.hpp"
#include "ipl/entropy_estimator.hpp"
#include "ipl/flow_policy.hpp"
#include "ipl/grad_check.hpp"

namespace ipl::cli {

namespace {

// Fixed weights so every output coordinate contributes with a distinct scale.
Tensor weights(const Shape& shape) {
  Tensor w(shape);
  for (std::size_t i = 0; i < w.size(); ++i) w.values()[i] = 1.0 + 0.5 * std::sin(1.3 * static_cast<double>(i) + 0.7);
  return w;
}

Var weighted_sum(ad::Graph& g, Var y) { return ad::sum(ad::mul(y, g.constant(weights(y.shape())))); }

// Uniform entries with magnitude in [lo, hi] and random sign.
Tensor away_from_zero(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(lo, hi);
  return t;
}

struct OpCase {
  std::string name;
  Tensor point;
  ad::ScalarFn fn;
};

std::vector<OpCase> op_cases(Rng& rng) {
  std::vector<OpCase> cases;
  auto add_case = [&](std::string name, Tensor point, std::function<Var(ad::Graph&, Var)> op) {
    cases.push_back({std::move(name), std::move(point),
                     [op](ad::Graph& g, Var x) { return weighted_sum(g, op(g, x)); }});
  };
  const Tensor c34 = rng.normal_tensor({3, 4});
  const Tensor row4 = rng.normal_tensor({1, 4});
  const Tensor col3 = rng.normal_tensor({3, 1});
  const Tensor pos34 = rng.uniform_tensor({3, 4}, 0.5, 2.0);

  add_case("add", rng.normal_tensor({3, 4}), [c34](ad::Graph& g, Var x) { return ad::add(x, g.constant(c34)); });
  add_case("add/broadcast-row", rng.normal_tensor({1, 4}),
           [c34](ad::Graph& g, Var x) { return ad::add(g.constant(c34), x); });
  add_case("add/broadcast-col", rng.normal_tensor({3, 1}),
           [c34](ad::Graph& g, Var x) { return ad::add(g.constant(c34), x); });
  add_case("add/broadcast-scalar", Tensor::scalar(0.3),
           [c34](ad::Graph& g, Var x) { return ad::add(g.constant(c34), x); });
  add_case("sub/lhs", rng.normal_tensor({3, 4}), [row4](ad::Graph& g, Var x) { return ad::sub(x, g.constant(row4)); });
  add_case("sub/rhs", rng.normal_tensor({1, 4}), [c34](ad::Graph& g, Var x) { return ad::sub(g.constant(c34), x); });
  add_case("mul/lhs", rng.normal_tensor({3, 4}), [c34](ad::Graph& g, Var x) { return ad::mul(x, g.constant(c34)); });
  add_case("mul/rhs", rng.normal_tensor({3, 1}), [c34](ad::Graph& g, Var x) { return ad::mul(g.constant(c34), x); });
  add_case("mul/self", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::mul(x, x); });
  add_case("div/numerator", rng.normal_tensor({3, 4}),
           [pos34](ad::Graph& g, Var x) { return ad::div(x, g.constant(pos34)); });
  add_case("div/denominator", rng.uniform_tensor({3, 4}, 0.5, 2.0),
           [c34](ad::Graph& g, Var x) { return ad::div(g.constant(c34), x); });
  add_case("div/broadcast-row", rng.uniform_tensor({1, 4}, 0.5, 2.0),
           [c34](ad::Graph& g, Var x) { return ad::div(g.constant(c34), x); });
  {
    // Operands differ by at least 0.2 so no probe crosses the switch.
    const Tensor x0 = rng.normal_tensor({3, 4});
    Tensor other = x0;
    for (std::size_t i = 0; i < other.size(); ++i) other.values()[i] += (i % 2 ? 0.2 : -0.2) - 0.3 * rng.uniform();
    add_case("minimum", x0, [other](ad::Graph& g, Var x) { return ad::minimum(x, g.constant(other)); });
  }
  {
    const Tensor b = rng.normal_tensor({4, 2});
    const Tensor a = rng.normal_tensor({3, 4});
    add_case("matmul/lhs", rng.normal_tensor({3, 4}), [b](ad::Graph& g, Var x) { return ad::matmul(x, g.constant(b)); });
    add_case("matmul/rhs", rng.normal_tensor({4, 2}), [a](ad::Graph& g, Var x) { return ad::matmul(g.constant(a), x); });
  }
  add_case("tanh", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::tanh(x); });
  add_case("relu", away_from_zero(rng, {3, 4}, 0.1, 1.5), [](ad::Graph&, Var x) { return ad::relu(x); });
  add_case("sigmoid", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::sigmoid(x); });
  add_case("exp", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::exp(x); });
  add_case("log", rng.uniform_tensor({3, 4}, 0.3, 3.0), [](ad::Graph&, Var x) { return ad::log(x); });
  add_case("softplus", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::softplus(x); });
  add_case("square", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::square(x); });
  add_case("neg", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::neg(x); });
  add_case("scale", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::scale(x, -1.7); });
  {
    Tensor x0({3, 4});
    const double picks[] = {-1.4, -0.3, 0.1, 0.45, 1.2, -0.9};
    for (std::size_t i = 0; i < x0.size(); ++i) x0.values()[i] = picks[i % 6] + 0.05 * rng.uniform();
    add_case("clamp", x0, [](ad::Graph&, Var x) { return ad::clamp(x, -0.7, 0.8); });
  }
  add_case("sum", rng.normal_tensor({3, 4}), [](ad::Graph& g, Var x) { return ad::mul(ad::sum(x), g.scalar(1.3)); });
  add_case("sum_rows", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::sum_rows(x); });
  add_case("mean", rng.normal_tensor({3, 4}), [](ad::Graph& g, Var x) { return ad::mul(ad::mean(x), g.scalar(0.7)); });
  add_case("concat", rng.normal_tensor({3, 2}),
           [c34, col3](ad::Graph& g, Var x) { return ad::concat({g.constant(c34), x, ad::square(x), g.constant(col3)}); });
  add_case("slice", rng.normal_tensor({3, 4}), [](ad::Graph&, Var x) { return ad::slice(x, 1, 3); });
  {
    Tensor mask({3, 4});
    for (std::size_t i = 0; i < mask.size(); ++i) mask.values()[i] = (i % 3 == 0) ? 0.0 : 1.0;
    add_case("mask_mul", rng.normal_tensor({3, 4}), [mask](ad::Graph&, Var x) { return ad::mask_mul(x, mask); });
  }
  add_case("layer_norm", rng.normal_tensor({3, 5}), [](ad::Graph&, Var x) { return ad::layer_norm(x); });
  {
    const Tensor mu = rng.normal_tensor({4, 3});
    const Tensor sigma = rng.uniform_tensor({4, 3}, 0.1, 0.5);
    const Tensor x0 = rng.normal_tensor({2, 4});
    const Tensor noise = rng.normal_tensor({2, 3});
    add_case("noisy_matmul/x", x0, [mu, sigma, noise](ad::Graph& g, Var x) {
      return ad::noisy_matmul(x, g.constant(mu), g.constant(sigma), noise);
    });
    add_case("noisy_matmul/mu", mu, [x0, sigma, noise](ad::Graph& g, Var m) {
      return ad::noisy_matmul(g.constant(x0), m, g.constant(sigma), noise);
    });
    add_case("noisy_matmul/sigma", sigma, [x0, mu, noise](ad::Graph& g, Var s) {
      return ad::noisy_matmul(g.constant(x0), g.constant(mu), s, noise);
    });
  }
  add_case("composite", rng.normal_tensor({3, 4}), [row4](ad::Graph& g, Var x) {
    return ad::log(ad::add(ad::softplus(ad::matmul(ad::tanh(x), g.constant(row4.reshaped({4, 1})))), g.scalar(1.0)));
  });
  return cases;
}

GradCheckRow row_from(std::string target, std::string name, const ad::GradCheckReport& r, double tol) {
  return {std::move(target), std::move(name), r.max_rel_error, tol, r.max_rel_error <= tol};
}

void check_ops(std::vector<GradCheckRow>& rows, double step, Rng& rng) {
  for (const OpCase& c : op_cases(rng)) {
    rows.push_back(row_from("ops", c.name, ad::finite_diff_check(c.fn, c.point, step, kOpTolerance), kOpTolerance));
  }
}

std::vector<flow::FlowSpec> flow_specs() {
  flow::FlowSpec even;
  even.state_dim = 2;
  even.action_dim = 2;
  flow::FlowSpec odd;
  odd.state_dim = 3;
  odd.action_dim = 3;
  odd.embed_hidden = {16, 16};
  return {even, odd};
}

void check_nfp_logprob(std::vector<GradCheckRow>& rows, double tol, double step, Rng& rng) {
  for (const flow::FlowSpec& spec : flow_specs()) {
    const flow::FlowPolicy policy(spec, rng.engine()());
    const Tensor s = rng.normal_tensor({4, spec.state_dim});
    const Tensor a = rng.uniform_tensor({4, spec.action_dim}, -0.9, 0.9);
    const auto report = nn::check_param_gradients(
        policy.params(),
        [&](ad::Graph& g, const nn::BoundParams& p) { return ad::mean(policy.log_prob(p, g.constant(s), g.constant(a))); },
        step, tol);
    rows.push_back(row_from("nfp-logprob", "m=" + std::to_string(spec.action_dim), report, tol));
  }
}

void check_nfp_entropy(std::vector<GradCheckRow>& rows, double tol, double step, Rng& rng) {
  for (const flow::FlowSpec& spec : flow_specs()) {
    const flow::FlowPolicy policy(spec, rng.engine()());
    const Tensor s = rng.normal_tensor({4, spec.state_dim});
    const Tensor noise = rng.normal_tensor({4, spec.action_dim});
    const auto report = nn::check_param_gradients(
        policy.params(),
        [&](ad::Graph& g, const nn::BoundParams& p) { return policy.entropy_estimate(p, g.constant(s), noise); }, step,
        tol);
    rows.push_back(row_from("nfp-entropy", "m=" + std::to_string(spec.action_dim), report, tol));
  }
}

void check_nbp_sample(std::vector<GradCheckRow>& rows, double tol, double step, Rng& rng) {
  nbp::NbpSpec spec;
  spec.hidden = {8, 8};
  spec.rho_init = -1.5;
  for (bool layer_norm : {true, false}) {
    spec.layer_norm = layer_norm;
    const nbp::NoisyMlpPolicy policy(spec, rng.engine()());
    const Tensor s = rng.normal_tensor({3, spec.state_dim});
    for (std::size_t batch : {std::size_t{0}, std::size_t{3}}) {
      const nbp::NbpNoise noise = policy.draw_noise(rng, batch);
      const auto report = nn::check_param_gradients(
          policy.params(),
          [&](ad::Graph& g, const nn::BoundParams& p) { return weighted_sum(g, policy.sample(p, g.constant(s), noise)); },
          step, tol);
      rows.push_back(row_from("nbp-sample",
                              std::string(batch == 0 ? "shared" : "per-row") + (layer_norm ? "/layer-norm" : "/plain"),
                              report, tol));
    }
  }
}

void check_classifier(std::vector<GradCheckRow>& rows, double tol, double step, Rng& rng) {
  const ent::ActionBox box{{-1.0, -1.0}, {1.0, 1.0}};
  const ent::DensityClassifier clf(2, box, {16, 16}, rng.engine()());
  const Tensor s = rng.normal_tensor({6, 2});
  const Tensor pos = rng.uniform_tensor({6, 2}, -0.5, 0.5);
  const Tensor neg = box.uniform(6, rng);
  const auto report = nn::check_param_gradients(
      clf.params(),
      [&](ad::Graph& g, const nn::BoundParams& p) {
        const Var sv = g.constant(s);
        return ent::classifier_loss(clf.logits(p, sv, g.constant(pos)), clf.logits(p, sv, g.constant(neg)));
      },
      step, tol);
  rows.push_back(row_from("classifier-loss", "parameters", report, tol));
  // Entropy surrogate gradient with respect to the actions.
  const auto action_report = ad::finite_diff_check(
      [&](ad::Graph& g, Var a) { return ent::entropy_surrogate(clf, g.constant(s), a); }, pos, step, tol);
  rows.push_back(row_from("classifier-loss", "surrogate/actions", action_report, tol));
}

}  // namespace

std::vector<GradCheckRow> run_grad_checks(const std::string& target, double tol, double step, std::uint64_t seed) {
  const bool all = target == "all";
  bool known = all;
  std::vector<GradCheckRow> rows;
  Rng rng(seed);
  if (all || target == "ops") {
    known = true;
    check_ops(rows, step, rng);
  }
  if (all || target == "nfp-logprob") {
    known = true;
    check_nfp_logprob(rows, tol, step, rng);
  }
  if (all || target == "nfp-entropy") {
    known = true;
    check_nfp_entropy(rows, tol, step, rng);
  }
  if (all || target == "nbp-sample") {
    known = true;
    check_nbp_sample(rows, tol, step, rng);
  }
  if (all || target == "classifier-loss") {
    known = true;
    check_classifier(rows, tol, step, rng);
  }
  if (!known) throw std::invalid_argument("unknown grad-check target '" + target + "'");
  return rows;
}

nlohmann::json to_json(const std::vector<GradCheckRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  bool pass = true;
  for (const auto& r : rows) {
    out.push_back({{"target", r.target}, {"name", r.name}, {"max_rel_error", r.max_rel_error}, {"tol", r.tol},
                   {"pass", r.pass}});
    pass = pass && r.pass;
  }
  return {{"checks", out}, {"pass", pass}};
}

}  // namespace ipl::cli
