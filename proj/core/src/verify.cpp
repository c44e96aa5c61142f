#include "ipl/verify.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ipl::tab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TabularPolicy random_policy(std::size_t nS, std::size_t nA, Rng& rng) {
  QTable logits(static_cast<Eigen::Index>(nS), static_cast<Eigen::Index>(nA));
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  return softmax_policy(logits, rng.uniform(0.2, 2.0));
}

}  // namespace

TabularPolicy perturb_policy(const TabularPolicy& pi_old, double target_kl, Rng& rng) {
  Matrix z(pi_old.rows(), pi_old.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  auto tilt = [&](double t) {
    TabularPolicy pi = pi_old.array() * (t * z).array().exp();
    pi = pi.array().colwise() / pi.rowwise().sum().array();
    return pi;
  };
  auto kl = [&](double t) { return policy_kl(tilt(t), pi_old).maxCoeff(); };
  if (target_kl <= 0.0) return pi_old;
  double hi = 1.0;
  while (kl(hi) < target_kl && hi < 1e6) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (kl(mid) <= target_kl ? lo : hi) = mid;
  }
  return tilt(lo);
}

OperatorSuiteReport run_operator_suite(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  OperatorSuiteReport report;
  report.instances = instances;
  report.seed = seed;
  Rng rng(seed);
  constexpr double kBetas[] = {0.1, 1.0, 10.0};
  for (std::size_t i = 0; i < instances; ++i) {
    const TabularMdp mdp = random_mdp(rng);
    const double scale = rng.uniform(0.5, 5.0);
    QTable Q(static_cast<Eigen::Index>(mdp.nS), static_cast<Eigen::Index>(mdp.nA));
    for (Eigen::Index s = 0; s < Q.rows(); ++s) {
      if (rng.bernoulli(0.3)) {
        Q.row(s).setConstant(rng.uniform(-scale, scale));
      } else {
        for (Eigen::Index a = 0; a < Q.cols(); ++a) Q(s, a) = rng.uniform(-scale, scale);
      }
    }
    const InequalityReport r = operator_inequality_check(Q, mdp, kBetas[i % 3]);
    report.max_violation = std::max(report.max_violation, r.max_violation);
    report.equality_sites += r.equality_sites.size();
    if (!r.holds) ++report.failures;
    if (!r.equality_matches_constant_rows) ++report.equality_mismatches;
  }
  report.seconds = elapsed(start);
  return report;
}

FixedPointSuiteReport run_fixed_point_suite(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  FixedPointSuiteReport report;
  report.instances = instances;
  report.seed = seed;
  Rng rng(seed);
  RandomMdpOptions options;
  options.max_states = 4;
  options.max_actions = 3;
  options.gamma_high = 0.9;
  constexpr double kBetas[] = {0.5, 1.0, 2.0};
  for (std::size_t i = 0; i < instances; ++i) {
    const TabularMdp mdp = random_mdp(rng, options);
    const StationaryResult r = boltzmann_stationary(mdp, kBetas[i % 3]);
    if (!r.converged) {
      report.non_converged.push_back(i);
      continue;
    }
    ++report.converged;
    report.max_operator_residual = std::max(report.max_operator_residual, r.operator_residual);
    report.max_policy_residual = std::max(report.max_policy_residual, r.policy_residual);
  }
  report.seconds = elapsed(start);
  return report;
}

LowerBoundSuiteReport run_lower_bound_suite(std::size_t instances, std::uint64_t seed, double alpha) {
  const auto start = Clock::now();
  LowerBoundSuiteReport report;
  report.instances = instances;
  report.seed = seed;
  report.alpha = alpha;
  report.min_slack = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    const TabularMdp mdp = random_mdp(rng);
    const TabularPolicy pi_old = random_policy(mdp.nS, mdp.nA, rng);
    const TabularPolicy pi = perturb_policy(pi_old, alpha * rng.uniform(0.05, 1.0), rng);
    const double beta = rng.uniform(0.01, 2.0);
    const LowerBoundReport r = lower_bound_check(mdp, pi, pi_old, beta, alpha);
    report.max_kl = std::max(report.max_kl, r.kl_max);
    report.min_slack = std::min(report.min_slack, r.slack);
    if (r.applicable) ++report.applicable;
    if (r.applicable && r.holds) ++report.holds;
  }
  if (instances == 0) report.min_slack = 0.0;
  report.seconds = elapsed(start);
  return report;
}

nlohmann::json to_json(const OperatorSuiteReport& r) {
  return {{"suite", "operators"},          {"instances", r.instances},
          {"seed", r.seed},                {"failures", r.failures},
          {"max_violation", r.max_violation}, {"equality_sites", r.equality_sites},
          {"equality_mismatches", r.equality_mismatches}, {"seconds", r.seconds},
          {"pass", r.pass()}};
}

nlohmann::json to_json(const FixedPointSuiteReport& r) {
  return {{"suite", "fixed-points"},
          {"instances", r.instances},
          {"seed", r.seed},
          {"converged", r.converged},
          {"non_converged", r.non_converged},
          {"max_operator_residual", r.max_operator_residual},
          {"max_policy_residual", r.max_policy_residual},
          {"seconds", r.seconds},
          {"pass", r.pass()}};
}

nlohmann::json to_json(const LowerBoundSuiteReport& r) {
  return {{"suite", "lower-bound"}, {"instances", r.instances}, {"seed", r.seed},
          {"alpha", r.alpha},       {"applicable", r.applicable}, {"holds", r.holds},
          {"min_slack", r.min_slack}, {"max_kl", r.max_kl},       {"seconds", r.seconds},
          {"pass", r.pass()}};
}

}  // namespace ipl::tab
