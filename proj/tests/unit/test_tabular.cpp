#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ipl/tabular.hpp"
#include "ipl/verify.hpp"

using namespace ipl;
using namespace ipl::tab;

namespace {

constexpr double kE = std::numbers::e;

/// One state that loops onto itself under every action.
TabularMdp single_state(std::vector<double> rewards, double gamma) {
  TabularMdp m;
  m.nS = 1;
  m.nA = rewards.size();
  m.P = Matrix::Ones(m.nA, 1);
  m.R = Matrix(1, m.nA);
  for (std::size_t a = 0; a < m.nA; ++a) m.R(0, a) = rewards[a];
  m.gamma = gamma;
  m.p1 = Vector::Ones(1);
  return m;
}

TabularPolicy uniform(std::size_t nS, std::size_t nA) {
  return TabularPolicy::Constant(nS, nA, 1.0 / static_cast<double>(nA));
}

TabularPolicy random_policy(std::size_t nS, std::size_t nA, Rng& rng) {
  TabularPolicy pi(nS, nA);
  for (std::size_t s = 0; s < nS; ++s) {
    for (std::size_t a = 0; a < nA; ++a) pi(s, a) = rng.uniform(0.05, 1.0);
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

double linf(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// sum_t gamma^t E[r_t] + beta * sum_t gamma^t E_{pi_old}[H(pi | s_t)],
/// by propagating state marginals for `horizon` steps.
double truncated_surrogate(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_old, double beta,
                           std::size_t horizon) {
  const Vector h = policy_entropy(pi);
  const Matrix P_pi = state_transition(mdp, pi), P_old = state_transition(mdp, pi_old);
  Vector r_pi(mdp.nS);
  for (std::size_t s = 0; s < mdp.nS; ++s) r_pi(s) = pi.row(s).dot(mdp.R.row(s));
  Vector d = mdp.p1, d_old = mdp.p1;
  double total = 0.0, disc = 1.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    total += disc * (d.dot(r_pi) + beta * d_old.dot(h));
    d = P_pi.transpose() * d;
    d_old = P_old.transpose() * d_old;
    disc *= mdp.gamma;
  }
  return total;
}

}  // namespace

TEST(Operators, BellmanExamples) {
  const TabularMdp m = single_state({0.0, 1.0}, 0.5);
  const QTable zero = QTable::Zero(1, 2);
  EXPECT_EQ(bellman_opt(zero, m), m.R);
  QTable q(1, 2);
  q << 2.0, 4.0;
  const QTable t = bellman_opt(q, m);
  EXPECT_DOUBLE_EQ(t(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(t(0, 1), 3.0);
}

TEST(Operators, RowZeroOneArithmetic) {
  QTable row(1, 2);
  row << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(max_value(row)(0), 1.0);
  EXPECT_NEAR(boltzmann_value(row, 1.0)(0), kE / (1 + kE), 1e-15);
  EXPECT_NEAR(boltzmann_value(row, 1.0)(0), 0.7311, 1e-4);
  EXPECT_NEAR(mellowmax_value(row, 1.0)(0), std::log((1 + kE) / 2), 1e-15);
  EXPECT_NEAR(mellowmax_value(row, 1.0)(0), 0.6201, 1e-4);

  const TabularMdp m = single_state({0.3, -0.2}, 0.5);
  const QTable tb = boltzmann_op(row, m, 1.0), ts = mellowmax_op(row, m, 1.0);
  EXPECT_NEAR(tb(0, 0), 0.3 + 0.5 * kE / (1 + kE), 1e-15);
  EXPECT_NEAR(ts(0, 1), -0.2 + 0.5 * std::log((1 + kE) / 2), 1e-15);
}

TEST(Operators, TemperatureLimits) {
  Rng rng(1);
  const TabularMdp m = random_mdp(4, 3, 0.9, rng);
  QTable q(4, 3);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = rng.normal();
  EXPECT_LE(linf(boltzmann_op(q, m, 1e-6), bellman_opt(q, m)), 1e-4);

  QTable row(1, 2);
  row << 0.0, 1.0;
  EXPECT_NEAR(mellowmax_value(row, 1e6)(0), 0.5, 1e-5);
  EXPECT_NEAR(boltzmann_value(row, 1e6)(0), 0.5, 1e-5);
}

TEST(Operators, NonPositiveTemperatureRejected) {
  const TabularMdp m = single_state({0.0, 1.0}, 0.5);
  const QTable q = QTable::Zero(1, 2);
  for (double beta : {0.0, -1.0}) {
    EXPECT_THROW(boltzmann_op(q, m, beta), std::invalid_argument);
    EXPECT_THROW(mellowmax_op(q, m, beta), std::invalid_argument);
  }
}

TEST(Operators, ConstantQMakesAllThreeEqual) {
  Rng rng(2);
  const TabularMdp m = random_mdp(5, 3, 0.8, rng);
  QTable q(5, 3);
  for (std::size_t s = 0; s < 5; ++s) q.row(s).setConstant(rng.normal());
  for (double beta : {0.1, 1.0, 10.0}) {
    EXPECT_LE(linf(bellman_opt(q, m), boltzmann_op(q, m, beta)), 1e-12);
    EXPECT_LE(linf(bellman_opt(q, m), mellowmax_op(q, m, beta)), 1e-12);
    const InequalityReport r = operator_inequality_check(q, m, beta);
    EXPECT_TRUE(r.holds);
    EXPECT_EQ(r.equality_sites.size(), 15u);
    EXPECT_TRUE(r.equality_matches_constant_rows);
  }
}

TEST(Operators, InequalityFuzz) {
  const OperatorSuiteReport r = run_operator_suite(300, 3);
  EXPECT_EQ(r.instances, 300u);
  EXPECT_EQ(r.failures, 0u);
  EXPECT_EQ(r.equality_mismatches, 0u);
  EXPECT_GT(r.equality_sites, 0u);
  EXPECT_LE(r.max_violation, 1e-9);
}

TEST(Operators, ValueIterationContracts) {
  Rng rng(4);
  const TabularMdp m = random_mdp(6, 3, 0.9, rng);
  const FixedPointResult vi = value_iteration(m);
  ASSERT_GE(vi.residuals.size(), 2u);
  for (std::size_t k = 0; k < vi.residuals.size(); ++k) {
    EXPECT_LE(vi.residuals[k], std::pow(m.gamma, double(k)) * vi.residuals[0] * (1 + 1e-9) + 1e-15);
  }
  EXPECT_LE(linf(bellman_opt(vi.Q, m), vi.Q), 1e-11);
}

TEST(PolicyEval, ZeroReward) {
  Rng rng(5);
  TabularMdp m = random_mdp(4, 2, 0.9, rng);
  m.R.setZero();
  const PolicyValue v = policy_eval_exact(m, uniform(4, 2));
  EXPECT_EQ(v.Q.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(v.J, 0.0);
}

TEST(PolicyEval, GeometricSeries) {
  const PolicyValue v = policy_eval_exact(single_state({1.0}, 0.9), uniform(1, 1));
  EXPECT_NEAR(v.Q(0, 0), 10.0, 1e-12);
  EXPECT_NEAR(v.J, 10.0, 1e-12);
}

TEST(PolicyEval, BellmanResidual) {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const TabularMdp m = random_mdp(rng);
    const TabularPolicy pi = random_policy(m.nS, m.nA, rng);
    const PolicyValue v = policy_eval_exact(m, pi);
    Vector vs(m.nS);
    for (std::size_t s = 0; s < m.nS; ++s) vs(s) = pi.row(s).dot(v.Q.row(s));
    EXPECT_LE(linf(backup(m, vs), v.Q), 1e-10);
  }
}

TEST(PolicyEval, RejectsBadPolicy) {
  const TabularMdp m = single_state({0.0, 1.0}, 0.5);
  TabularPolicy bad(1, 2);
  bad << 0.7, 0.7;
  EXPECT_THROW(policy_eval_exact(m, bad), std::invalid_argument);
}

TEST(MaxEnt, Examples) {
  Rng rng(7);
  const TabularMdp m = random_mdp(4, 3, 0.85, rng);
  const TabularPolicy pi = random_policy(4, 3, rng);
  EXPECT_NEAR(maxent_eval_exact(m, pi, 0.0), policy_eval_exact(m, pi).J, 1e-12);

  const TabularMdp flat = single_state({0.0, 0.0}, 0.9);
  for (double beta : {0.1, 1.0, 2.5}) {
    EXPECT_NEAR(maxent_eval_exact(flat, uniform(1, 2), beta), 10 * beta * std::log(2.0), 1e-10);
  }

  TabularPolicy det = TabularPolicy::Zero(4, 3);
  det.col(1).setOnes();
  EXPECT_NEAR(maxent_eval_exact(m, det, 3.0), policy_eval_exact(m, det).J, 1e-12);
}

TEST(Surrogate, Reductions) {
  Rng rng(8);
  const TabularMdp m = random_mdp(5, 3, 0.9, rng);
  const TabularPolicy pi = random_policy(5, 3, rng), old = random_policy(5, 3, rng);
  EXPECT_NEAR(surrogate_eval(m, pi, pi, 0.7), maxent_eval_exact(m, pi, 0.7), 1e-12);
  EXPECT_NEAR(surrogate_eval(m, pi, old, 0.0), policy_eval_exact(m, pi).J, 1e-12);
}

TEST(Surrogate, MatchesTruncatedSum) {
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    const TabularMdp m = random_mdp(4, 3, 0.9, rng);
    const TabularPolicy pi = random_policy(4, 3, rng), old = random_policy(4, 3, rng);
    EXPECT_NEAR(surrogate_eval(m, pi, old, 0.5), truncated_surrogate(m, pi, old, 0.5, 200), 1e-6);
  }
}

TEST(LowerBound, IdenticalPolicies) {
  Rng rng(10);
  const TabularMdp m = random_mdp(4, 3, 0.9, rng);
  const TabularPolicy pi = random_policy(4, 3, rng);
  const LowerBoundReport r = lower_bound_check(m, pi, pi, 0.5, 0.01);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.kl_max, 0.0);
  EXPECT_NEAR(r.lhs, surrogate_eval(m, pi, pi, 0.5), 1e-12);
  EXPECT_NEAR(r.slack, r.penalty, 1e-10);
  EXPECT_GE(r.penalty, 0.0);
}

TEST(LowerBound, DeterministicPolicyHasNoPenalty) {
  Rng rng(11);
  const TabularMdp m = random_mdp(4, 3, 0.9, rng);
  TabularPolicy det = TabularPolicy::Zero(4, 3);
  det.col(0).setOnes();
  const LowerBoundReport r = lower_bound_check(m, det, det, 1.0, 0.01);
  EXPECT_EQ(r.penalty, 0.0);
  EXPECT_NEAR(r.lhs, policy_eval_exact(m, det).J, 1e-12);
  EXPECT_NEAR(r.rhs, r.lhs, 1e-12);
  EXPECT_TRUE(r.holds);
}

TEST(LowerBound, OutsideRadiusIsInapplicable) {
  Rng rng(12);
  const TabularMdp m = random_mdp(4, 3, 0.9, rng);
  const TabularPolicy old = random_policy(4, 3, rng);
  const TabularPolicy pi = perturb_policy(old, 0.05, rng);
  EXPECT_NEAR(policy_kl(pi, old).maxCoeff(), 0.05, 1e-6);
  EXPECT_FALSE(lower_bound_check(m, pi, old, 0.5, 0.01).applicable);
}

TEST(LowerBound, Fuzz) {
  const LowerBoundSuiteReport r = run_lower_bound_suite(100, 13);
  EXPECT_EQ(r.applicable, 100u);
  EXPECT_EQ(r.holds, 100u);
  EXPECT_LE(r.max_kl, 0.01 + 1e-12);
}

TEST(Stationary, SingleStateIsSoftmaxOfReward) {
  const TabularMdp m = single_state({0.2, 1.0, -0.5}, 0.8);
  const StationaryResult r = boltzmann_stationary(m, 0.5);
  ASSERT_TRUE(r.converged);
  const TabularPolicy expect = softmax_policy(m.R, 0.5);
  EXPECT_LE(linf(r.pi, expect), 1e-8);
  EXPECT_LE(r.operator_residual, 1e-8);
}

TEST(Stationary, HighTemperatureIsUniform) {
  Rng rng(14);
  const TabularMdp m = random_mdp(4, 3, 0.9, rng);
  const StationaryResult r = boltzmann_stationary(m, 1e8);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(linf(r.pi, uniform(4, 3)), 1e-6);
  EXPECT_LE(linf(r.Q, policy_eval_exact(m, uniform(4, 3)).Q), 1e-5);
  EXPECT_LE(r.operator_residual, 1e-8);
}

TEST(Stationary, BothConditionsHoldTogether) {
  Rng rng(15);
  std::size_t converged = 0;
  for (int i = 0; i < 10; ++i) {
    const TabularMdp m = random_mdp(rng);
    const double beta = rng.uniform(0.3, 3.0);
    const StationaryResult r = boltzmann_stationary(m, beta);
    if (!r.converged) continue;
    ++converged;
    // recompute independently of the reported residuals
    const PolicyValue v = policy_eval_exact(m, r.pi);
    EXPECT_LE(linf(softmax_policy(v.Q, beta), r.pi), 1e-8);
    EXPECT_LE(linf(boltzmann_op(v.Q, m, beta), v.Q), 1e-8);
  }
  EXPECT_GT(converged, 0u);
}

TEST(Mellowmax, ZeroRewardFixedPointIsZero) {
  Rng rng(16);
  TabularMdp m = random_mdp(4, 3, 0.9, rng);
  m.R.setZero();
  const FixedPointResult r = mellowmax_fixed_point(m, 0.7);
  EXPECT_EQ(r.Q.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mellowmax, ContractionEnvelope) {
  Rng rng(17);
  const TabularMdp m = random_mdp(5, 3, 0.85, rng);
  const FixedPointResult r = mellowmax_fixed_point(m, 0.5);
  for (std::size_t k = 1; k < r.residuals.size(); ++k) {
    EXPECT_LE(r.residuals[k], m.gamma * r.residuals[k - 1] * (1 + 1e-9) + 1e-15);
  }
  EXPECT_LE(linf(mellowmax_op(r.Q, m, 0.5), r.Q), 1e-11);
}

TEST(Mellowmax, ColdLimitApproachesQStar) {
  Rng rng(18);
  const TabularMdp m = random_mdp(4, 3, 0.8, rng);
  EXPECT_LE(linf(mellowmax_fixed_point(m, 1e-4).Q, value_iteration(m).Q), 1e-3);
}

TEST(Mellowmax, BudgetExceededThrows) {
  Rng rng(19);
  const TabularMdp m = random_mdp(4, 3, 0.95, rng);
  EXPECT_THROW(mellowmax_fixed_point(m, 1.0, 1e-12, 3), std::runtime_error);
}

TEST(Mdp, Validation) {
  TabularMdp m = single_state({0.0, 1.0}, 0.5);
  m.gamma = 1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.gamma = 0.5;
  m.P(0, 0) = 0.9;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Suites, FixedPointReportIsHonest) {
  const FixedPointSuiteReport r = run_fixed_point_suite(10, 20);
  EXPECT_EQ(r.converged + r.non_converged.size(), 10u);
  EXPECT_TRUE(r.pass());
  const auto j = to_json(r);
  EXPECT_TRUE(j.contains("non_converged"));
}
