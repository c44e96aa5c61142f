#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ipl/rng.hpp"

namespace ipl::tab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// [nS x nA] tables.
using QTable = Matrix;
using TabularPolicy = Matrix;

/// Finite MDP with deterministic rewards. Transition row s * nA + a of `P`
/// holds p(. | s, a).
struct TabularMdp {
  std::size_t nS = 0;
  std::size_t nA = 0;
  Matrix P;  // [nS*nA x nS]
  Matrix R;  // [nS x nA]
  double gamma = 0.9;
  Vector p1;  // [nS]

  void validate() const;
  double prob(std::size_t s, std::size_t a, std::size_t s_next) const { return P(s * nA + a, s_next); }
};

struct RandomMdpOptions {
  std::size_t min_states = 2;
  std::size_t max_states = 6;
  std::size_t min_actions = 2;
  std::size_t max_actions = 4;
  /// Each (s, a) reaches between 1 and max_successors next states.
  std::size_t max_successors = 3;
  double gamma_low = 0.5;
  double gamma_high = 0.95;
};

TabularMdp random_mdp(Rng& rng, const RandomMdpOptions& options = {});
/// Fully specified random MDP with dense transitions.
TabularMdp random_mdp(std::size_t nS, std::size_t nA, double gamma, Rng& rng);

void validate_policy(const TabularPolicy& pi, std::size_t nS, std::size_t nA);

/// Row-wise next-state summaries V(s') of a Q-table.
Vector max_value(const QTable& Q);
/// sum_a softmax(Q(s,.)/beta)_a Q(s,a), max-subtracted.
Vector boltzmann_value(const QTable& Q, double beta);
/// beta * log((1/nA) sum_a exp(Q(s,a)/beta)), max-subtracted.
Vector mellowmax_value(const QTable& Q, double beta);
/// softmax(Q(s,.)/beta) per row.
TabularPolicy softmax_policy(const QTable& Q, double beta);

/// R + gamma * E_{s'}[V(s')].
QTable backup(const TabularMdp& mdp, const Vector& v);
QTable bellman_opt(const QTable& Q, const TabularMdp& mdp);
QTable boltzmann_op(const QTable& Q, const TabularMdp& mdp, double beta);
QTable mellowmax_op(const QTable& Q, const TabularMdp& mdp, double beta);

struct InequalityReport {
  bool holds = true;
  double max_violation = 0.0;
  /// (s, a) where the three backups agree within tolerance.
  std::vector<std::pair<std::size_t, std::size_t>> equality_sites;
  /// Every equality site has only constant next-state rows, and every
  /// (s, a) with only constant next-state rows is an equality site.
  bool equality_matches_constant_rows = true;
};

/// Elementwise T*Q >= T_B Q >= T_s Q with tolerance `tol`.
InequalityReport operator_inequality_check(const QTable& Q, const TabularMdp& mdp, double beta, double tol = 1e-9);

/// Per-state Shannon entropy of a policy.
Vector policy_entropy(const TabularPolicy& pi);
/// KL(pi(.|s) || pi_old(.|s)) per state.
Vector policy_kl(const TabularPolicy& pi, const TabularPolicy& pi_old);

/// State transition matrix under a policy, [nS x nS].
Matrix state_transition(const TabularMdp& mdp, const TabularPolicy& pi);

struct PolicyValue {
  QTable Q;
  double J = 0.0;
};

/// Solves (I - gamma P^pi) Q = R exactly; J = E_{p1, pi}[Q].
PolicyValue policy_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi);
/// Same with per-step reward augmented by beta * H[pi(.|s)].
PolicyValue policy_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi, const QTable& reward);
double maxent_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi, double beta);
/// J(pi) + beta * E_{pi_old}[sum_t gamma^t H[pi(.|s_t)]].
double surrogate_eval(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_old, double beta);

struct LowerBoundReport {
  double lhs = 0.0;  // J_MaxEnt(pi)
  double rhs = 0.0;  // J_surr - beta gamma sqrt(alpha) eps / (1 - gamma)^2
  double slack = 0.0;
  double kl_max = 0.0;
  double penalty = 0.0;
  bool applicable = false;
  bool holds = false;
};

LowerBoundReport lower_bound_check(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_old,
                                   double beta, double alpha);

struct StationaryResult {
  TabularPolicy pi;
  QTable Q;
  double policy_residual = 0.0;    // ||pi - softmax(Q/beta)||_inf
  double operator_residual = 0.0;  // ||T_B Q - Q||_inf
  std::size_t iterations = 0;
  bool converged = false;
};

/// Damped search pi <- (1 - eta) pi + eta softmax(Q^pi / beta) from the
/// uniform policy, stopping once the policy residual is below `tol`.
StationaryResult boltzmann_stationary(const TabularMdp& mdp, double beta, double tol = 1e-11,
                                      std::size_t max_iters = 20000, double eta = 0.1);

struct FixedPointResult {
  QTable Q;
  std::size_t iterations = 0;
  /// ||Q_{k+1} - Q_k||_inf per iteration.
  std::vector<double> residuals;
};

/// Iterates T_s from Q = 0; throws std::runtime_error when the budget runs out.
FixedPointResult mellowmax_fixed_point(const TabularMdp& mdp, double beta, double tol = 1e-12,
                                       std::size_t max_iters = 100000);
/// Same for T*.
FixedPointResult value_iteration(const TabularMdp& mdp, double tol = 1e-12, std::size_t max_iters = 100000);

}  // namespace ipl::tab
