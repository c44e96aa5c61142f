#include "ipl/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ipl::tab {

namespace {

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("temperature beta must be positive and finite");
}

Vector random_simplex(std::size_t n, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = -std::log(1.0 - rng.uniform());  // Dirichlet(1)
  return v / v.sum();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

void TabularMdp::validate() const {
  const auto ns = static_cast<Eigen::Index>(nS);
  const auto na = static_cast<Eigen::Index>(nA);
  if (nS == 0 || nA == 0) throw std::invalid_argument("TabularMdp needs at least one state and one action");
  if (P.rows() != ns * na || P.cols() != ns) throw std::invalid_argument("TabularMdp P must be [nS*nA x nS]");
  if (R.rows() != ns || R.cols() != na) throw std::invalid_argument("TabularMdp R must be [nS x nA]");
  if (p1.size() != ns) throw std::invalid_argument("TabularMdp p1 must have nS entries");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TabularMdp gamma must lie in (0, 1)");
  if (!P.allFinite() || !R.allFinite() || !p1.allFinite()) throw std::invalid_argument("TabularMdp has non-finite entries");
  if ((P.array() < 0.0).any() || (p1.array() < 0.0).any()) throw std::invalid_argument("TabularMdp has negative probabilities");
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    if (std::abs(P.row(r).sum() - 1.0) > 1e-12) throw std::invalid_argument("TabularMdp transition row does not sum to 1");
  }
  if (std::abs(p1.sum() - 1.0) > 1e-12) throw std::invalid_argument("TabularMdp p1 does not sum to 1");
}

TabularMdp random_mdp(Rng& rng, const RandomMdpOptions& o) {
  TabularMdp mdp;
  mdp.nS = o.min_states + rng.index(o.max_states - o.min_states + 1);
  mdp.nA = o.min_actions + rng.index(o.max_actions - o.min_actions + 1);
  mdp.gamma = rng.uniform(o.gamma_low, o.gamma_high);
  const auto ns = static_cast<Eigen::Index>(mdp.nS);
  const auto na = static_cast<Eigen::Index>(mdp.nA);
  mdp.P = Matrix::Zero(ns * na, ns);
  std::vector<std::size_t> order(mdp.nS);
  for (Eigen::Index row = 0; row < ns * na; ++row) {
    std::iota(order.begin(), order.end(), 0);
    const std::size_t k = 1 + rng.index(std::min(o.max_successors, mdp.nS));
    for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.index(mdp.nS - i)]);
    const Vector w = random_simplex(k, rng);
    for (std::size_t i = 0; i < k; ++i) mdp.P(row, static_cast<Eigen::Index>(order[i])) = w(static_cast<Eigen::Index>(i));
  }
  mdp.R = Matrix::NullaryExpr(ns, na, [&]() { return rng.uniform(-1.0, 1.0); });
  mdp.p1 = random_simplex(mdp.nS, rng);
  return mdp;
}

TabularMdp random_mdp(std::size_t nS, std::size_t nA, double gamma, Rng& rng) {
  TabularMdp mdp;
  mdp.nS = nS;
  mdp.nA = nA;
  mdp.gamma = gamma;
  const auto ns = static_cast<Eigen::Index>(nS);
  const auto na = static_cast<Eigen::Index>(nA);
  mdp.P.resize(ns * na, ns);
  for (Eigen::Index row = 0; row < ns * na; ++row) mdp.P.row(row) = random_simplex(nS, rng).transpose();
  mdp.R = Matrix::NullaryExpr(ns, na, [&]() { return rng.uniform(-1.0, 1.0); });
  mdp.p1 = random_simplex(nS, rng);
  mdp.validate();
  return mdp;
}

void validate_policy(const TabularPolicy& pi, std::size_t nS, std::size_t nA) {
  if (pi.rows() != static_cast<Eigen::Index>(nS) || pi.cols() != static_cast<Eigen::Index>(nA)) {
    throw std::invalid_argument("tabular policy must be [nS x nA]");
  }
  if (!pi.allFinite() || (pi.array() < 0.0).any()) throw std::invalid_argument("tabular policy has invalid entries");
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    if (std::abs(pi.row(s).sum() - 1.0) > 1e-12) throw std::invalid_argument("tabular policy row does not sum to 1");
  }
}

Vector max_value(const QTable& Q) { return Q.rowwise().maxCoeff(); }

Vector boltzmann_value(const QTable& Q, double beta) {
  require_beta(beta);
  Vector out(Q.rows());
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    const double m = Q.row(s).maxCoeff();
    const Eigen::RowVectorXd w = ((Q.row(s).array() - m) / beta).exp().matrix();
    out(s) = w.dot(Q.row(s)) / w.sum();
  }
  return out;
}

Vector mellowmax_value(const QTable& Q, double beta) {
  require_beta(beta);
  Vector out(Q.rows());
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    const double m = Q.row(s).maxCoeff();
    const double mean_exp = ((Q.row(s).array() - m) / beta).exp().mean();
    out(s) = m + beta * std::log(mean_exp);
  }
  return out;
}

TabularPolicy softmax_policy(const QTable& Q, double beta) {
  require_beta(beta);
  TabularPolicy pi(Q.rows(), Q.cols());
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    const double m = Q.row(s).maxCoeff();
    pi.row(s) = ((Q.row(s).array() - m) / beta).exp().matrix();
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

QTable backup(const TabularMdp& mdp, const Vector& v) {
  const Vector pv = mdp.P * v;
  QTable out(mdp.R.rows(), mdp.R.cols());
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    for (Eigen::Index a = 0; a < out.cols(); ++a) out(s, a) = mdp.R(s, a) + mdp.gamma * pv(s * out.cols() + a);
  }
  return out;
}

QTable bellman_opt(const QTable& Q, const TabularMdp& mdp) { return backup(mdp, max_value(Q)); }
QTable boltzmann_op(const QTable& Q, const TabularMdp& mdp, double beta) { return backup(mdp, boltzmann_value(Q, beta)); }
QTable mellowmax_op(const QTable& Q, const TabularMdp& mdp, double beta) { return backup(mdp, mellowmax_value(Q, beta)); }

InequalityReport operator_inequality_check(const QTable& Q, const TabularMdp& mdp, double beta, double tol) {
  const QTable ts = bellman_opt(Q, mdp);
  const QTable tb = boltzmann_op(Q, mdp, beta);
  const QTable tm = mellowmax_op(Q, mdp, beta);
  InequalityReport report;
  const Vector spread = Q.rowwise().maxCoeff() - Q.rowwise().minCoeff();
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    for (Eigen::Index a = 0; a < Q.cols(); ++a) {
      const double v = std::max({0.0, tb(s, a) - ts(s, a), tm(s, a) - tb(s, a)});
      report.max_violation = std::max(report.max_violation, v);
      const bool equal = std::abs(ts(s, a) - tb(s, a)) <= tol && std::abs(tb(s, a) - tm(s, a)) <= tol;
      if (equal) report.equality_sites.emplace_back(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
      bool constant_rows = true;
      for (Eigen::Index sn = 0; sn < Q.rows(); ++sn) {
        if (mdp.P(s * Q.cols() + a, sn) > 0.0 && spread(sn) > 0.0) constant_rows = false;
      }
      if (equal != constant_rows) report.equality_matches_constant_rows = false;
    }
  }
  report.holds = report.max_violation <= tol;
  return report;
}

Vector policy_entropy(const TabularPolicy& pi) {
  Vector h = Vector::Zero(pi.rows());
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    for (Eigen::Index a = 0; a < pi.cols(); ++a) {
      if (pi(s, a) > 0.0) h(s) -= pi(s, a) * std::log(pi(s, a));
    }
  }
  return h;
}

Vector policy_kl(const TabularPolicy& pi, const TabularPolicy& pi_old) {
  Vector kl = Vector::Zero(pi.rows());
  for (Eigen::Index s = 0; s < pi.rows(); ++s) {
    for (Eigen::Index a = 0; a < pi.cols(); ++a) {
      if (pi(s, a) <= 0.0) continue;
      kl(s) += pi_old(s, a) > 0.0 ? pi(s, a) * std::log(pi(s, a) / pi_old(s, a)) : std::numeric_limits<double>::infinity();
    }
  }
  return kl;
}

Matrix state_transition(const TabularMdp& mdp, const TabularPolicy& pi) {
  const auto ns = static_cast<Eigen::Index>(mdp.nS);
  const auto na = static_cast<Eigen::Index>(mdp.nA);
  Matrix out = Matrix::Zero(ns, ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 0; a < na; ++a) out.row(s) += pi(s, a) * mdp.P.row(s * na + a);
  }
  return out;
}

PolicyValue policy_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi, const QTable& reward) {
  validate_policy(pi, mdp.nS, mdp.nA);
  const auto ns = static_cast<Eigen::Index>(mdp.nS);
  const auto na = static_cast<Eigen::Index>(mdp.nA);
  const Eigen::Index n = ns * na;
  Matrix M = Matrix::Identity(n, n);
  for (Eigen::Index sa = 0; sa < n; ++sa) {
    for (Eigen::Index sn = 0; sn < ns; ++sn) {
      const double p = mdp.P(sa, sn);
      if (p == 0.0) continue;
      for (Eigen::Index an = 0; an < na; ++an) M(sa, sn * na + an) -= mdp.gamma * p * pi(sn, an);
    }
  }
  Vector r(n);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 0; a < na; ++a) r(s * na + a) = reward(s, a);
  }
  const Vector q = M.partialPivLu().solve(r);
  PolicyValue out;
  out.Q.resize(ns, na);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 0; a < na; ++a) out.Q(s, a) = q(s * na + a);
  }
  out.J = mdp.p1.dot(pi.cwiseProduct(out.Q).rowwise().sum());
  return out;
}

PolicyValue policy_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi) { return policy_eval_exact(mdp, pi, mdp.R); }

double maxent_eval_exact(const TabularMdp& mdp, const TabularPolicy& pi, double beta) {
  const Vector h = policy_entropy(pi);
  QTable reward = mdp.R;
  reward.colwise() += beta * h;
  return policy_eval_exact(mdp, pi, reward).J;
}

double surrogate_eval(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_old, double beta) {
  validate_policy(pi_old, mdp.nS, mdp.nA);
  const double j = policy_eval_exact(mdp, pi).J;
  const auto ns = static_cast<Eigen::Index>(mdp.nS);
  const Matrix M = Matrix::Identity(ns, ns) - mdp.gamma * state_transition(mdp, pi_old);
  const Vector discounted_entropy = M.partialPivLu().solve(policy_entropy(pi));
  return j + beta * mdp.p1.dot(discounted_entropy);
}

LowerBoundReport lower_bound_check(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_old,
                                   double beta, double alpha) {
  LowerBoundReport r;
  r.kl_max = policy_kl(pi, pi_old).maxCoeff();
  r.applicable = r.kl_max <= alpha;
  const double eps = policy_entropy(pi).cwiseAbs().maxCoeff();
  r.penalty = beta * mdp.gamma * std::sqrt(alpha) * eps / ((1.0 - mdp.gamma) * (1.0 - mdp.gamma));
  r.lhs = maxent_eval_exact(mdp, pi, beta);
  r.rhs = surrogate_eval(mdp, pi, pi_old, beta) - r.penalty;
  r.slack = r.lhs - r.rhs;
  r.holds = r.slack >= -1e-10;
  return r;
}

StationaryResult boltzmann_stationary(const TabularMdp& mdp, double beta, double tol, std::size_t max_iters, double eta) {
  require_beta(beta);
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("damping eta must lie in (0, 1]");
  StationaryResult out;
  out.pi = TabularPolicy::Constant(static_cast<Eigen::Index>(mdp.nS), static_cast<Eigen::Index>(mdp.nA),
                                   1.0 / static_cast<double>(mdp.nA));
  for (out.iterations = 0; out.iterations < max_iters; ++out.iterations) {
    out.Q = policy_eval_exact(mdp, out.pi).Q;
    const TabularPolicy target = softmax_policy(out.Q, beta);
    out.policy_residual = max_abs(out.pi - target);
    if (out.policy_residual <= tol) {
      out.converged = true;
      break;
    }
    out.pi = (1.0 - eta) * out.pi + eta * target;
    out.pi = out.pi.array().colwise() / out.pi.rowwise().sum().array();
  }
  if (!out.converged) {
    out.Q = policy_eval_exact(mdp, out.pi).Q;
    out.policy_residual = max_abs(out.pi - softmax_policy(out.Q, beta));
  }
  out.operator_residual = max_abs(boltzmann_op(out.Q, mdp, beta) - out.Q);
  return out;
}

namespace {
template <typename Op>
FixedPointResult iterate(const TabularMdp& mdp, Op op, double tol, std::size_t max_iters, const char* name) {
  mdp.validate();
  FixedPointResult out;
  out.Q = QTable::Zero(static_cast<Eigen::Index>(mdp.nS), static_cast<Eigen::Index>(mdp.nA));
  for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
    QTable next = op(out.Q);
    const double res = max_abs(next - out.Q);
    out.residuals.push_back(res);
    out.Q = std::move(next);
    if (res <= tol) return out;
  }
  throw std::runtime_error(std::string(name) + ": iteration budget exceeded");
}
}  // namespace

FixedPointResult mellowmax_fixed_point(const TabularMdp& mdp, double beta, double tol, std::size_t max_iters) {
  require_beta(beta);
  return iterate(mdp, [&](const QTable& q) { return mellowmax_op(q, mdp, beta); }, tol, max_iters, "mellowmax_fixed_point");
}

FixedPointResult value_iteration(const TabularMdp& mdp, double tol, std::size_t max_iters) {
  return iterate(mdp, [&](const QTable& q) { return bellman_opt(q, mdp); }, tol, max_iters, "value_iteration");
}

}  // namespace ipl::tab
