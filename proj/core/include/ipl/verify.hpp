#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipl/tabular.hpp"

namespace ipl::tab {

struct OperatorSuiteReport {
  std::size_t instances = 0;
  std::uint64_t seed = 0;
  std::size_t failures = 0;
  std::size_t equality_mismatches = 0;
  std::size_t equality_sites = 0;
  double max_violation = 0.0;
  double seconds = 0.0;
  bool pass() const { return failures == 0 && equality_mismatches == 0; }
};

struct FixedPointSuiteReport {
  std::size_t instances = 0;
  std::uint64_t seed = 0;
  std::size_t converged = 0;
  std::vector<std::size_t> non_converged;  // instance indices
  double max_operator_residual = 0.0;      // over converged instances
  double max_policy_residual = 0.0;
  double seconds = 0.0;
  bool pass() const { return converged > 0 && max_operator_residual <= 1e-8 && max_policy_residual <= 1e-8; }
};

struct LowerBoundSuiteReport {
  std::size_t instances = 0;
  std::uint64_t seed = 0;
  double alpha = 0.01;
  std::size_t applicable = 0;
  std::size_t holds = 0;
  double min_slack = 0.0;
  double max_kl = 0.0;
  double seconds = 0.0;
  bool pass() const { return applicable == instances && holds == instances; }
};

/// Random (MDP, Q, beta in {0.1, 1, 10}) instances; a share of Q rows is
/// constant so equality sites occur.
OperatorSuiteReport run_operator_suite(std::size_t instances, std::uint64_t seed);
/// Damped Boltzmann stationary search on small random MDPs.
FixedPointSuiteReport run_fixed_point_suite(std::size_t instances, std::uint64_t seed);
/// Random MDPs with policy pairs at max-state KL <= alpha.
LowerBoundSuiteReport run_lower_bound_suite(std::size_t instances, std::uint64_t seed, double alpha = 0.01);

/// A policy near `pi_old` whose max-state KL from it equals `target_kl`
/// (found by bisection along a random logit direction).
TabularPolicy perturb_policy(const TabularPolicy& pi_old, double target_kl, Rng& rng);

nlohmann::json to_json(const OperatorSuiteReport& r);
nlohmann::json to_json(const FixedPointSuiteReport& r);
nlohmann::json to_json(const LowerBoundSuiteReport& r);

}  // namespace ipl::tab
