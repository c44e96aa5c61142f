#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ipl::cli {

struct GradCheckRow {
  std::string target;
  std::string name;
  double max_rel_error = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Tolerance applied to the individual autodiff ops.
inline constexpr double kOpTolerance = 1e-5;

/// Targets: ops | nfp-logprob | nfp-entropy | nbp-sample | classifier-loss | all.
/// Ops are held to kOpTolerance; model targets to `tol`.
std::vector<GradCheckRow> run_grad_checks(const std::string& target, double tol, double step, std::uint64_t seed);

nlohmann::json to_json(const std::vector<GradCheckRow>& rows);

}  // namespace ipl::cli
