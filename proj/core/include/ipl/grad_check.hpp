#pragma once

#include <functional>

#include "ipl/graph.hpp"

namespace ipl::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool pass = false;
};

/// Scalar function of one differentiable input, built on the supplied graph.
using ScalarFn = std::function<Var(Graph&, Var)>;

/// Compares the reverse-mode gradient of `f` at `point` with central
/// differences (f(x+he) - f(x-he)) / 2h, coordinate by coordinate. Relative
/// error is |a - n| / max(|a|, |n|, 1e-8). Throws DomainError when `f` is not
/// finite at a probe point.
GradCheckReport finite_diff_check(const ScalarFn& f, const Tensor& point, double step, double tol);

}  // namespace ipl::ad
