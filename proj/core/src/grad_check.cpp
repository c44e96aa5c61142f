#include "ipl/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ipl::ad {

namespace {
double evaluate(const ScalarFn& f, const Tensor& x) {
  Graph g;
  const Var out = f(g, g.constant(x));
  const double v = out.value().item();
  if (!std::isfinite(v)) throw DomainError("finite_diff_check: function is not finite at a probe point");
  return v;
}
}  // namespace

GradCheckReport finite_diff_check(const ScalarFn& f, const Tensor& point, double step, double tol) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");

  Tensor analytic;
  {
    Graph g;
    const Var x = g.leaf(point);
    const Var y = f(g, x);
    analytic = g.backward(y)[x];
  }

  GradCheckReport report;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = evaluate(f, probe);
    probe[i] = orig - step;
    const double down = evaluate(f, probe);
    probe[i] = orig;

    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (i == 0 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace ipl::ad
