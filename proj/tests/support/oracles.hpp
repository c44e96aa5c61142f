#pragma once

// Analytic reference distributions shared by unit and acceptance tests.

#include <cmath>
#include <numbers>

#include "ipl/adam.hpp"
#include "ipl/entropy_estimator.hpp"
#include "ipl/rng.hpp"

namespace ipl::oracle {

/// Bivariate normal N(mean, cov) restricted to an axis-aligned box.
struct TruncatedGaussian2d {
  double m0 = 0.5, m1 = -0.3;
  double c00 = 1.0, c01 = 0.5, c11 = 0.8;
  double lo = -3.0, hi = 3.0;
  double log_z = 0.0;  // log of the in-box mass

  TruncatedGaussian2d() { log_z = std::log(box_mass(800)); }

  double untruncated_logpdf(double a0, double a1) const {
    const double det = c00 * c11 - c01 * c01;
    const double d0 = a0 - m0, d1 = a1 - m1;
    const double q = (c11 * d0 * d0 - 2 * c01 * d0 * d1 + c00 * d1 * d1) / det;
    return -0.5 * q - std::log(2 * std::numbers::pi) - 0.5 * std::log(det);
  }
  double logpdf(double a0, double a1) const { return untruncated_logpdf(a0, a1) - log_z; }

  double box_mass(std::size_t n) const {
    const double h = (hi - lo) / static_cast<double>(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        z += std::exp(untruncated_logpdf(lo + (i + 0.5) * h, lo + (j + 0.5) * h)) * h * h;
      }
    }
    return z;
  }

  /// -integral p log p by midpoint quadrature.
  double entropy(std::size_t n = 800) const {
    const double h = (hi - lo) / static_cast<double>(n);
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double lp = logpdf(lo + (i + 0.5) * h, lo + (j + 0.5) * h);
        out -= std::exp(lp) * lp * h * h;
      }
    }
    return out;
  }

  /// Rejection sampling from the untruncated normal.
  Tensor sample(std::size_t rows, Rng& rng) const {
    const double l00 = std::sqrt(c00);
    const double l10 = c01 / l00;
    const double l11 = std::sqrt(c11 - l10 * l10);
    Tensor out({rows, 2});
    for (std::size_t r = 0; r < rows;) {
      const double z0 = rng.normal(), z1 = rng.normal();
      const double a0 = m0 + l00 * z0, a1 = m1 + l10 * z0 + l11 * z1;
      if (a0 < lo || a0 > hi || a1 < lo || a1 > hi) continue;
      out.at(r, 0) = a0;
      out.at(r, 1) = a1;
      ++r;
    }
    return out;
  }

  ent::ActionBox box() const { return {{lo, lo}, {hi, hi}}; }
};

struct ClassifierFit {
  double entropy_estimate = 0.0;       // mean(-c) + log|A| over fresh policy samples
  double mean_abs_logit_error = 0.0;   // vs log(pi |A|) on held-out policy samples
};

/// Trains a density classifier against the truncated Gaussian at a fixed
/// zero state, decaying the learning rate over the last quarter.
inline ClassifierFit fit_classifier(const TruncatedGaussian2d& pi, std::size_t steps, std::size_t batch,
                                    std::uint64_t seed) {
  ent::DensityClassifier clf(1, pi.box(), {64, 64}, seed);
  nn::Adam opt(nn::AdamConfig{1e-3});
  Rng rng(seed + 1);
  const Tensor states({batch, 1});
  for (std::size_t t = 0; t < steps; ++t) {
    if (t == steps * 3 / 4) opt.config().lr = 1e-4;
    ent::classifier_step(clf, opt, states, pi.sample(batch, rng), rng);
  }
  const std::size_t n = 100000;
  const Tensor held = pi.sample(n, rng);
  const Tensor logits = clf.logit_values(Tensor({n, 1}), held);
  ClassifierFit fit;
  fit.entropy_estimate = ent::entropy_from_logits(logits, pi.box().log_volume());
  const double log_vol = pi.box().log_volume();
  for (std::size_t r = 0; r < n; ++r) {
    fit.mean_abs_logit_error += std::abs(logits[r] - (pi.logpdf(held.at(r, 0), held.at(r, 1)) + log_vol));
  }
  fit.mean_abs_logit_error /= static_cast<double>(n);
  return fit;
}

}  // namespace ipl::oracle
