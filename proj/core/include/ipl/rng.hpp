#pragma once

#include <cstdint>
#include <random>

#include "ipl/tensor.hpp"

namespace ipl {

/// Seeded random stream. Every stochastic component takes one explicitly so
/// runs replay bit-for-bit from their seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  Tensor normal_tensor(Shape shape);
  Tensor uniform_tensor(Shape shape, double lo, double hi);

  /// Independent child stream, deterministic in this stream's state.
  Rng split() { return Rng(engine_()); }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace ipl
