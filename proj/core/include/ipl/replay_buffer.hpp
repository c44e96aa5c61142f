#pragma once

#include <vector>

#include "ipl/rng.hpp"

namespace ipl::rl {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

/// Column-stacked minibatch: s [B x n], a [B x m], r [B x 1], s_next [B x n],
/// done [B x 1] (1.0 for terminal).
struct Batch {
  Tensor s;
  Tensor a;
  Tensor r;
  Tensor s_next;
  Tensor done;
};

/// Fixed-capacity ring of transitions with uniform sampling (with
/// replacement).
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }

  /// Indices drawn uniformly from [0, size()).
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
  Batch sample(std::size_t batch, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& indices) const;

private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

}  // namespace ipl::rl
