#include "ipl/replay_buffer.hpp"

#include <cmath>
#include <stdexcept>

namespace ipl::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.r)) throw DomainError("replay buffer: non-finite reward");
  if (!items_.empty()) {
    const Transition& ref = items_.front();
    if (t.s.size() != ref.s.size() || t.a.size() != ref.a.size() || t.s_next.size() != ref.s_next.size()) {
      throw ShapeError("replay buffer: transition shape differs from stored transitions");
    }
  }
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.index(items_.size());
  return idx;
}

Batch ReplayBuffer::sample(std::size_t batch, Rng& rng) const { return gather(sample_indices(batch, rng)); }

Batch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  if (items_.empty()) throw std::logic_error("cannot gather from an empty replay buffer");
  const std::size_t b = indices.size();
  const std::size_t n = items_.front().s.size();
  const std::size_t m = items_.front().a.size();
  Batch out{Tensor({b, n}), Tensor({b, m}), Tensor({b, 1}), Tensor({b, n}), Tensor({b, 1})};
  for (std::size_t k = 0; k < b; ++k) {
    const Transition& t = items_.at(indices[k]);
    std::copy(t.s.begin(), t.s.end(), out.s.values().begin() + static_cast<std::ptrdiff_t>(k * n));
    std::copy(t.a.begin(), t.a.end(), out.a.values().begin() + static_cast<std::ptrdiff_t>(k * m));
    std::copy(t.s_next.begin(), t.s_next.end(), out.s_next.values().begin() + static_cast<std::ptrdiff_t>(k * n));
    out.r.values()[k] = t.r;
    out.done.values()[k] = t.done ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace ipl::rl
