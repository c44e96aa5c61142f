#include "ipl/advantages.hpp"

#include <stdexcept>

namespace ipl::rl {

AdvantageResult compute_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values, std::span<const std::uint8_t> done,
                                   std::span<const std::uint8_t> episode_end, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || done.size() != n || episode_end.size() != n) {
    throw std::invalid_argument("compute_advantages: inputs must have equal length");
  }
  AdvantageResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double bootstrap = done[i] ? 0.0 : gamma * next_values[i];
    const double delta = rewards[i] + bootstrap - values[i];
    const bool boundary = episode_end[i] || done[i] || i + 1 == n;
    next_adv = delta + (boundary ? 0.0 : gamma * lambda * next_adv);
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
  }
  return out;
}

}  // namespace ipl::rl
