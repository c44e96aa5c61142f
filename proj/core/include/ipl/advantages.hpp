#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ipl::rl {

struct AdvantageResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

/// Generalized advantage estimation over a contiguous rollout.
///   delta_t = r_t + gamma * (1 - done_t) * next_value_t - value_t
///   A_t     = delta_t + gamma * lambda * (1 - end_t) * A_{t+1}
/// `done` marks terminal transitions (no bootstrap); `episode_end` marks any
/// episode boundary, terminal or truncated, where the recursion restarts.
AdvantageResult compute_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values, std::span<const std::uint8_t> done,
                                   std::span<const std::uint8_t> episode_end, double gamma, double lambda);

}  // namespace ipl::rl
