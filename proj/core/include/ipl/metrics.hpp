#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ipl::rl {

/// One metrics.jsonl line. Absent values serialize as null.
struct MetricRecord {
  std::size_t step = 0;
  std::optional<double> episode_return_mean;
  std::optional<double> critic_loss;
  std::optional<double> classifier_loss;
  std::optional<double> entropy_estimate;
  std::optional<double> wall_ms;
  bool entropy_flagged = false;
  /// Extra named values appended after the fixed keys.
  std::vector<std::pair<std::string, double>> extra;

  nlohmann::ordered_json to_json() const;
};

/// Append-only metric sink; optionally mirrors every record to a file.
class MetricLog {
public:
  MetricLog() = default;
  explicit MetricLog(const std::filesystem::path& path);

  void append(const MetricRecord& record);
  const std::vector<MetricRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  std::string jsonl() const;
  void write_jsonl(const std::filesystem::path& path) const;

private:
  std::vector<MetricRecord> records_;
  std::optional<std::filesystem::path> mirror_;
};

/// Milliseconds since construction.
class WallClock {
public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

/// Running mean over episodes completed since the last drain.
class EpisodeTracker {
public:
  void add_reward(double r) { current_ += r; }
  void end_episode() {
    sum_ += current_;
    ++count_;
    current_ = 0.0;
  }
  std::optional<double> drain() {
    if (count_ == 0) return std::nullopt;
    const double mean = sum_ / static_cast<double>(count_);
    sum_ = 0.0;
    count_ = 0;
    return mean;
  }

private:
  double current_ = 0.0;
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace ipl::rl
