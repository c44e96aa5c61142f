#include "ipl/metrics.hpp"

#include <fstream>
#include <stdexcept>

namespace ipl::rl {

namespace {
nlohmann::ordered_json opt(const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); }
}  // namespace

nlohmann::ordered_json MetricRecord::to_json() const {
  nlohmann::ordered_json j = {{"step", step},
          {"episode_return_mean", opt(episode_return_mean)},
          {"critic_loss", opt(critic_loss)},
          {"classifier_loss", opt(classifier_loss)},
          {"entropy_estimate", opt(entropy_estimate)},
          {"entropy_flagged", entropy_flagged},
          {"wall_ms", opt(wall_ms)}};
  for (const auto& [key, value] : extra) j[key] = value;
  return j;
}

MetricLog::MetricLog(const std::filesystem::path& path) : mirror_(path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
}

void MetricLog::append(const MetricRecord& record) {
  records_.push_back(record);
  if (mirror_) {
    std::ofstream out(*mirror_, std::ios::app);
    out << record.to_json().dump() << '\n';
    if (!out) throw std::runtime_error("failed appending to '" + mirror_->string() + "'");
  }
}

std::string MetricLog::jsonl() const {
  std::string out;
  for (const auto& r : records_) out += r.to_json().dump() + '\n';
  return out;
}

void MetricLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << jsonl();
}

}  // namespace ipl::rl
