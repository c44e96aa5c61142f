#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ipl/params.hpp"

namespace ipl::nn {

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Format tag written into every checkpoint document.
inline constexpr const char* kCheckpointFormat = "ipl-checkpoint-v1";

// Layout (JSON object):
//   format     "ipl-checkpoint-v1"
//   spec       model description string
//   spec_hash  16 hex digits, digest(spec)
//   params     { name: { shape: [..], data: base64 of little-endian doubles } }
nlohmann::json checkpoint_to_json(const ParamSet& params);

/// Rejects unknown formats, malformed payloads and a spec_hash that does not
/// match the stored spec (or `expected_hash` when one is given).
ParamSet checkpoint_from_json(const nlohmann::json& doc, const std::optional<std::string>& expected_hash = {});

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_hash = {});

/// Base64 of the little-endian IEEE-754 bytes of `values`.
std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& text);

}  // namespace ipl::nn
