#include "ipl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <boost/beast/core/detail/base64.hpp>

namespace ipl::nn {

namespace b64 = boost::beast::detail::base64;

std::string encode_doubles(const std::vector<double>& values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int k = 0; k < 8; ++k) bytes[i * 8 + k] = static_cast<char>((bits >> (8 * k)) & 0xffU);
  }
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  std::string bytes(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(bytes.data(), text.data(), text.size());
  // The decoder stops at padding, so compare against the unpadded length.
  const std::size_t payload = text.find_last_not_of('=') + 1;
  if (read != payload || written % 8 != 0) throw CheckpointError("malformed base64 tensor payload");
  std::vector<double> out(written / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + k])) << (8 * k);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json checkpoint_to_json(const ParamSet& params) {
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, t] : params) {
    tensors[name] = {{"shape", t.shape()}, {"data", encode_doubles(t.values())}};
  }
  return {{"format", kCheckpointFormat}, {"spec", params.spec()}, {"spec_hash", params.spec_hash()}, {"params", tensors}};
}

ParamSet checkpoint_from_json(const nlohmann::json& doc, const std::optional<std::string>& expected_hash) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw CheckpointError("unsupported checkpoint format '" + doc.at("format").get<std::string>() + "'");
    }
    ParamSet out(doc.at("spec").get<std::string>());
    const auto stored = doc.at("spec_hash").get<std::string>();
    if (stored != out.spec_hash()) {
      throw CheckpointError("spec hash mismatch: stored " + stored + ", computed " + out.spec_hash());
    }
    if (expected_hash && *expected_hash != stored) {
      throw CheckpointError("spec hash mismatch: expected " + *expected_hash + ", found " + stored);
    }
    for (const auto& [name, entry] : doc.at("params").items()) {
      auto shape = entry.at("shape").get<Shape>();
      auto data = decode_doubles(entry.at("data").get<std::string>());
      if (data.size() != shape_size(shape)) throw CheckpointError("tensor '" + name + "' payload does not match its shape");
      out.add(name, Tensor(std::move(shape), std::move(data)));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out << checkpoint_to_json(params).dump() << '\n';
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

ParamSet load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "' for reading");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + path.string() + "' is not a checkpoint document: " + e.what());
  }
  return checkpoint_from_json(doc, expected_hash);
}

}  // namespace ipl::nn
