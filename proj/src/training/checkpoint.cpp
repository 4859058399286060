// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cavp/common/errors.hpp"

namespace cavp::training {
namespace {

using json = nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_floats(std::string& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim}, {"regions", c.regions},       {"hidden", c.hidden},
          {"embed", c.embed},             {"attention", c.attention},   {"vocab_size", c.vocab_size},
          {"max_length", c.max_length},   {"variant", std::string(variant_name(c.variant))}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<int>();
  c.regions = j.at("regions").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.embed = j.at("embed").get<int>();
  c.attention = j.at("attention").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_length = j.at("max_length").get<int>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const CaptionModel<float>& model, const data::Vocabulary& vocab,
                     const json& train_config, const TrainingState& state, const Adam* optimizer) {
  const auto& params = model.parameters();
  json names = json::array();
  for (std::size_t i = 0; i < params.size(); ++i)
    names.push_back({{"name", params[i].name()}, {"rows", params[i].shape().rows}, {"cols", params[i].shape().cols}});
  json sharing = json::object();
  for (const auto& [sp, prefix] : model.sharing()) sharing[sp] = prefix;
  const json header = {{"model", model_config_to_json(model.config())},
                       {"train", train_config},
                       {"vocab", vocab.tokens()},
                       {"vocab_min_count", vocab.min_count()},
                       {"sharing", sharing},
                       {"parameters", names},
                       {"phase", state.phase},
                       {"epoch", state.epoch},
                       {"optimizer_steps", state.optimizer_steps},
                       {"rng_state", state.rng_state},
                       {"has_moments", optimizer != nullptr}};
  const std::string text = header.dump();

  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out += text;
  for (std::size_t i = 0; i < params.size(); ++i) put_floats(out, params[i].values());
  if (optimizer != nullptr) {
    for (const auto& m : optimizer->first_moments()) put_floats(out, m);
    for (const auto& v : optimizer->second_moments()) put_floats(out, v);
  }

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  const std::string raw{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::string where = path.string() + ": ";
  if (raw.size() < 20 || std::memcmp(p, kCheckpointMagic, 8) != 0) throw DataError(where + "not a checkpoint (bad magic or truncated)");
  const auto version = static_cast<std::uint32_t>(get_le(p + 8, 4));
  if (version != kCheckpointVersion) throw DataError(where + "unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t header_len = get_le(p + 12, 8);
  if (raw.size() - 20 < header_len) throw DataError(where + "truncated header");

  Checkpoint ck;
  json header;
  try {
    header = json::parse(raw.substr(20, header_len));
    ck.config = model_config_from_json(header.at("model"));
    ck.train_config = header.at("train");
    ck.vocab = data::Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>(), header.value("vocab_min_count", 1));
    ck.state.phase = header.at("phase").get<std::string>();
    ck.state.epoch = header.at("epoch").get<int>();
    ck.state.optimizer_steps = header.at("optimizer_steps").get<std::uint64_t>();
    ck.state.rng_state = header.at("rng_state").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(where + "bad header: " + e.what());
  }
  if (ck.vocab.size() != ck.config.vocab_size) throw DataError(where + "vocabulary size does not match the model config");

  ck.model = std::make_unique<CaptionModel<float>>(ck.config, 0);
  auto& params = ck.model->parameters();
  const auto& names = header.at("parameters");
  if (names.size() != params.size()) throw DataError(where + "parameter count differs from the model layout");

  std::size_t offset = 20 + header_len;
  auto read_block = [&](std::span<float> dst, const std::string& what) {
    const std::size_t bytes = dst.size() * 4;
    if (raw.size() - offset < bytes) throw DataError(where + "truncated while reading " + what + " at byte " + std::to_string(offset));
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p + offset + 4 * i, 4)));
    offset += bytes;
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& n = names[i];
    auto& prm = params[i];
    if (n.at("name").get<std::string>() != prm.name() || n.at("rows").get<int>() != prm.shape().rows || n.at("cols").get<int>() != prm.shape().cols) {
      throw DataError(where + "parameter " + std::to_string(i) + " (" + n.at("name").get<std::string>() + ") does not match the model layout");
    }
    read_block(prm.values(), prm.name());
  }
  if (header.value("has_moments", false)) {
    std::vector<std::vector<float>> m(params.size()), v(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i].resize(params[i].values().size());
      read_block(m[i], "first moments of " + params[i].name());
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      v[i].resize(params[i].values().size());
      read_block(v[i], "second moments of " + params[i].name());
    }
    ck.first_moments = std::move(m);
    ck.second_moments = std::move(v);
  }
  if (offset != raw.size()) throw DataError(where + "trailing bytes after parameter data");
  return ck;
}

}  // namespace cavp::training
