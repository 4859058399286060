// SPDX-License-Identifier: Apache-2.0
#include "cavp/data/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"

#include "cavp/common/errors.hpp"

namespace cavp::data {
namespace {

using json = nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

void write_features(const std::filesystem::path& path, std::span<const FeatureRecord> records, int regions, int dim) {
  if (!records.empty()) {
    regions = records.front().features.regions();
    dim = records.front().features.dim();
  }
  if (regions < 0 || dim < 0) throw ContractError("write_features: negative shape");
  const std::size_t per_record = static_cast<std::size_t>(regions) * static_cast<std::size_t>(dim);
  std::string out;
  out.reserve(kFeatureHeaderBytes + records.size() * (8 + 4 * per_record));
  out.append(kFeatureMagic, sizeof(kFeatureMagic));
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(regions));
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u64(out, records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.features.regions() != regions || rec.features.dim() != dim) {
      throw ContractError("write_features: record " + std::to_string(r) + " has shape " + std::to_string(rec.features.regions()) + "x" +
                          std::to_string(rec.features.dim()));
    }
    put_u64(out, rec.image_id);
    for (float f : rec.features.values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  write_text(path, out);
}

FeatureFile read_features(const std::filesystem::path& path) {
  const std::string raw = slurp(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::string where = path.string() + ": ";
  if (raw.size() < kFeatureHeaderBytes) {
    throw DataError(where + "truncated header (" + std::to_string(raw.size()) + " of " + std::to_string(kFeatureHeaderBytes) + " bytes)");
  }
  if (std::memcmp(p, kFeatureMagic, sizeof(kFeatureMagic)) != 0) throw DataError(where + "bad magic at offset 0");
  const std::uint32_t version = get_u32(p + 8);
  if (version != kFeatureVersion) throw DataError(where + "unsupported version " + std::to_string(version) + " at offset 8");
  FeatureFile file;
  const std::uint32_t k = get_u32(p + 12);
  const std::uint32_t d = get_u32(p + 16);
  const std::uint64_t count = get_u64(p + 20);
  if (count > 0 && (k == 0 || d == 0)) throw DataError(where + "zero region count or dimension in header");
  file.regions = static_cast<int>(k);
  file.dim = static_cast<int>(d);

  const std::size_t per_record = static_cast<std::size_t>(k) * d;
  const std::size_t record_bytes = 8 + 4 * per_record;
  std::size_t offset = kFeatureHeaderBytes;
  file.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, raw.size() / record_bytes + 1)));
  for (std::uint64_t r = 0; r < count; ++r) {
    if (raw.size() - offset < record_bytes) {
      throw DataError(where + "truncated at record " + std::to_string(r) + " (byte offset " + std::to_string(offset) + ", need " +
                      std::to_string(record_bytes) + " bytes, have " + std::to_string(raw.size() - offset) + ")");
    }
    FeatureRecord rec;
    rec.image_id = get_u64(p + offset);
    std::vector<float> values(per_record);
    const unsigned char* q = p + offset + 8;
    for (std::size_t i = 0; i < per_record; ++i) {
      const float f = std::bit_cast<float>(get_u32(q + 4 * i));
      if (!std::isfinite(f)) {
        throw DataError(where + "non-finite value in record " + std::to_string(r) + " (image " + std::to_string(rec.image_id) + ", region " +
                        std::to_string(i / d) + ", dim " + std::to_string(i % d) + ", byte offset " + std::to_string(offset + 8 + 4 * i) + ")");
      }
      values[i] = f;
    }
    rec.features = RegionFeatureSet(static_cast<int>(k), static_cast<int>(d), std::move(values));
    file.records.push_back(std::move(rec));
    offset += record_bytes;
  }
  if (offset != raw.size()) {
    throw DataError(where + std::to_string(raw.size() - offset) + " trailing bytes after " + std::to_string(count) + " records");
  }
  return file;
}

void write_captions(const std::filesystem::path& path, std::span<const CaptionRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    json caps = json::array();
    for (const auto& ref : rec.references) caps.push_back(metrics::join(ref));
    out += json{{"image_id", rec.image_id}, {"captions", caps}}.dump();
    out += '\n';
  }
  write_text(path, out);
}

std::vector<CaptionRecord> read_captions(const std::filesystem::path& path) {
  std::vector<CaptionRecord> records;
  for_each_json_line(path, [&](const json& j) {
    CaptionRecord rec;
    rec.image_id = j.at("image_id").get<std::uint64_t>();
    for (const auto& c : j.at("captions")) {
      TokenSequence tokens = preprocess_caption(c.get<std::string>());
      if (!tokens.empty()) rec.references.push_back(std::move(tokens));
    }
    if (rec.references.empty()) throw DataError("image " + std::to_string(rec.image_id) + " has no non-empty reference");
    records.push_back(std::move(rec));
  });
  return records;
}

void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon) {
  std::string out;
  for (const auto& [token, cat] : lexicon.entries()) {
    out += json{{"token", token}, {"category", std::string(category_name(cat))}}.dump();
    out += '\n';
  }
  write_text(path, out);
}

Lexicon read_lexicon(const std::filesystem::path& path) {
  Lexicon lex;
  for_each_json_line(path, [&](const json& j) { lex.add(j.at("token").get<std::string>(), parse_category(j.at("category").get<std::string>())); });
  return lex;
}

void write_scenes(const std::filesystem::path& path, std::span<const SceneDescription> scenes) {
  std::string out;
  for (const auto& s : scenes) {
    json objects = json::array();
    for (const auto& o : s.objects)
      objects.push_back({{"noun", o.noun}, {"color", o.color}, {"size", o.size}, {"x", o.x}, {"y", o.y}, {"region", o.region}});
    json relations = json::array();
    for (const auto& r : s.relations) relations.push_back({{"subject", r.subject}, {"object", r.object}, {"relation", r.relation}});
    out += json{{"image_id", s.image_id}, {"objects", objects}, {"relations", relations}}.dump();
    out += '\n';
  }
  write_text(path, out);
}

std::vector<SceneDescription> read_scenes(const std::filesystem::path& path) {
  std::vector<SceneDescription> scenes;
  for_each_json_line(path, [&](const json& j) {
    SceneDescription s;
    s.image_id = j.at("image_id").get<std::uint64_t>();
    for (const auto& o : j.at("objects")) {
      s.objects.push_back({o.at("noun").get<std::string>(), o.at("color").get<std::string>(), o.at("size").get<std::string>(),
                           o.at("x").get<double>(), o.at("y").get<double>(), o.at("region").get<int>()});
    }
    for (const auto& r : j.at("relations")) {
      SceneRelation rel{r.at("subject").get<int>(), r.at("object").get<int>(), r.at("relation").get<std::string>()};
      const int n = static_cast<int>(s.objects.size());
      if (rel.subject < 0 || rel.subject >= n || rel.object < 0 || rel.object >= n) throw DataError("relation refers to a missing object");
      s.relations.push_back(std::move(rel));
    }
    scenes.push_back(std::move(s));
  });
  return scenes;
}

}  // namespace cavp::data
