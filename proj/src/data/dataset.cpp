// SPDX-License-Identifier: Apache-2.0
#include "cavp/data/dataset.hpp"

#include <fstream>
#include <map>

#include "json.hpp"

#include "cavp/common/errors.hpp"
#include "cavp/common/random.hpp"
#include "cavp/data/io.hpp"

namespace cavp::data {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ContractError("unknown split '" + std::string(name) + "' (choices: train, val, test)");
}

Split split_of(std::uint64_t image_id, std::uint64_t seed) {
  const std::uint64_t bucket = mix_seed(seed ^ 0x5350'4c49'5400ULL, image_id) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kVal : Split::kTest;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (split_of(features[i].image_id, info.seed) == split) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  if (features.size() != captions.size()) {
    throw DataError("dataset: " + std::to_string(features.size()) + " feature records but " + std::to_string(captions.size()) + " caption records");
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto id = features[i].image_id;
    if (captions[i].image_id != id) throw DataError("dataset: record " + std::to_string(i) + " has feature id " + std::to_string(id) +
                                                    " but caption id " + std::to_string(captions[i].image_id));
    if (i > 0 && features[i - 1].image_id >= id) throw DataError("dataset: image ids not strictly increasing at record " + std::to_string(i));
    if (features[i].features.regions() != info.regions || features[i].features.dim() != info.feature_dim) {
      throw DataError("dataset: record " + std::to_string(i) + " shape differs from the dataset shape");
    }
    if (captions[i].references.empty()) throw DataError("dataset: image " + std::to_string(id) + " has no reference");
  }
  if (!scenes.empty() && scenes.size() != features.size()) throw DataError("dataset: scene count does not match record count");
}

std::vector<TokenSequence> Dataset::all_references(std::span<const std::size_t> positions) const {
  std::vector<TokenSequence> out;
  for (auto i : positions)
    for (const auto& r : captions.at(i).references) out.push_back(r);
  return out;
}

std::vector<std::filesystem::path> save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto features = dir / kFeaturesFile;
  write_features(features, dataset.features, dataset.info.regions, dataset.info.feature_dim);
  written.push_back(features);
  const auto captions = dir / kCaptionsFile;
  write_captions(captions, dataset.captions);
  written.push_back(captions);
  const auto lexicon = dir / kLexiconFile;
  write_lexicon(lexicon, dataset.lexicon);
  written.push_back(lexicon);
  if (!dataset.scenes.empty()) {
    const auto scenes = dir / kScenesFile;
    write_scenes(scenes, dataset.scenes);
    written.push_back(scenes);
  }
  const nlohmann::json info = {{"format", 1},
                               {"seed", dataset.info.seed},
                               {"deterministic", dataset.info.deterministic},
                               {"regions", dataset.info.regions},
                               {"feature_dim", dataset.info.feature_dim},
                               {"images", dataset.size()}};
  const auto info_path = dir / kDatasetInfoFile;
  std::ofstream(info_path, std::ios::binary | std::ios::trunc) << info.dump(2) << '\n';
  written.push_back(info_path);
  return written;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const auto info_path = dir / kDatasetInfoFile;
  if (std::filesystem::exists(info_path)) {
    std::ifstream in(info_path);
    try {
      const auto j = nlohmann::json::parse(in);
      ds.info.seed = j.value("seed", std::uint64_t{0});
      ds.info.deterministic = j.value("deterministic", false);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(info_path.string() + ": " + e.what());
    }
  }
  FeatureFile ff = read_features(dir / kFeaturesFile);
  ds.info.regions = ff.regions;
  ds.info.feature_dim = ff.dim;
  std::vector<CaptionRecord> caps = read_captions(dir / kCaptionsFile);
  if (std::filesystem::exists(dir / kLexiconFile)) ds.lexicon = read_lexicon(dir / kLexiconFile);
  std::vector<SceneDescription> scenes;
  if (std::filesystem::exists(dir / kScenesFile)) scenes = read_scenes(dir / kScenesFile);

  std::map<std::uint64_t, CaptionRecord> by_id;
  for (auto& c : caps) {
    const auto id = c.image_id;
    if (!by_id.emplace(id, std::move(c)).second) throw DataError("captions: duplicate image id " + std::to_string(id));
  }
  std::map<std::uint64_t, FeatureRecord> feats;
  for (auto& f : ff.records) {
    const auto id = f.image_id;
    if (!feats.emplace(id, std::move(f)).second) throw DataError("features: duplicate image id " + std::to_string(id));
  }
  std::map<std::uint64_t, SceneDescription> scene_by_id;
  for (auto& s : scenes) scene_by_id.emplace(s.image_id, std::move(s));

  for (auto& [id, f] : feats) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("image " + std::to_string(id) + " has features but no captions");
    ds.features.push_back(std::move(f));
    ds.captions.push_back(std::move(it->second));
    by_id.erase(it);
    if (!scene_by_id.empty()) {
      auto s = scene_by_id.find(id);
      if (s == scene_by_id.end()) throw DataError("image " + std::to_string(id) + " has no scene description");
      ds.scenes.push_back(std::move(s->second));
    }
  }
  if (!by_id.empty()) throw DataError("image " + std::to_string(by_id.begin()->first) + " has captions but no features");
  ds.validate();
  return ds;
}

}  // namespace cavp::data
