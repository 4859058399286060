// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cavp/data/records.hpp"

namespace cavp::data {

/// Feature file layout (all integers and floats little-endian):
///
///   offset  size  field
///   0       8     magic "CAVPFEAT"
///   8       4     u32 version (1)
///   12      4     u32 k (regions per image)
///   16      4     u32 D (feature dimension)
///   20      8     u64 record count
///   28      ...   records: u64 image id, then k*D f32 values row-major
inline constexpr char kFeatureMagic[8] = {'C', 'A', 'V', 'P', 'F', 'E', 'A', 'T'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 28;

struct FeatureFile {
  int regions = 0;
  int dim = 0;
  std::vector<FeatureRecord> records;
};

/// `regions`/`dim` are taken from the records; for an empty set the
/// explicit values are written to the header.
void write_features(const std::filesystem::path& path, std::span<const FeatureRecord> records, int regions, int dim);
/// Throws DataError naming the record index and byte offset on truncation,
/// bad header, shape mismatch or non-finite values.
FeatureFile read_features(const std::filesystem::path& path);

/// One JSON object per line: {"image_id": N, "captions": ["...", ...]}.
void write_captions(const std::filesystem::path& path, std::span<const CaptionRecord> records);
std::vector<CaptionRecord> read_captions(const std::filesystem::path& path);

/// One JSON object per line: {"token": "...", "category": "object"}.
void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon);
Lexicon read_lexicon(const std::filesystem::path& path);

void write_scenes(const std::filesystem::path& path, std::span<const SceneDescription> scenes);
std::vector<SceneDescription> read_scenes(const std::filesystem::path& path);

}  // namespace cavp::data
