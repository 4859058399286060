// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavp/data/vocabulary.hpp"
#include "cavp/model/trajectory.hpp"

namespace cavp::decoding {

/// One line of a decode file:
/// {"image_id": N, "caption": "...", "log_prob": x, "tokens": [...], "trace": "file"?}
struct DecodeRecord {
  std::uint64_t image_id = 0;
  std::string caption;
  double log_prob = 0.0;
  std::vector<int> tokens;
  std::optional<std::string> trace;
};

DecodeRecord make_decode_record(std::uint64_t image_id, const Trajectory& trajectory, const data::Vocabulary& vocab);

void write_decodes(const std::filesystem::path& path, std::span<const DecodeRecord> records);
std::vector<DecodeRecord> read_decodes(const std::filesystem::path& path);

/// Per-step attention row for external plotting.
struct TraceRow {
  int step = 0;
  int token = 0;
  std::string word;
  double log_prob = 0.0;
  AttentionRecord attention;
  int argmax_single = -1;
  int argmax_context = -1;
  int argmax_composition = -1;
};

/// Index of the largest entry (lowest index on ties), -1 when empty.
int argmax_index(std::span<const double> values);

std::vector<TraceRow> make_trace(const Trajectory& trajectory, const data::Vocabulary& vocab);

/// One JSON object per step.
void write_trace(const std::filesystem::path& path, std::uint64_t image_id, std::span<const TraceRow> rows);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

}  // namespace cavp::decoding
