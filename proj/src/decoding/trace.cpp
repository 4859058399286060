// SPDX-License-Identifier: Apache-2.0
#include "cavp/decoding/trace.hpp"

#include <fstream>

#include "json.hpp"

#include "cavp/common/errors.hpp"

namespace cavp::decoding {
namespace {

using json = nlohmann::json;

void write_lines(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename Fn>
void read_lines(const std::filesystem::path& path, Fn&& fn) {
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
    }
  }
}

}  // namespace

DecodeRecord make_decode_record(std::uint64_t image_id, const Trajectory& trajectory, const data::Vocabulary& vocab) {
  DecodeRecord r;
  r.image_id = image_id;
  r.tokens = trajectory.tokens();
  r.caption = metrics::join(vocab.decode(r.tokens));
  r.log_prob = trajectory.total_log_prob;
  return r;
}

void write_decodes(const std::filesystem::path& path, std::span<const DecodeRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j = {{"image_id", r.image_id}, {"caption", r.caption}, {"log_prob", r.log_prob}, {"tokens", r.tokens}};
    if (r.trace) j["trace"] = *r.trace;
    out += j.dump();
    out += '\n';
  }
  write_lines(path, out);
}

std::vector<DecodeRecord> read_decodes(const std::filesystem::path& path) {
  std::vector<DecodeRecord> out;
  read_lines(path, [&](const json& j) {
    DecodeRecord r;
    r.image_id = j.at("image_id").get<std::uint64_t>();
    r.caption = j.at("caption").get<std::string>();
    r.log_prob = j.at("log_prob").get<double>();
    if (j.contains("tokens")) r.tokens = j.at("tokens").get<std::vector<int>>();
    if (j.contains("trace")) r.trace = j.at("trace").get<std::string>();
    out.push_back(std::move(r));
  });
  return out;
}

int argmax_index(std::span<const double> values) {
  if (values.empty()) return -1;
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

std::vector<TraceRow> make_trace(const Trajectory& trajectory, const data::Vocabulary& vocab) {
  std::vector<TraceRow> rows;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const auto& s = trajectory.steps[t];
    TraceRow r;
    r.step = static_cast<int>(t);
    r.token = s.token;
    r.word = vocab.token(s.token);
    r.log_prob = s.log_prob;
    r.attention = s.attention;
    r.argmax_single = argmax_index(s.attention.single);
    r.argmax_context = argmax_index(s.attention.context);
    r.argmax_composition = argmax_index(s.attention.composition);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_trace(const std::filesystem::path& path, std::uint64_t image_id, std::span<const TraceRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    json j = {{"image_id", image_id},
              {"step", r.step},
              {"token", r.token},
              {"word", r.word},
              {"log_prob", r.log_prob},
              {"single", r.attention.single},
              {"context", r.attention.context},
              {"composition", r.attention.composition},
              {"output", r.attention.output},
              {"argmax_single", r.argmax_single},
              {"argmax_context", r.argmax_context},
              {"argmax_composition", r.argmax_composition}};
    out += j.dump();
    out += '\n';
  }
  write_lines(path, out);
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::vector<TraceRow> rows;
  read_lines(path, [&](const json& j) {
    TraceRow r;
    r.step = j.at("step").get<int>();
    r.token = j.at("token").get<int>();
    r.word = j.at("word").get<std::string>();
    r.log_prob = j.at("log_prob").get<double>();
    r.attention.single = j.at("single").get<std::vector<double>>();
    r.attention.context = j.at("context").get<std::vector<double>>();
    r.attention.composition = j.at("composition").get<std::vector<double>>();
    r.attention.output = j.at("output").get<std::vector<double>>();
    r.argmax_single = j.at("argmax_single").get<int>();
    r.argmax_context = j.at("argmax_context").get<int>();
    r.argmax_composition = j.at("argmax_composition").get<int>();
    rows.push_back(std::move(r));
  });
  return rows;
}

}  // namespace cavp::decoding
