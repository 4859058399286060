// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "cavp/common/errors.hpp"
#include "cavp/common/tokens.hpp"
#include "cavp/decoding/decoder.hpp"
#include "cavp/decoding/trace.hpp"
#include "../oracles/model_oracles.hpp"
#include "test_support.hpp"

using namespace cavp;
using namespace cavp::decoding;
using testing_support::miniature;
using testing_support::random_features;

namespace {

std::vector<int> non_eos_ids(int vocab) {
  std::vector<int> ids;
  for (int i = 0; i < vocab; ++i)
    if (i != tokens::kEos) ids.push_back(i);
  return ids;
}

double total(const Trajectory& t) {
  double s = 0;
  for (const auto& st : t.steps) s += st.log_prob;
  return s;
}

}  // namespace

TEST(Greedy, WidthOneBeamIsGreedy) {
  for (Variant v : testing_support::all_variants())
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CaptionModel<double> m(miniature(v, 12, 5), seed);
      testing_support::sharpen(m, 3.0);
      const auto f = random_features(4, 6, seed + 50);
      const auto g = greedy_decode(m, f), b = beam_decode(m, f, 1);
      EXPECT_EQ(g.tokens(), b.tokens());
      EXPECT_NEAR(g.total_log_prob, b.total_log_prob, 1e-12);
      EXPECT_EQ(g.finished, b.finished);
    }
}

TEST(Greedy, TiesGoToTheLowestIndexAndLengthIsCapped) {
  CaptionModel<double> m(miniature(Variant::kCavp4c, 10, 4), 1);
  for (auto* name : {"out.w", "out.b"})
    for (auto& x : m.parameters().at(name).values()) x = 0.0;
  const auto t = greedy_decode(m, random_features(4, 6, 1));
  EXPECT_EQ(t.tokens(), (std::vector<int>{0, 0, 0, 0}));
  EXPECT_FALSE(t.finished);
  EXPECT_NEAR(t.total_log_prob, -4 * std::log(10.0), 1e-12);
  DecodeOptions opts;
  opts.max_length = 2;
  EXPECT_EQ(greedy_decode(m, random_features(4, 6, 1), opts).steps.size(), 2u);
}

TEST(Greedy, StopsAtTheEndToken) {
  CaptionModel<double> m(miniature(Variant::kCavp4p), 1);
  for (auto& x : m.parameters().at("out.w").values()) x = 0.0;
  m.parameters().at("out.b").values()[tokens::kEos] = 20.0;
  const auto t = greedy_decode(m, random_features(4, 6, 1));
  EXPECT_EQ(t.tokens(), (std::vector<int>{tokens::kEos}));
  EXPECT_TRUE(t.finished);
  EXPECT_TRUE(t.words().empty());
}

TEST(Beam, WideBeamFindsTheExhaustiveOptimum) {
  for (Variant v : testing_support::all_variants())
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CaptionModel<double> m(miniature(v, 5, 3), seed);
      testing_support::sharpen(m, 2.0);
      const auto f = random_features(4, 6, seed + 7);
      const auto best = oracle::exhaustive_search(tokens::kEos, 3, non_eos_ids(5), [&](const std::vector<int>& seq) {
        return replay_log_probs(m, f, seq);
      });
      const auto beam = beam_decode(m, f, 64);
      EXPECT_EQ(beam.tokens(), best.tokens);
      EXPECT_NEAR(beam.total_log_prob, best.log_prob, 1e-12);
    }
}

TEST(Beam, NeverWorseThanGreedy) {
  int strictly_better = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CaptionModel<double> m(miniature(Variant::kCavp4c, 12, 4), seed);
    testing_support::sharpen(m, 2.5);
    const auto f = random_features(4, 6, seed);
    const auto g = greedy_decode(m, f), b = beam_decode(m, f, 3);
    EXPECT_GE(b.total_log_prob, g.total_log_prob - 1e-12);
    strictly_better += b.total_log_prob > g.total_log_prob + 1e-9;
  }
  EXPECT_GT(strictly_better, 0);
}

TEST(Beam, ScoreIsNonDecreasingInWidth) {
  for (Variant v : testing_support::all_variants())
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      CaptionModel<double> m(miniature(v), seed);
      const auto f = random_features(4, 6, seed + 1000);
      double prev = -1e300;
      for (int w : {1, 2, 3, 5}) {
        const double s = beam_decode(m, f, w).total_log_prob;
        EXPECT_GE(s, prev - 1e-12) << variant_name(v) << " seed " << seed << " width " << w;
        prev = s;
      }
    }
}

// Not a theorem: on a peaked model two children of the runner-up can push
// the greedy path out of a width-2 beam.
TEST(Beam, WiderBeamCanLoseOnPeakedModels) {
  CaptionModel<double> m(miniature(Variant::kSingle, 12, 4), 113);
  testing_support::sharpen(m, 2.5);
  const auto f = random_features(4, 6, 13);
  const auto g = beam_decode(m, f, 1), b = beam_decode(m, f, 2);
  EXPECT_LT(b.total_log_prob, g.total_log_prob);
  EXPECT_NEAR(g.total_log_prob, -6.82736, 1e-5);
}

TEST(Beam, TotalIsTheSumOfStepLogProbsAndReplays) {
  CaptionModel<double> m(miniature(Variant::kCavp3p, 12, 5), 3);
  const auto f = random_features(4, 6, 4);
  const auto b = beam_decode(m, f, 4);
  EXPECT_NEAR(b.total_log_prob, total(b), 1e-12);
  const auto replay = replay_log_probs(m, f, b.tokens());
  for (std::size_t i = 0; i < replay.size(); ++i) EXPECT_NEAR(replay[i], b.steps[i].log_prob, 1e-12);
}

TEST(Beam, RejectsWidthZero) {
  CaptionModel<double> m(miniature(Variant::kCavp4c), 3);
  EXPECT_THROW(beam_decode(m, random_features(4, 6, 1), 0), ContractError);
}

TEST(Sampling, FirstTokenFrequenciesMatchThePolicy) {
  CaptionModel<double> m(miniature(Variant::kCavp4c, 8, 1), 11);
  const auto f = random_features(4, 6, 12);
  std::vector<double> p(8);
  for (int tok = 0; tok < 8; ++tok) p[static_cast<std::size_t>(tok)] = std::exp(replay_log_probs(m, f, std::vector<int>{tok})[0]);
  constexpr int n = 20000;
  std::vector<int> counts(8, 0);
  Rng rng(5);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_decode(m, f, rng).steps[0].token)];
  for (std::size_t k = 0; k < 8; ++k) {
    const double sigma = std::sqrt(n * p[k] * (1 - p[k]));
    EXPECT_NEAR(counts[k], n * p[k], 3 * sigma + 1) << k;
  }
}

TEST(Sampling, SameSeedSameSamples) {
  CaptionModel<double> m(miniature(Variant::kCavp4p, 12, 6), 2);
  const auto f = random_features(4, 6, 3);
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_decode(m, f, a).tokens(), sample_decode(m, f, b).tokens());
}

TEST(Sampling, TapedSampleMatchesReplay) {
  CaptionModel<double> m(miniature(Variant::kCavp4c, 12, 6), 2);
  const auto f = random_features(4, 6, 3);
  Rng rng(1);
  ad::Tape<double> t;
  const auto s = sample_decode_on_tape(t, m, f, rng);
  ASSERT_EQ(s.log_probs.size(), s.trajectory.steps.size());
  const auto replay = replay_log_probs(m, f, s.trajectory.tokens());
  for (std::size_t i = 0; i < replay.size(); ++i) EXPECT_NEAR(s.log_probs[i].item(), replay[i], 1e-12);
}

TEST(Trace, RowsFollowTheDecodedSteps) {
  testing_support::TempDir dir("trace");
  const auto vocab = data::Vocabulary::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "a", "b", "c", "d", "e", "f", "g", "h"});
  for (Variant v : testing_support::all_variants()) {
    CaptionModel<double> m(miniature(v, 12, 5), 9);
    const auto t = greedy_decode(m, random_features(4, 6, 9));
    const auto rows = make_trace(t, vocab);
    ASSERT_EQ(rows.size(), t.steps.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(rows[i].token, t.steps[i].token);
      EXPECT_EQ(rows[i].word, vocab.token(t.steps[i].token));
      EXPECT_EQ(rows[i].argmax_single, argmax_index(t.steps[i].attention.single));
      EXPECT_EQ(rows[i].argmax_context, v == Variant::kCavp4c ? argmax_index(t.steps[i].attention.context) : -1);
    }
    write_trace(dir / "t.jsonl", 7, rows);
    const auto back = read_trace(dir / "t.jsonl");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(back[i].attention.single, rows[i].attention.single);
      EXPECT_EQ(back[i].attention.output, rows[i].attention.output);
      EXPECT_EQ(back[i].log_prob, rows[i].log_prob);
    }
  }
  EXPECT_EQ(argmax_index(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax_index(std::vector<double>{}), -1);
}

TEST(Trace, DecodeRecordsRoundTrip) {
  testing_support::TempDir dir("decodes");
  const auto vocab = data::Vocabulary::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "a", "dog"});
  Trajectory t;
  t.steps = {{4, -0.5, {}}, {5, -0.25, {}}, {tokens::kEos, -0.125, {}}};
  t.total_log_prob = -0.875;
  t.finished = true;
  const auto rec = make_decode_record(3, t, vocab);
  EXPECT_EQ(rec.caption, "a dog");
  write_decodes(dir / "d.jsonl", std::vector<DecodeRecord>{rec});
  const auto back = read_decodes(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].image_id, 3u);
  EXPECT_EQ(back[0].tokens, t.tokens());
  EXPECT_EQ(back[0].log_prob, -0.875);
}
