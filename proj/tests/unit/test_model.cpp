// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cavp/autodiff/ops.hpp"
#include "cavp/common/tokens.hpp"
#include "cavp/decoding/decoder.hpp"
#include "cavp/model/model.hpp"
#include "../oracles/model_oracles.hpp"
#include "test_support.hpp"

using namespace cavp;
using testing_support::miniature;
using testing_support::random_features;

namespace {

std::vector<double> values_of(ad::Var<double> v) { return v.to_vector(); }

std::vector<double> param_values(const CaptionModel<double>& m, const std::string& name) {
  auto s = m.parameters().at(name).values();
  return {s.begin(), s.end()};
}

std::vector<double> row(const RegionFeatureSet& f, int i) {
  auto r = f.region(i);
  return {r.begin(), r.end()};
}

std::set<std::string> lstm_sets(const CaptionModel<double>& m) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const auto& n = m.parameters()[i].name();
    if (n.rfind("lstm.", 0) == 0) out.insert(n.substr(0, n.rfind('.')));
  }
  return out;
}

void expect_hull(std::span<const double> point, const std::vector<std::vector<double>>& queries, double tol = 1e-6) {
  for (std::size_t d = 0; d < point.size(); ++d) {
    double lo = queries[0][d], hi = queries[0][d];
    for (const auto& q : queries) {
      lo = std::min(lo, q[d]);
      hi = std::max(hi, q[d]);
    }
    EXPECT_GE(point[d], lo - tol);
    EXPECT_LE(point[d], hi + tol);
  }
}

void expect_simplex(const std::vector<double>& p, double tol = 1e-6) {
  ASSERT_FALSE(p.empty());
  double s = 0;
  for (double x : p) {
    EXPECT_GE(x, 0.0);
    s += x;
  }
  EXPECT_NEAR(s, 1.0, tol);
}

}  // namespace

TEST(Sharing, DistinctLstmSetsPerVariant) {
  EXPECT_EQ(lstm_sets(CaptionModel<double>(miniature(Variant::kCavp4c), 1)).size(), 1u);
  EXPECT_EQ(lstm_sets(CaptionModel<double>(miniature(Variant::kCavp4p), 1)).size(), 1u);
  EXPECT_EQ(lstm_sets(CaptionModel<double>(miniature(Variant::kSingle), 1)).size(), 1u);
  CaptionModel<double> m3(miniature(Variant::kCavp3p), 1);
  EXPECT_EQ(lstm_sets(m3), (std::set<std::string>{"lstm.output", "lstm.shared"}));
  int shared = 0;
  for (const auto& [sp, prefix] : m3.sharing()) shared += prefix == "lstm.shared";
  EXPECT_EQ(shared, 3);
  EXPECT_EQ(m3.sharing().at("output"), "lstm.output");
  EXPECT_EQ(CaptionModel<double>(miniature(Variant::kCavp4c), 1).lstm_parameter_sets(), 1);
  EXPECT_EQ(m3.lstm_parameter_sets(), 2);
}

TEST(Sharing, AttentionWeightsAreNeverShared) {
  CaptionModel<double> m(miniature(Variant::kCavp4c), 1);
  std::set<const ad::Parameter<double>*> seen;
  for (SubPolicy sp : {SubPolicy::kSingle, SubPolicy::kContext, SubPolicy::kComposition, SubPolicy::kOutput}) {
    const auto w = m.sub_policy_weights(sp);
    EXPECT_TRUE(seen.insert(w.attention.hidden).second);
    EXPECT_TRUE(seen.insert(w.attention.query).second);
    EXPECT_TRUE(seen.insert(w.attention.score).second);
  }
  EXPECT_THROW(CaptionModel<double>(miniature(Variant::kCavp4p), 1).sub_policy_weights(SubPolicy::kContext), ContractError);
}

TEST(Variant, ParsingListsChoices) {
  for (auto name : kVariantNames) EXPECT_EQ(variant_name(parse_variant(name)), name);
  try {
    parse_variant("cavp5");
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("cavp4c"), std::string::npos);
  }
}

TEST(RegionFeatures, MeanPoolAndValidation) {
  const auto f = random_features(5, 3, 9);
  EXPECT_TRUE(f.mean_consistent());
  for (int d = 0; d < 3; ++d) {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += f.region(i)[static_cast<std::size_t>(d)];
    EXPECT_NEAR(f.mean()[static_cast<std::size_t>(d)], s / 5, 1e-6);
  }
  EXPECT_THROW(RegionFeatureSet(0, 3, {}), DataError);
  EXPECT_THROW(RegionFeatureSet(2, 2, {1, 2, 3}), DataError);
  EXPECT_THROW(RegionFeatureSet(1, 2, {1, std::nanf("")}), DataError);
}

class AttendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    w_hid = &store.add("h", {H, A});
    w_q = &store.add("q", {D, A});
    w_s = &store.add("s", {A, 1});
    Rng rng(4);
    for (auto* p : {w_hid, w_q, w_s})
      for (auto& x : p->values()) x = 2.0 * uniform01(rng) - 1.0;
    weights = {w_hid, w_q, w_s};
  }
  static constexpr int H = 3, D = 4, A = 5;
  ad::ParameterStore<double> store;
  ad::Parameter<double>*w_hid, *w_q, *w_s;
  AttentionWeights<double> weights;
};

TEST_F(AttendTest, SingleQueryGetsAllWeight) {
  ad::Tape<double> t;
  const std::vector<double> h = {0.1, -0.2, 0.3}, q = {1, 2, 3, 4};
  auto r = attend<double>(t.input({1, H}, h), t.input({1, D}, q), weights);
  EXPECT_EQ(r.weights.item(), 1.0);
  EXPECT_EQ(values_of(r.fused), q);
}

TEST_F(AttendTest, ZeroProjectionsGiveUniformWeights) {
  for (auto* p : {w_hid, w_q})
    for (auto& x : p->values()) x = 0.0;
  ad::Tape<double> t;
  const std::vector<double> h = {0.1, -0.2, 0.3}, q = {1, 2, 3, 4, 5, 6, 7, 8, 0, 0, 0, 0};
  auto r = attend<double>(t.input({1, H}, h), t.input({3, D}, q), weights);
  for (double w : values_of(r.weights)) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
  const auto f = values_of(r.fused);
  for (int d = 0; d < D; ++d) EXPECT_NEAR(f[static_cast<std::size_t>(d)], (q[d] + q[D + d] + q[2 * D + d]) / 3.0, 1e-14);
}

TEST_F(AttendTest, ThreeQueriesMatchHandOracle) {
  Rng rng(8);
  std::vector<double> h(H);
  std::vector<std::vector<double>> qs(3, std::vector<double>(D));
  for (auto& x : h) x = uniform01(rng) - 0.5;
  std::vector<double> flat;
  for (auto& q : qs)
    for (auto& x : q) flat.push_back(x = 2.0 * uniform01(rng) - 1.0);
  ad::Tape<double> t;
  auto r = attend<double>(t.input({1, H}, h), t.input({3, D}, flat), weights);
  auto vals = [](ad::Parameter<double>* p) { return std::vector<double>(p->values().begin(), p->values().end()); };
  const auto expect = oracle::additive_attention(h, qs, vals(w_hid), vals(w_q), vals(w_s), H, D, A);
  const auto w = values_of(r.weights), f = values_of(r.fused);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w[static_cast<std::size_t>(i)], expect.weights[static_cast<std::size_t>(i)], 1e-14);
  for (int d = 0; d < D; ++d) EXPECT_NEAR(f[static_cast<std::size_t>(d)], expect.fused[static_cast<std::size_t>(d)], 1e-14);
}

TEST_F(AttendTest, PermutingQueriesPermutesWeights) {
  Rng rng(12);
  std::vector<std::vector<double>> qs(4, std::vector<double>(D));
  for (auto& q : qs)
    for (auto& x : q) x = 2.0 * uniform01(rng) - 1.0;
  const std::vector<double> h = {0.3, 0.1, -0.4};
  auto weights_for = [&](const std::vector<int>& order) {
    std::vector<double> flat;
    for (int i : order) flat.insert(flat.end(), qs[static_cast<std::size_t>(i)].begin(), qs[static_cast<std::size_t>(i)].end());
    ad::Tape<double> t;
    auto w = values_of(attend<double>(t.input({1, H}, h), t.input({4, D}, flat), weights).weights);
    std::vector<double> by_query(4);
    for (std::size_t j = 0; j < 4; ++j) by_query[static_cast<std::size_t>(order[j])] = w[j];
    return by_query;
  };
  const auto a = weights_for({0, 1, 2, 3});
  const auto b = weights_for({2, 0, 3, 1});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST_F(AttendTest, EmptyQuerySetIsAContractError) {
  ad::ParameterStore<double> s2;
  SubPolicyWeights<double> sw{ad::add_lstm(s2, "l", 2, H), weights};
  ad::Tape<double> t;
  const std::vector<double> x = {1, 2};
  std::vector<ad::Var<double>> none;
  EXPECT_THROW(sub_policy_attend<double>(t.input({1, 2}, x), ad::lstm_zero_state(t, H), std::span<const ad::Var<double>>(none), sw),
               ContractError);
}

TEST(FuseContext, SelectorMatricesAndNaiveOracle) {
  constexpr int k = 3, D = 4;
  const auto regions = random_features(k, D, 5);
  const std::vector<double> ctx = {0.5, -0.5, 2.0, 1.0};
  auto run = [&](const std::vector<double>& wc) {
    ad::ParameterStore<double> store;
    auto& p = store.add("w_c", {2 * D, D});
    std::copy(wc.begin(), wc.end(), p.values().begin());
    ad::Tape<double> t;
    std::vector<double> r(regions.values().begin(), regions.values().end());
    return fuse_context<double>(t.input({1, D}, ctx), t.input({k, D}, r), p).to_vector();
  };
  std::vector<double> top(2 * D * D, 0.0), bottom(2 * D * D, 0.0);
  for (int i = 0; i < D; ++i) {
    top[static_cast<std::size_t>(i * D + i)] = 1.0;
    bottom[static_cast<std::size_t>((D + i) * D + i)] = 1.0;
  }
  const auto c_ctx = run(top), c_reg = run(bottom);
  for (int i = 0; i < k; ++i)
    for (int d = 0; d < D; ++d) {
      EXPECT_EQ(c_ctx[static_cast<std::size_t>(i * D + d)], ctx[static_cast<std::size_t>(d)]);
      EXPECT_EQ(c_reg[static_cast<std::size_t>(i * D + d)], static_cast<double>(regions.region(i)[static_cast<std::size_t>(d)]));
    }
  Rng rng(3);
  std::vector<double> wc(2 * D * D);
  for (auto& x : wc) x = uniform01(rng) - 0.5;
  const auto got = run(wc);
  for (int i = 0; i < k; ++i) {
    std::vector<double> cat = ctx;
    for (int d = 0; d < D; ++d) cat.push_back(regions.region(i)[static_cast<std::size_t>(d)]);
    const auto expect = oracle::naive_matmul(cat, wc, 1, 2 * D, D);
    for (int d = 0; d < D; ++d) EXPECT_NEAR(got[static_cast<std::size_t>(i * D + d)], expect[static_cast<std::size_t>(d)], 1e-14);
  }

  ad::ParameterStore<double> bad;
  auto& p = bad.add("w_c", {D, D});
  ad::Tape<double> t;
  std::vector<double> r(regions.values().begin(), regions.values().end());
  EXPECT_THROW(fuse_context<double>(t.input({1, D}, ctx), t.input({k, D}, r), p), ShapeError);
}

TEST(SingleSubPolicy, OneRegionAndIdenticalRegions) {
  for (Variant v : testing_support::all_variants()) {
    auto cfg = miniature(v);
    cfg.regions = 1;
    CaptionModel<double> m(cfg, 3);
    const auto f = random_features(1, cfg.feature_dim, 2);
    ad::Tape<double> t;
    auto enc = m.encode(t, f);
    auto st = m.initial_state(t, enc);
    auto out = m.step(t, enc, st);
    const auto vs = values_of(out.visual.single_feature);
    for (int d = 0; d < cfg.feature_dim; ++d) EXPECT_NEAR(vs[static_cast<std::size_t>(d)], f.region(0)[static_cast<std::size_t>(d)], 1e-7);
  }
  auto cfg = miniature(Variant::kCavp4c);
  CaptionModel<double> m(cfg, 3);
  const auto one = random_features(1, cfg.feature_dim, 4);
  std::vector<float> same;
  for (int i = 0; i < cfg.regions; ++i) same.insert(same.end(), one.values().begin(), one.values().end());
  RegionFeatureSet f(cfg.regions, cfg.feature_dim, same);
  ad::Tape<double> t;
  auto enc = m.encode(t, f);
  auto st = m.initial_state(t, enc);
  for (int step = 0; step < 3; ++step) {
    auto out = m.step(t, enc, st);
    const auto vs = values_of(out.visual.single_feature);
    for (int d = 0; d < cfg.feature_dim; ++d) EXPECT_NEAR(vs[static_cast<std::size_t>(d)], one.values()[static_cast<std::size_t>(d)], 1e-7);
    st.prev_token = 4 + step;
  }
}

TEST(CavpStep, ContextSeedAndLastStepContext) {
  auto cfg = miniature(Variant::kCavp4c);
  CaptionModel<double> m4c(cfg, 17);
  const auto f = random_features(cfg.regions, cfg.feature_dim, 1);
  ad::Tape<double> t;
  auto enc = m4c.encode(t, f);
  auto st = m4c.initial_state(t, enc);
  ASSERT_EQ(st.context.size(), 1u);
  auto first = m4c.step(t, enc, st);
  const auto mean = values_of(enc.mean);
  EXPECT_EQ(values_of(first.visual.context_feature), mean);
  EXPECT_EQ(st.context.size(), 1u);  // seed replaced by v_1
  EXPECT_EQ(values_of(st.context[0]), values_of(first.visual.output));

  cfg.variant = Variant::kCavp4p;
  CaptionModel<double> m4p(cfg, 17);
  ad::Tape<double> t2;
  auto enc2 = m4p.encode(t2, f);
  auto st2 = m4p.initial_state(t2, enc2);
  std::vector<double> prev = values_of(enc2.mean);
  for (int step = 0; step < 4; ++step) {
    auto out = m4p.step(t2, enc2, st2);
    EXPECT_EQ(values_of(out.visual.context_feature), prev);
    prev = values_of(out.visual.output);
    st2.prev_token = 5;
  }
}

TEST(CavpStep, FourCAndFourPAgreeOnTwoStepSequences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CaptionModel<double> m4c(miniature(Variant::kCavp4c), seed);
    CaptionModel<double> m4p(miniature(Variant::kCavp4p), 0);
    m4p.copy_parameters_from(m4c);
    const auto f = random_features(4, 6, seed + 100);
    const std::vector<int> targets = {7, 9};
    const auto a = replay_log_probs(m4c, f, targets);
    const auto b = replay_log_probs(m4p, f, targets);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    // a third step sees two contexts and the variants may differ
    const std::vector<int> longer = {7, 9, 4};
    EXPECT_NE(replay_log_probs(m4c, f, longer)[2], replay_log_probs(m4p, f, longer)[2]);
  }
}

TEST(CavpStep, SingleVariantOutputIsTheSingleFeature) {
  CaptionModel<double> m(miniature(Variant::kSingle), 2);
  const auto f = random_features(4, 6, 3);
  ad::Tape<double> t;
  auto enc = m.encode(t, f);
  auto st = m.initial_state(t, enc);
  for (int step = 0; step < 3; ++step) {
    auto out = m.step(t, enc, st);
    EXPECT_EQ(out.visual.output.id(), out.visual.single_feature.id());
    EXPECT_FALSE(out.visual.composition_feature.valid());
    EXPECT_FALSE(out.visual.att_output.valid());
    st.prev_token = 6;
  }
}

TEST(CavpStep, FullStepEqualsManualComposition) {
  const auto cfg = miniature(Variant::kCavp4c);
  CaptionModel<double> m(cfg, 29);
  const auto f = random_features(cfg.regions, cfg.feature_dim, 30);
  const std::vector<int> tokens = {5, 8, 2};
  const auto expect = replay_log_probs(m, f, tokens);

  ad::Tape<double> t;
  std::vector<double> r(f.values().begin(), f.values().end());
  auto regions = t.input({cfg.regions, cfg.feature_dim}, r);
  auto mean = ad::mean_rows(regions);
  std::array<ad::LstmState<double>, 4> sub;
  for (auto& s : sub) s = ad::lstm_zero_state(t, cfg.hidden);
  auto lang = ad::lstm_zero_state(t, cfg.hidden);
  std::vector<ad::Var<double>> context = {mean};
  int prev = tokens::kBos;
  const auto ws = m.sub_policy_weights(SubPolicy::kSingle), wc = m.sub_policy_weights(SubPolicy::kContext),
             wp = m.sub_policy_weights(SubPolicy::kComposition), wo = m.sub_policy_weights(SubPolicy::kOutput);
  for (std::size_t step = 0; step < tokens.size(); ++step) {
    auto s = ad::concat_cols<double>({lang.h, mean, ad::embedding_row(t.param(m.embedding()), prev)});
    auto single = sub_policy_attend<double>(s, sub[0], regions, ws);
    auto ctx = sub_policy_attend<double>(s, sub[1], std::span<const ad::Var<double>>(context), wc);
    auto fused = fuse_context<double>(ctx.attention.fused, regions, m.fuse_weight());
    auto comp = sub_policy_attend<double>(s, sub[2], fused, wp);
    std::vector<ad::Var<double>> pair = {single.attention.fused, comp.attention.fused};
    auto out = sub_policy_attend<double>(s, sub[3], std::span<const ad::Var<double>>(pair), wo);
    sub = {single.state, ctx.state, comp.state, out.state};
    auto ls = language_step<double>(single.state.h, out.attention.fused, lang, m.language_weights());
    lang = ls.state;
    if (step == 0) context.clear();
    context.push_back(out.attention.fused);
    EXPECT_NEAR(ls.log_probs.value()[static_cast<std::size_t>(tokens[step])], expect[step], 1e-12);
    prev = tokens[step];
  }
}

TEST(CavpStep, OutputIsConvexMixOfSingleAndComposition) {
  for (Variant v : {Variant::kCavp3p, Variant::kCavp4p, Variant::kCavp4c}) {
    CaptionModel<double> m(miniature(v), 40);
    const auto f = random_features(4, 6, 41);
    ad::Tape<double> t;
    auto enc = m.encode(t, f);
    auto st = m.initial_state(t, enc);
    for (int step = 0; step < 3; ++step) {
      auto out = m.step(t, enc, st).visual;
      const auto pi = values_of(out.att_output);
      const auto vs = values_of(out.single_feature), vp = values_of(out.composition_feature), o = values_of(out.output);
      for (std::size_t d = 0; d < o.size(); ++d) EXPECT_NEAR(o[d], pi[0] * vs[d] + pi[1] * vp[d], 1e-6);
      const auto lp = values_of(out.output_log_policy);
      EXPECT_NEAR(std::exp(lp[0]), pi[0], 1e-12);
      st.prev_token = 4 + step;
    }
  }
}

TEST(CavpStep, AttentionSimplexAndHullOnRandomDecodes) {
  int decodes = 0;
  for (Variant v : testing_support::all_variants()) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      CaptionModel<double> m(miniature(v), seed);
      const auto f = random_features(4, 6, 1000 + seed, 3.0);
      std::vector<std::vector<double>> regions;
      for (int i = 0; i < 4; ++i) regions.push_back(row(f, i));
      Rng rng(seed);
      ad::Tape<double> t;
      auto enc = m.encode(t, f);
      auto st = m.initial_state(t, enc);
      std::vector<std::vector<double>> contexts = {values_of(enc.mean)};
      for (int step = 0; step < 3; ++step) {
        auto out = m.step(t, enc, st).visual;
        const auto rec = record_attention(out);
        expect_simplex(rec.single);
        expect_hull(out.single_feature.value(), regions);
        if (v != Variant::kSingle) {
          expect_simplex(rec.composition);
          expect_simplex(rec.output);
          const auto fc = values_of(out.context_feature);
          std::vector<std::vector<double>> fused;
          const auto wc = param_values(m, "fuse.w_c");
          for (const auto& r : regions) {
            auto cat = fc;
            cat.insert(cat.end(), r.begin(), r.end());
            fused.push_back(oracle::naive_matmul(cat, wc, 1, 12, 6));
          }
          expect_hull(out.composition_feature.value(), fused);
          expect_hull(out.output.value(), {values_of(out.single_feature), values_of(out.composition_feature)});
        }
        if (v == Variant::kCavp4c) {
          expect_simplex(rec.context);
          EXPECT_EQ(rec.context.size(), contexts.size());
          expect_hull(out.context_feature.value(), contexts);
          if (step == 0) contexts.clear();
          contexts.push_back(values_of(out.output));
        }
        st.prev_token = 4 + static_cast<int>(rng() % 8);
      }
      ++decodes;
    }
  }
  EXPECT_EQ(decodes, 100);
}

TEST(LanguagePolicy, ZeroOutputLayerIsUniform) {
  CaptionModel<double> m(miniature(Variant::kCavp4c, 10), 5);
  for (auto* name : {"out.w", "out.b"})
    for (auto& x : m.parameters().at(name).values()) x = 0.0;
  const auto lp = replay_log_probs(m, random_features(4, 6, 2), std::vector<int>{4, 5, 2});
  for (double x : lp) EXPECT_NEAR(x, -std::log(10.0), 1e-12);
  Trajectory traj;
  for (double x : lp) traj.steps.push_back({0, x, {}});
  EXPECT_NEAR(sequence_log_prob(traj), -3.0 * std::log(10.0), 1e-12);
}

TEST(LanguagePolicy, LargeBiasSaturates) {
  CaptionModel<double> m(miniature(Variant::kCavp4p), 5);
  for (auto& x : m.parameters().at("out.w").values()) x = 0.0;
  auto b = m.parameters().at("out.b").values();
  std::fill(b.begin(), b.end(), 0.0);
  b[7] = 50.0;
  const auto traj = decoding::greedy_decode(m, random_features(4, 6, 3));
  ASSERT_EQ(traj.steps.size(), 3u);
  for (const auto& s : traj.steps) {
    EXPECT_EQ(s.token, 7);
    EXPECT_NEAR(s.log_prob, 0.0, 1e-15 + 12 * std::exp(-50.0));
  }
}

TEST(LanguagePolicy, MatchesComposedOracle) {
  const auto cfg = miniature(Variant::kCavp4c);
  CaptionModel<double> m(cfg, 77);
  Rng rng(78);
  std::vector<double> hs(8), v(6), h(8), c(8);
  for (auto* vec : {&hs, &v, &h, &c})
    for (auto& x : *vec) x = 2.0 * uniform01(rng) - 1.0;
  ad::Tape<double> t;
  auto out = language_step<double>(t.input({1, 8}, hs), t.input({1, 6}, v),
                                   ad::LstmState<double>{t.input({1, 8}, h), t.input({1, 8}, c)}, m.language_weights());
  auto x = hs;
  x.insert(x.end(), v.begin(), v.end());
  const auto cell = oracle::lstm_cell(x, h, c, param_values(m, "lang.w_in"), param_values(m, "lang.w_hid"), param_values(m, "lang.bias"), 14, 8);
  auto logits = oracle::naive_matmul(cell.h, param_values(m, "out.w"), 1, 8, 12);
  const auto b = param_values(m, "out.b");
  double mx = -1e300;
  for (std::size_t i = 0; i < 12; ++i) mx = std::max(mx, logits[i] += b[i]);
  double z = 0;
  for (double l : logits) z += std::exp(l - mx);
  const auto got = values_of(out.log_probs);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(got[i], logits[i] - mx - std::log(z), 1e-13);
  expect_simplex([&] {
    std::vector<double> p;
    for (double l : got) p.push_back(std::exp(l));
    return p;
  }());
}

TEST(LanguagePolicy, SequenceLogProbIsAdditive) {
  CaptionModel<double> m(miniature(Variant::kCavp4c, 12, 6), 8);
  const auto f = random_features(4, 6, 9);
  const std::vector<int> tokens = {4, 6, 8, 10, 2};
  const auto lp = replay_log_probs(m, f, tokens);
  Trajectory whole, head, tail;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    whole.steps.push_back({tokens[i], lp[i], {}});
    (i < 2 ? head : tail).steps.push_back({tokens[i], lp[i], {}});
  }
  EXPECT_NEAR(sequence_log_prob(whole), sequence_log_prob(head) + sequence_log_prob(tail), 1e-12);
}

TEST(Model, FloatAndDoubleAgree) {
  CaptionModel<double> md(miniature(Variant::kCavp4c), 3);
  CaptionModel<float> mf(miniature(Variant::kCavp4c), 3);
  mf.copy_parameters_from(md);
  const auto f = random_features(4, 6, 4);
  const std::vector<int> tokens = {4, 9, 2};
  const auto a = replay_log_probs(md, f, tokens), b = replay_log_probs(mf, f, tokens);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-4);
}

TEST(Model, TeacherForceRejectsOutOfRangeTokens) {
  CaptionModel<double> m(miniature(Variant::kCavp4c), 3);
  ad::Tape<double> t;
  const std::vector<int> bad = {4, 12};
  EXPECT_THROW(teacher_force(t, m, random_features(4, 6, 1), bad), ContractError);
  ad::Tape<double> t2;
  EXPECT_THROW(m.encode(t2, random_features(4, 5, 1)), ShapeError);
}
