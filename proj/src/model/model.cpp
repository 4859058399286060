// SPDX-License-Identifier: Apache-2.0
#include "cavp/model/model.hpp"

#include <cmath>
#include <map>
#include <set>
#include <numeric>

#include "cavp/common/tokens.hpp"

namespace cavp {
namespace {

std::string attention_prefix(SubPolicy sp) { return "att." + std::string(sub_policy_name(sp)); }

constexpr std::array<SubPolicy, kSubPolicyCount> kAllSubPolicies = {SubPolicy::kSingle, SubPolicy::kContext,
                                                                    SubPolicy::kComposition, SubPolicy::kOutput};

template <typename T>
std::vector<double> to_doubles(ad::Var<T> v) {
  if (!v.valid()) return {};
  auto s = v.value();
  return {s.begin(), s.end()};
}

}  // namespace

template <typename T>
LanguageStep<T> language_step(ad::Var<T> single_hidden, ad::Var<T> visual, const ad::LstmState<T>& state, const LanguageWeights<T>& w) {
  ad::Tape<T>& tape = *visual.tape();
  ad::Var<T> x = ad::concat_cols<T>({single_hidden, visual});
  ad::LstmState<T> next = ad::lstm_step(x, state, w.lstm);
  ad::Var<T> logits = ad::add(ad::matmul(next.h, tape.param(*w.out_w)), tape.param(*w.out_b));
  return {logits, ad::log_softmax(logits), next};
}

template <typename T>
CaptionModel<T>::CaptionModel(const ModelConfig& config, std::uint64_t seed) : config_(config), sharing_(sharing_map_for(config.variant)) {
  config_.validate();
  register_parameters();
  initialize(seed);
}

template <typename T>
bool CaptionModel<T>::uses_sub_policy(SubPolicy sp) const {
  switch (config_.variant) {
    case Variant::kSingle: return sp == SubPolicy::kSingle;
    case Variant::kCavp4c: return true;
    case Variant::kCavp3p:
    case Variant::kCavp4p: return sp != SubPolicy::kContext;
  }
  return false;
}

template <typename T>
void CaptionModel<T>::register_parameters() {
  const auto& c = config_;
  params_.add("embed", {c.vocab_size, c.embed});
  std::set<std::string> lstm_prefixes;
  for (const auto& [sp, prefix] : sharing_) lstm_prefixes.insert(prefix);
  for (const auto& prefix : lstm_prefixes) ad::add_lstm(params_, prefix, c.state_size(), c.hidden);
  for (SubPolicy sp : kAllSubPolicies) {
    if (!uses_sub_policy(sp)) continue;
    const std::string p = attention_prefix(sp);
    params_.add(p + ".w_hid", {c.hidden, c.attention});
    params_.add(p + ".w_query", {c.feature_dim, c.attention});
    params_.add(p + ".w_score", {c.attention, 1});
  }
  if (c.variant != Variant::kSingle) params_.add("fuse.w_c", {2 * c.feature_dim, c.feature_dim});
  ad::add_lstm(params_, "lang", c.hidden + c.feature_dim, c.hidden);
  params_.add("out.w", {c.hidden, c.vocab_size});
  params_.add("out.b", {1, c.vocab_size});
}

template <typename T>
void CaptionModel<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const std::string& name = p.name();
    const bool is_bias = name.size() >= 4 && (name.ends_with(".bias") || name.ends_with(".b"));
    if (is_bias) {
      std::fill(p.values().begin(), p.values().end(), T{0});
    } else {
      ad::xavier_uniform(p, rng);
    }
  }
  // Forget-gate bias 1.0 for every LSTM.
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.name().ends_with(".bias")) continue;
    auto b = p.values();
    const int H = config_.hidden;
    for (int j = 0; j < H; ++j) b[static_cast<std::size_t>(H + j)] = T{1};
  }
}

template <typename T>
SubPolicyWeights<T> CaptionModel<T>::sub_policy_weights(SubPolicy sp) const {
  if (!uses_sub_policy(sp)) {
    throw ContractError("variant " + std::string(variant_name(config_.variant)) + " has no " + std::string(sub_policy_name(sp)) +
                        " sub-policy weights");
  }
  SubPolicyWeights<T> w;
  w.lstm = ad::find_lstm(params_, sharing_.at(std::string(sub_policy_name(sp))), config_.state_size(), config_.hidden);
  const std::string p = attention_prefix(sp);
  w.attention.hidden = &params_.at(p + ".w_hid");
  w.attention.query = &params_.at(p + ".w_query");
  w.attention.score = &params_.at(p + ".w_score");
  return w;
}

template <typename T>
LanguageWeights<T> CaptionModel<T>::language_weights() const {
  LanguageWeights<T> w;
  w.lstm = ad::find_lstm(params_, "lang", config_.hidden + config_.feature_dim, config_.hidden);
  w.out_w = &params_.at("out.w");
  w.out_b = &params_.at("out.b");
  return w;
}

template <typename T>
Encoded<T> CaptionModel<T>::encode(ad::Tape<T>& tape, const RegionFeatureSet& features) const {
  if (features.dim() != config_.feature_dim) {
    throw ShapeError("encode: features have dimension " + std::to_string(features.dim()) + ", model expects " +
                     std::to_string(config_.feature_dim));
  }
  std::vector<T> vals(features.values().begin(), features.values().end());
  Encoded<T> enc;
  enc.regions = tape.input({features.regions(), features.dim()}, vals);
  enc.mean = ad::mean_rows(enc.regions);
  enc.single_query_projection = ad::matmul(enc.regions, tape.param(params_.at(attention_prefix(SubPolicy::kSingle) + ".w_query")));
  return enc;
}

template <typename T>
DecoderState<T> CaptionModel<T>::initial_state(ad::Tape<T>& tape, const Encoded<T>& enc) const {
  DecoderState<T> st;
  for (auto& s : st.sub_policy) s = ad::lstm_zero_state(tape, config_.hidden);
  st.language = ad::lstm_zero_state(tape, config_.hidden);
  st.context = {enc.mean};
  st.context_is_seed = true;
  st.prev_token = tokens::kBos;
  st.steps = 0;
  return st;
}

template <typename T>
ad::Var<T> CaptionModel<T>::state_input(ad::Tape<T>& tape, const Encoded<T>& enc, const DecoderState<T>& st) const {
  ad::Var<T> word = ad::embedding_row(tape.param(embedding()), st.prev_token);
  return ad::concat_cols<T>({st.language.h, enc.mean, word});
}

template <typename T>
CavpStepOutput<T> CaptionModel<T>::cavp_step(ad::Tape<T>& /*tape*/, const Encoded<T>& enc, DecoderState<T>& st, ad::Var<T> s) const {
  CavpStepOutput<T> out;
  // Sub-policies sharing an LSTM see the same state input, so project it once per weight set.
  std::map<std::string, ad::Var<T>> projections;
  auto projection = [&](SubPolicy sp, const SubPolicyWeights<T>& w) {
    const std::string& prefix = sharing_.at(std::string(sub_policy_name(sp)));
    auto it = projections.find(prefix);
    if (it == projections.end()) it = projections.emplace(prefix, ad::lstm_input_projection(s, w.lstm)).first;
    return it->second;
  };
  auto& sub = st.sub_policy;

  const auto w_single = sub_policy_weights(SubPolicy::kSingle);
  auto single = sub_policy_attend<T>(s, sub[0], enc.regions, w_single, projection(SubPolicy::kSingle, w_single), enc.single_query_projection);
  sub[0] = single.state;
  out.single_feature = single.attention.fused;
  out.single_hidden = single.state.h;
  out.att_single = single.attention.weights;

  if (config_.variant == Variant::kSingle) {
    out.output = out.single_feature;
  } else {
    if (config_.variant == Variant::kCavp4c) {
      const auto w_ctx = sub_policy_weights(SubPolicy::kContext);
      ad::Var<T> queries = st.context.size() == 1 ? st.context.front() : ad::concat_rows<T>(std::span<const ad::Var<T>>(st.context));
      auto ctx = sub_policy_attend<T>(s, sub[1], queries, w_ctx, projection(SubPolicy::kContext, w_ctx));
      sub[1] = ctx.state;
      out.context_feature = ctx.attention.fused;
      out.att_context = ctx.attention.weights;
    } else {
      out.context_feature = st.context.back();
    }

    ad::Var<T> fused = fuse_context(out.context_feature, enc.regions, fuse_weight());
    const auto w_comp = sub_policy_weights(SubPolicy::kComposition);
    auto comp = sub_policy_attend<T>(s, sub[2], fused, w_comp, projection(SubPolicy::kComposition, w_comp));
    sub[2] = comp.state;
    out.composition_feature = comp.attention.fused;
    out.att_composition = comp.attention.weights;

    const auto w_out = sub_policy_weights(SubPolicy::kOutput);
    ad::Var<T> pair = ad::concat_rows<T>({out.single_feature, out.composition_feature});
    auto output = sub_policy_attend<T>(s, sub[3], pair, w_out, projection(SubPolicy::kOutput, w_out));
    sub[3] = output.state;
    out.output = output.attention.fused;
    out.att_output = output.attention.weights;
    out.output_log_policy = ad::log_softmax(output.attention.logits);
  }

  if (st.context_is_seed) {
    st.context.clear();
    st.context_is_seed = false;
  }
  st.context.push_back(out.output);
  return out;
}

template <typename T>
StepOutput<T> CaptionModel<T>::step(ad::Tape<T>& tape, const Encoded<T>& enc, DecoderState<T>& st) const {
  ad::Var<T> s = state_input(tape, enc, st);
  StepOutput<T> out;
  out.visual = cavp_step(tape, enc, st, s);
  auto lang = language_step(out.visual.single_hidden, out.visual.output, st.language, language_weights());
  st.language = lang.state;
  out.log_probs = lang.log_probs;
  ++st.steps;
  return out;
}

template <typename T>
ForcedPass<T> teacher_force(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> targets) {
  ForcedPass<T> pass;
  Encoded<T> enc = model.encode(tape, features);
  DecoderState<T> st = model.initial_state(tape, enc);
  const int V = model.config().vocab_size;
  for (int target : targets) {
    if (target < 0 || target >= V) throw ContractError("teacher_force: token id " + std::to_string(target) + " outside vocabulary");
    StepOutput<T> out = model.step(tape, enc, st);
    pass.target_log_probs.push_back(ad::pick(out.log_probs, target));
    pass.steps.push_back(out);
    st.prev_token = target;
  }
  return pass;
}

template <typename T>
AttentionRecord record_attention(const CavpStepOutput<T>& out) {
  AttentionRecord r;
  r.single = to_doubles(out.att_single);
  r.context = to_doubles(out.att_context);
  r.composition = to_doubles(out.att_composition);
  r.output = to_doubles(out.att_output);
  return r;
}

template <typename T>
std::vector<double> replay_log_probs(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> tokens) {
  ad::Tape<T> tape(false);
  auto pass = teacher_force(tape, model, features, tokens);
  std::vector<double> out;
  out.reserve(pass.target_log_probs.size());
  for (auto v : pass.target_log_probs) out.push_back(static_cast<double>(v.item()));
  return out;
}

double sequence_log_prob(const Trajectory& trajectory) {
  double acc = 0.0;
  for (const auto& s : trajectory.steps) acc += s.log_prob;
  return acc;
}

std::vector<int> Trajectory::tokens() const {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.token);
  return out;
}

std::vector<int> Trajectory::words() const {
  std::vector<int> out;
  for (const auto& s : steps)
    if (!tokens::is_special(s.token)) out.push_back(s.token);
  return out;
}

std::vector<double> Trajectory::step_log_probs() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.log_prob);
  return out;
}

#define CAVP_INSTANTIATE_MODEL(T)                                                                                   \
  template LanguageStep<T> language_step(ad::Var<T>, ad::Var<T>, const ad::LstmState<T>&, const LanguageWeights<T>&); \
  template class CaptionModel<T>;                                                                                   \
  template ForcedPass<T> teacher_force(ad::Tape<T>&, const CaptionModel<T>&, const RegionFeatureSet&, std::span<const int>); \
  template AttentionRecord record_attention(const CavpStepOutput<T>&);                                              \
  template std::vector<double> replay_log_probs(const CaptionModel<T>&, const RegionFeatureSet&, std::span<const int>);

CAVP_INSTANTIATE_MODEL(float)
CAVP_INSTANTIATE_MODEL(double)

#undef CAVP_INSTANTIATE_MODEL

}  // namespace cavp
