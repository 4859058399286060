// SPDX-License-Identifier: Apache-2.0
#include "cavp/decoding/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "cavp/common/errors.hpp"
#include "cavp/common/tokens.hpp"

namespace cavp::decoding {
namespace {

int resolve_length(const ModelConfig& cfg, const DecodeOptions& options) {
  return options.max_length < 0 ? cfg.max_length : options.max_length;
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

template <typename T>
std::vector<double> to_double(ad::Var<T> v) {
  auto s = v.value();
  return {s.begin(), s.end()};
}

// Runs one left-to-right decode, choosing each token with `choose`.
template <typename T, typename Choose>
TapedTrajectory<T> decode_one(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, const DecodeOptions& options,
                              Choose&& choose) {
  TapedTrajectory<T> out;
  const int max_len = resolve_length(model.config(), options);
  Encoded<T> enc = model.encode(tape, features);
  DecoderState<T> st = model.initial_state(tape, enc);
  int words = 0;
  while (true) {
    if (words >= max_len) break;
    StepOutput<T> step = model.step(tape, enc, st);
    const std::vector<double> lp = to_double(step.log_probs);
    const int token = choose(lp);
    TrajectoryStep ts;
    ts.token = token;
    ts.log_prob = lp[static_cast<std::size_t>(token)];
    if (options.record_attention) ts.attention = record_attention(step.visual);
    out.trajectory.steps.push_back(std::move(ts));
    out.trajectory.total_log_prob += lp[static_cast<std::size_t>(token)];
    if (tape.recording()) out.log_probs.push_back(ad::pick(step.log_probs, token));
    st.prev_token = token;
    if (token == tokens::kEos) {
      out.trajectory.finished = true;
      break;
    }
    ++words;
  }
  return out;
}

}  // namespace

template <typename T>
Trajectory greedy_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, const DecodeOptions& options) {
  ad::Tape<T> tape(false);
  return decode_one(tape, model, features, options, [](const std::vector<double>& lp) { return argmax_lowest(lp); }).trajectory;
}

template <typename T>
TapedTrajectory<T> sample_decode_on_tape(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, Rng& rng,
                                         const DecodeOptions& options) {
  std::vector<double> probs;
  return decode_one(tape, model, features, options, [&](const std::vector<double>& lp) {
    probs.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) probs[i] = std::exp(lp[i]);
    return static_cast<int>(sample_categorical(probs, rng));
  });
}

template <typename T>
Trajectory sample_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, Rng& rng, const DecodeOptions& options) {
  ad::Tape<T> tape(false);
  return sample_decode_on_tape(tape, model, features, rng, options).trajectory;
}

template <typename T>
Trajectory beam_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, int beam_width, const DecodeOptions& options) {
  if (beam_width < 1) throw ContractError("beam_decode: beam width must be >= 1, got " + std::to_string(beam_width));
  const int max_len = resolve_length(model.config(), options);

  struct Hypothesis {
    DecoderState<T> state;
    Trajectory trajectory;
    int words = 0;
  };
  struct Candidate {
    double score;
    std::size_t parent;  // rank of the parent hypothesis in the pool
    double step_lp;
    int token;           // -1: finished hypothesis carried over
  };

  ad::Tape<T> tape(false);
  Encoded<T> enc = model.encode(tape, features);
  std::vector<Hypothesis> pool;
  pool.push_back({model.initial_state(tape, enc), {}, 0});

  auto done = [&](const Hypothesis& h) { return h.trajectory.finished || h.words >= max_len; };

  while (!std::all_of(pool.begin(), pool.end(), done)) {
    std::vector<Candidate> cands;
    std::vector<StepOutput<T>> outputs(pool.size());
    std::vector<DecoderState<T>> next_states(pool.size());
    for (std::size_t h = 0; h < pool.size(); ++h) {
      if (done(pool[h])) {
        cands.push_back({pool[h].trajectory.total_log_prob, h, 0.0, -1});
        continue;
      }
      next_states[h] = pool[h].state;
      outputs[h] = model.step(tape, enc, next_states[h]);
      const std::vector<double> lp = to_double(outputs[h].log_probs);
      for (std::size_t v = 0; v < lp.size(); ++v) cands.push_back({pool[h].trajectory.total_log_prob + lp[v], h, lp[v], static_cast<int>(v)});
    }
    // Score first; ties go to the better-ranked parent, then the more
    // probable step, then the lower token id (this makes width 1 greedy).
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      if (a.step_lp != b.step_lp) return a.step_lp > b.step_lp;
      return a.token < b.token;
    };
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam_width), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);

    std::vector<Hypothesis> next;
    next.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      const Hypothesis& parent = pool[c.parent];
      if (c.token < 0) {
        next.push_back(parent);
        continue;
      }
      Hypothesis h{next_states[c.parent], parent.trajectory, parent.words};
      TrajectoryStep ts;
      ts.token = c.token;
      ts.log_prob = c.step_lp;
      if (options.record_attention) ts.attention = record_attention(outputs[c.parent].visual);
      h.trajectory.steps.push_back(std::move(ts));
      h.trajectory.total_log_prob = c.score;
      h.state.prev_token = c.token;
      if (c.token == tokens::kEos) {
        h.trajectory.finished = true;
      } else {
        ++h.words;
      }
      next.push_back(std::move(h));
    }
    pool = std::move(next);
  }
  // The pool is ordered by the comparator, so the front is the best.
  return pool.front().trajectory;
}

template Trajectory greedy_decode(const CaptionModel<float>&, const RegionFeatureSet&, const DecodeOptions&);
template Trajectory greedy_decode(const CaptionModel<double>&, const RegionFeatureSet&, const DecodeOptions&);
template Trajectory sample_decode(const CaptionModel<float>&, const RegionFeatureSet&, Rng&, const DecodeOptions&);
template Trajectory sample_decode(const CaptionModel<double>&, const RegionFeatureSet&, Rng&, const DecodeOptions&);
template TapedTrajectory<float> sample_decode_on_tape(ad::Tape<float>&, const CaptionModel<float>&, const RegionFeatureSet&, Rng&,
                                                      const DecodeOptions&);
template TapedTrajectory<double> sample_decode_on_tape(ad::Tape<double>&, const CaptionModel<double>&, const RegionFeatureSet&, Rng&,
                                                       const DecodeOptions&);
template Trajectory beam_decode(const CaptionModel<float>&, const RegionFeatureSet&, int, const DecodeOptions&);
template Trajectory beam_decode(const CaptionModel<double>&, const RegionFeatureSet&, int, const DecodeOptions&);

}  // namespace cavp::decoding
