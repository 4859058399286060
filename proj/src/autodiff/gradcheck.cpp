// SPDX-License-Identifier: Apache-2.0
#include "cavp/autodiff/gradcheck.hpp"

#include <cmath>
#include <map>

#include "cavp/autodiff/ops.hpp"
#include "cavp/common/random.hpp"

namespace cavp::ad {

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12);
}

GradcheckEntry check_gradients(const std::string& name, ParameterStore<double>& store, const LossBuilder& build,
                               const GradcheckOptions& options) {
  GradcheckEntry entry;
  entry.name = name;

  Tape<double> tape;
  tape.inject_fault(options.fault);
  GradientMap<double> analytic = tape.backward(build(tape), store);

  std::vector<double> all_analytic, all_numeric;
  Tape<double> probe(false);
  auto eval = [&] {
    probe.clear();
    return build(probe).item();
  };
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto values = store[p].values();
    std::vector<double> numeric(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = eval();
      values[i] = saved - options.eps;
      const double down = eval();
      values[i] = saved;
      numeric[i] = (up - down) / (2.0 * options.eps);
    }
    entry.scalars += values.size();
    const auto a = analytic[p];
    all_analytic.insert(all_analytic.end(), a.begin(), a.end());
    all_numeric.insert(all_numeric.end(), numeric.begin(), numeric.end());
    const double err = relative_error(a, numeric);
    if (!(err <= entry.worst_array_error)) {
      entry.worst_array_error = err;
      entry.worst_parameter = store[p].name();
    }
  }
  entry.max_rel_error = relative_error(all_analytic, all_numeric);
  entry.passed = entry.max_rel_error < options.tolerance;
  return entry;
}

namespace {

struct PrimitiveCase {
  OpKind op;
  // Declares parameters, returns the op output before the weighted reduction.
  std::function<void(ParameterStore<double>&)> declare;
  std::function<Var<double>(Tape<double>&, const ParameterStore<double>&)> forward;
};

Var<double> p(Tape<double>& t, const ParameterStore<double>& s, const char* name) { return t.param(s.at(name)); }

std::vector<PrimitiveCase> primitive_cases() {
  using S = ParameterStore<double>;
  using Tp = Tape<double>;
  std::vector<PrimitiveCase> c;
  c.push_back({OpKind::kMatMul, [](S& s) { s.add("a", {2, 3}); s.add("b", {3, 4}); },
               [](Tp& t, const S& s) { return matmul(p(t, s, "a"), p(t, s, "b")); }});
  c.push_back({OpKind::kAdd, [](S& s) { s.add("a", {2, 3}); s.add("b", {2, 3}); },
               [](Tp& t, const S& s) { return add(p(t, s, "a"), p(t, s, "b")); }});
  c.push_back({OpKind::kSub, [](S& s) { s.add("a", {2, 3}); s.add("b", {2, 3}); },
               [](Tp& t, const S& s) { return sub(p(t, s, "a"), p(t, s, "b")); }});
  c.push_back({OpKind::kMul, [](S& s) { s.add("a", {2, 3}); s.add("b", {2, 3}); },
               [](Tp& t, const S& s) { return mul(p(t, s, "a"), p(t, s, "b")); }});
  c.push_back({OpKind::kScale, [](S& s) { s.add("a", {2, 3}); }, [](Tp& t, const S& s) { return scale(p(t, s, "a"), -1.7); }});
  c.push_back({OpKind::kAddRowBroadcast, [](S& s) { s.add("a", {3, 4}); s.add("b", {1, 4}); },
               [](Tp& t, const S& s) { return add_row_broadcast(p(t, s, "a"), p(t, s, "b")); }});
  c.push_back({OpKind::kRepeatRows, [](S& s) { s.add("a", {1, 4}); }, [](Tp& t, const S& s) { return repeat_rows(p(t, s, "a"), 3); }});
  c.push_back({OpKind::kConcatCols, [](S& s) { s.add("a", {2, 3}); s.add("b", {2, 2}); },
               [](Tp& t, const S& s) { return concat_cols({p(t, s, "a"), p(t, s, "b"), p(t, s, "a")}); }});
  c.push_back({OpKind::kConcatRows, [](S& s) { s.add("a", {1, 3}); s.add("b", {2, 3}); },
               [](Tp& t, const S& s) { return concat_rows({p(t, s, "a"), p(t, s, "b")}); }});
  c.push_back({OpKind::kSliceCols, [](S& s) { s.add("a", {2, 5}); }, [](Tp& t, const S& s) { return slice_cols(p(t, s, "a"), 1, 3); }});
  c.push_back({OpKind::kReshape, [](S& s) { s.add("a", {2, 3}); }, [](Tp& t, const S& s) { return reshape(p(t, s, "a"), Shape{3, 2}); }});
  c.push_back({OpKind::kSigmoid, [](S& s) { s.add("a", {2, 3}); }, [](Tp& t, const S& s) { return sigmoid(p(t, s, "a")); }});
  c.push_back({OpKind::kTanh, [](S& s) { s.add("a", {2, 3}); }, [](Tp& t, const S& s) { return tanh(p(t, s, "a")); }});
  c.push_back({OpKind::kLog, [](S& s) { s.add("pos", {2, 3}); }, [](Tp& t, const S& s) { return log(p(t, s, "pos")); }});
  c.push_back({OpKind::kSoftmax, [](S& s) { s.add("a", {1, 5}); }, [](Tp& t, const S& s) { return softmax(p(t, s, "a")); }});
  c.push_back({OpKind::kLogSoftmax, [](S& s) { s.add("a", {1, 5}); }, [](Tp& t, const S& s) { return log_softmax(p(t, s, "a")); }});
  c.push_back({OpKind::kMeanRows, [](S& s) { s.add("a", {4, 3}); }, [](Tp& t, const S& s) { return mean_rows(p(t, s, "a")); }});
  c.push_back({OpKind::kEmbeddingRow, [](S& s) { s.add("a", {5, 3}); }, [](Tp& t, const S& s) { return embedding_row(p(t, s, "a"), 2); }});
  c.push_back({OpKind::kSum, [](S& s) { s.add("a", {2, 3}); }, [](Tp& t, const S& s) { return sum(p(t, s, "a")); }});
  c.push_back({OpKind::kPick, [](S& s) { s.add("a", {1, 5}); }, [](Tp& t, const S& s) { return pick(p(t, s, "a"), 3); }});
  return c;
}

}  // namespace

std::vector<GradcheckEntry> check_primitives(std::uint64_t seed, int seeds, const GradcheckOptions& options) {
  std::vector<GradcheckEntry> out;
  for (const auto& pc : primitive_cases()) {
    GradcheckEntry worst;
    worst.name = std::string(op_name(pc.op));
    for (int s = 0; s < seeds; ++s) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s) * 131 + static_cast<std::uint64_t>(pc.op)));
      ParameterStore<double> store;
      pc.declare(store);
      for (std::size_t i = 0; i < store.size(); ++i) {
        const bool positive = store[i].name() == "pos";
        for (auto& v : store[i].values()) v = positive ? 0.5 + 1.5 * uniform01(rng) : 2.0 * uniform01(rng) - 1.0;
      }
      // Weighted reduction so that every output element carries a distinct
      // upstream gradient.
      Tape<double> shape_tape(false);
      const Shape shape = pc.forward(shape_tape, store).shape();
      std::vector<double> weights(shape.size());
      for (auto& w : weights) w = 2.0 * uniform01(rng) - 1.0;
      auto build = [&](Tape<double>& t) {
        Var<double> y = pc.forward(t, store);
        if (pc.op == OpKind::kSum) return y;
        return sum(mul(y, t.input(shape, weights)));
      };
      GradcheckEntry e = check_gradients(worst.name, store, build, options);
      worst.scalars += e.scalars;
      if (!(e.max_rel_error <= worst.max_rel_error)) worst.max_rel_error = e.max_rel_error;
      if (!(e.worst_array_error <= worst.worst_array_error)) {
        worst.worst_array_error = e.worst_array_error;
        worst.worst_parameter = e.worst_parameter;
      }
    }
    worst.passed = worst.max_rel_error < options.tolerance;
    out.push_back(worst);
  }
  return out;
}

}  // namespace cavp::ad
