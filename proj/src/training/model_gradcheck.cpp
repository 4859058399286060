// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/model_gradcheck.hpp"

#include <array>

#include "cavp/common/random.hpp"
#include "cavp/common/tokens.hpp"
#include "cavp/model/model.hpp"
#include "cavp/training/losses.hpp"

namespace cavp::training {
namespace {

void merge(ad::GradcheckEntry& worst, const ad::GradcheckEntry& e) {
  worst.scalars += e.scalars;
  if (!(e.max_rel_error <= worst.max_rel_error)) worst.max_rel_error = e.max_rel_error;
  if (!(e.worst_array_error <= worst.worst_array_error)) {
    worst.worst_array_error = e.worst_array_error;
    worst.worst_parameter = e.worst_parameter;
  }
}

}  // namespace

std::vector<ad::GradcheckEntry> check_model_gradients(const ModelGradcheckOptions& options) {
  std::vector<ad::GradcheckEntry> out;
  for (auto vname : kVariantNames) {
    const Variant variant = parse_variant(vname);
    ModelConfig cfg = ModelConfig::miniature();
    cfg.variant = variant;
    const bool cloning = variant != Variant::kSingle;

    ad::GradcheckEntry xe_entry;
    xe_entry.name = "model.xe." + std::string(vname);
    ad::GradcheckEntry clone_entry;
    clone_entry.name = "model.xe+cloning." + std::string(vname);

    for (int s = 0; s < options.seeds; ++s) {
      const std::uint64_t run_seed = mix_seed(options.seed, static_cast<std::uint64_t>(s));
      CaptionModel<double> model(cfg, run_seed);
      Rng rng(mix_seed(run_seed, 0xfeed));

      std::vector<float> values(static_cast<std::size_t>(cfg.regions * cfg.feature_dim));
      for (auto& v : values) v = static_cast<float>(2.0 * uniform01(rng) - 1.0);
      const RegionFeatureSet features(cfg.regions, cfg.feature_dim, values);

      std::vector<int> targets;
      for (int t = 0; t < cfg.max_length; ++t) {
        targets.push_back(tokens::kSpecialCount + static_cast<int>(uniform01(rng) * (cfg.vocab_size - tokens::kSpecialCount)));
      }
      targets.push_back(tokens::kEos);

      ExpertOutputPolicy expert;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        static constexpr std::array<std::array<double, 2>, 3> kChoices = {{{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}}};
        expert.targets.push_back(kChoices[static_cast<std::size_t>(uniform01(rng) * 3.0)]);
      }

      merge(xe_entry, ad::check_gradients(
                          xe_entry.name, model.parameters(),
                          [&](ad::Tape<double>& tape) { return xe_loss<double>(tape, model, features, targets).total; }, options.check));
      if (cloning) {
        merge(clone_entry, ad::check_gradients(
                               clone_entry.name, model.parameters(),
                               [&](ad::Tape<double>& tape) {
                                 return xe_loss<double>(tape, model, features, targets, &expert, options.lambda).total;
                               },
                               options.check));
      }
    }
    xe_entry.passed = xe_entry.max_rel_error < options.check.tolerance;
    out.push_back(xe_entry);
    if (cloning) {
      clone_entry.passed = clone_entry.max_rel_error < options.check.tolerance;
      out.push_back(clone_entry);
    }
  }
  return out;
}

std::vector<ad::GradcheckEntry> run_gradcheck_suite(const ModelGradcheckOptions& options) {
  auto out = ad::check_primitives(options.seed, options.seeds, options.check);
  auto model = check_model_gradients(options);
  out.insert(out.end(), model.begin(), model.end());
  return out;
}

}  // namespace cavp::training
