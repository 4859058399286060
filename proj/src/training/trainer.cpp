// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "cavp/common/errors.hpp"
#include "cavp/common/random.hpp"
#include "cavp/common/tokens.hpp"
#include "cavp/metrics/cider.hpp"
#include "cavp/training/checkpoint.hpp"
#include "cavp/training/expert_policy.hpp"
#include "cavp/training/losses.hpp"
#include "cavp/training/scst.hpp"

namespace cavp::training {

using json = nlohmann::json;

std::string_view phase_name(Phase p) { return p == Phase::kXe ? "xe" : "scst"; }

Phase parse_phase(std::string_view name) {
  if (name == "xe") return Phase::kXe;
  if (name == "scst") return Phase::kScst;
  throw ContractError("unknown phase '" + std::string(name) + "' (choices: xe, scst)");
}

TrainConfig TrainConfig::desk(Phase phase) {
  TrainConfig c;
  c.phase = phase;
  c.model = ModelConfig::desk();
  if (phase == Phase::kXe) {
    c.schedule = {2e-3, 0.8, 3};
    c.epochs = 30;
    c.cloning_weight = 0.1;
  } else {
    c.schedule = {2e-4, 0.1, 55};
    c.epochs = 20;
    c.cloning_weight = 0.0;
  }
  return c;
}

TrainConfig TrainConfig::paper(Phase phase) {
  TrainConfig c = desk(phase);
  c.profile = "paper";
  c.model = ModelConfig::paper();
  c.batch_size = 100;
  c.schedule = phase == Phase::kXe ? LrSchedule{5e-4, 0.8, 3} : LrSchedule{5e-5, 0.1, 55};
  c.epochs = phase == Phase::kXe ? 37 : 63;
  return c;
}

void TrainConfig::validate() const {
  if (cloning_weight < 0.0) throw ContractError("cloning weight must be >= 0");
  if (phase == Phase::kScst && cloning_weight > 0.0) throw ContractError("cloning weight > 0 is only valid in the xe phase");
  if (batch_size < 1) throw ContractError("batch size must be >= 1");
  if (epochs < 0) throw ContractError("epochs must be >= 0");
  if (threads < 1) throw ContractError("threads must be >= 1");
  if (min_count < 1) throw ContractError("min count must be >= 1");
  if (schedule.base <= 0.0 || schedule.decay <= 0.0 || schedule.every < 1) throw ContractError("invalid learning-rate schedule");
}

json TrainConfig::to_json() const {
  return {{"phase", std::string(phase_name(phase))},
          {"reward", std::string(metrics::reward_name(reward))},
          {"lr_base", schedule.base},
          {"lr_decay", schedule.decay},
          {"lr_every", schedule.every},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"adam_eps", adam.eps},
          {"clip_norm", adam.clip_norm},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"cloning_weight", cloning_weight},
          {"seed", seed},
          {"min_count", min_count},
          {"profile", profile},
          {"hidden", model.hidden},
          {"embed", model.embed},
          {"attention", model.attention},
          {"max_length", model.max_length},
          {"variant", std::string(variant_name(model.variant))}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.phase = parse_phase(j.at("phase").get<std::string>());
  c.reward = metrics::parse_reward_kind(j.at("reward").get<std::string>());
  c.schedule = {j.at("lr_base").get<double>(), j.at("lr_decay").get<double>(), j.at("lr_every").get<int>()};
  c.adam = {j.at("beta1").get<double>(), j.at("beta2").get<double>(), j.at("adam_eps").get<double>(), j.at("clip_norm").get<double>()};
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.cloning_weight = j.at("cloning_weight").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.min_count = j.at("min_count").get<int>();
  c.profile = j.at("profile").get<std::string>();
  c.model.hidden = j.at("hidden").get<int>();
  c.model.embed = j.at("embed").get<int>();
  c.model.attention = j.at("attention").get<int>();
  c.model.max_length = j.at("max_length").get<int>();
  c.model.variant = parse_variant(j.at("variant").get<std::string>());
  return c;
}

json EpochRecord::to_json() const {
  return {{"phase", std::string(phase_name(phase))},
          {"epoch", epoch},
          {"loss", loss},
          {"lr", learning_rate},
          {"grad_norm", grad_norm},
          {"sample_reward", sample_reward},
          {"greedy_reward", greedy_reward},
          {"advantage", advantage},
          {"skipped", skipped},
          {"images", images},
          {"checkpoint", checkpoint}};
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
  return buf;
}

namespace {

struct ImageResult {
  ad::GradientMap<float> grads;
  double loss = 0.0;
  ScstDiagnostics diag;
};

// Runs `fn(i)` for i in [0, n) over `threads` workers in contiguous chunks.
// Results are written by index, so the caller's ordered reduction is what
// keeps the run deterministic.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_metrics(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l.dump() << '\n';
}

std::vector<json> read_metrics_until(const std::filesystem::path& path, std::string_view phase, int epoch) {
  std::vector<json> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("phase", "") == phase && j.value("epoch", 0) <= epoch) lines.push_back(std::move(j));
  }
  return lines;
}

}  // namespace

TrainResult train(const TrainConfig& config, const data::Dataset& dataset, const TrainOptions& options) {
  config.validate();
  dataset.validate();
  if (options.out_dir.empty()) throw ContractError("train: output directory required");
  if (config.phase == Phase::kScst && !options.init && !options.resume) {
    throw ContractError("scst phase needs starting parameters from an xe checkpoint");
  }
  std::filesystem::create_directories(options.out_dir);

  const std::vector<std::size_t> train_idx = dataset.indices(data::Split::kTrain);
  TrainResult result;
  std::optional<Checkpoint> start;
  if (options.resume) {
    start = load_checkpoint(*options.resume);
    if (start->state.phase != phase_name(config.phase)) throw ContractError("resume: checkpoint phase differs from the requested phase");
  } else if (options.init) {
    start = load_checkpoint(*options.init);
  }

  ModelConfig mcfg = config.model;
  if (start) {
    mcfg = start->config;
    if (mcfg.variant != config.model.variant) {
      throw ContractError("checkpoint variant " + std::string(variant_name(mcfg.variant)) + " differs from requested variant " +
                          std::string(variant_name(config.model.variant)));
    }
    result.vocab = start->vocab;
  } else {
    result.vocab = data::Vocabulary::build(dataset.all_references(train_idx), config.min_count);
    mcfg.vocab_size = result.vocab.size();
    mcfg.regions = dataset.info.regions;
    mcfg.feature_dim = dataset.info.feature_dim;
  }
  if (mcfg.regions != dataset.info.regions || mcfg.feature_dim != dataset.info.feature_dim) {
    throw DataError("dataset shape " + std::to_string(dataset.info.regions) + "x" + std::to_string(dataset.info.feature_dim) +
                    " does not match the model");
  }
  mcfg.validate();

  if (start) {
    result.model = std::move(start->model);
  } else {
    result.model = std::make_unique<CaptionModel<float>>(mcfg, mix_seed(config.seed, 0x1111));
  }
  CaptionModel<float>& model = *result.model;

  Adam adam(model.parameters(), config.adam);
  Rng rng(mix_seed(config.seed, config.phase == Phase::kXe ? 0x2222 : 0x3333));
  int first_epoch = 1;
  std::vector<json> metric_lines;
  const auto metrics_path = options.out_dir / kMetricsLog;
  if (options.resume) {
    if (!start->first_moments) throw DataError("resume: checkpoint carries no optimizer state");
    adam.first_moments() = *start->first_moments;
    adam.second_moments() = *start->second_moments;
    adam.set_steps(start->state.optimizer_steps);
    rng = deserialize_rng(start->state.rng_state);
    first_epoch = start->state.epoch + 1;
    metric_lines = read_metrics_until(metrics_path, phase_name(config.phase), start->state.epoch);
  }

  const json config_echo = config.to_json();
  auto save = [&](int epoch) {
    const auto path = options.out_dir / checkpoint_name(epoch);
    TrainingState st{std::string(phase_name(config.phase)), epoch, adam.steps(), serialize_rng(rng)};
    save_checkpoint(path, model, result.vocab, config_echo, st, &adam);
    result.checkpoints.push_back(path);
    return path;
  };
  if (!options.resume) {
    save(0);
    write_metrics(metrics_path, metric_lines);
  }

  // Per-image targets (word ids + end token) and expert policies.
  std::vector<std::vector<std::vector<int>>> targets(dataset.size());
  std::vector<std::vector<ExpertOutputPolicy>> experts(dataset.size());
  std::vector<std::vector<metrics::TokenSequence>> scored_refs(dataset.size());
  const bool cloning = config.phase == Phase::kXe && config.cloning_weight > 0.0 && mcfg.variant != Variant::kSingle;
  if (config.phase == Phase::kXe && config.cloning_weight > 0.0 && mcfg.variant == Variant::kSingle) {
    spdlog::warn("single variant has no output sub-policy; cloning weight ignored");
  }
  if (cloning && dataset.lexicon.empty()) spdlog::warn("dataset has no lexicon; every expert target is uniform");
  for (auto i : train_idx) {
    for (const auto& ref : dataset.captions[i].references) {
      std::vector<int> ids = result.vocab.encode(ref);
      ids.push_back(tokens::kEos);
      data::TokenSequence toks;
      for (int id : ids) toks.push_back(result.vocab.token(id));
      experts[i].push_back(build_expert_policy(toks, dataset.lexicon));
      targets[i].push_back(std::move(ids));
    }
    scored_refs[i] = dataset.captions[i].references;
  }
  metrics::TfIdfIndex index;
  ScstContext scst_ctx{&result.vocab, config.reward, nullptr};
  if (config.phase == Phase::kScst) {
    std::vector<std::vector<metrics::TokenSequence>> corpus;
    for (auto i : train_idx) corpus.push_back(scored_refs[i]);
    index = metrics::TfIdfIndex::build(corpus);
    scst_ctx.index = &index;
  }

  const int workers = std::max(1, config.threads);
  std::vector<ad::Tape<float>> tapes(static_cast<std::size_t>(workers));
  const float lambda = static_cast<float>(config.cloning_weight);

  for (int epoch = first_epoch; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = config.schedule.at(epoch - 1);
    std::vector<std::size_t> order = train_idx;
    for (std::size_t s = order.size(); s > 1; --s) std::swap(order[s - 1], order[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(s))]);

    EpochRecord rec;
    rec.phase = config.phase;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    double norm_acc = 0.0;
    std::size_t batches = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min(order.size() - b0, static_cast<std::size_t>(config.batch_size));
      std::vector<std::uint64_t> seeds(n);
      for (auto& s : seeds) s = rng();
      std::vector<ImageResult> results(n);

      parallel_for(n, workers, [&](std::size_t j, std::size_t w) {
        const std::size_t img = order[b0 + j];
        Rng local(seeds[j]);
        const auto& features = dataset.features[img].features;
        auto& out = results[j];
        if (config.phase == Phase::kXe) {
          const std::size_t pick = static_cast<std::size_t>(uniform01(local) * static_cast<double>(targets[img].size()));
          auto& tape = tapes[w];
          tape.clear();
          XeLoss<float> loss = xe_loss<float>(tape, model, features, targets[img][pick], cloning ? &experts[img][pick] : nullptr,
                                              cloning ? lambda : 0.0f);
          out.loss = loss.total.item();
          out.grads = tape.backward(loss.total, model.parameters());
        } else {
          ScstStep<float> step = scst_step<float>(model, features, scored_refs[img], scst_ctx, local);
          out.grads = std::move(step.gradients);
          out.loss = -step.diagnostics.advantage * step.diagnostics.sample_log_prob;
          out.diag = std::move(step.diagnostics);
        }
      });

      ad::GradientMap<float> total(model.parameters());
      for (std::size_t j = 0; j < n; ++j) {
        total.add(results[j].grads);
        rec.loss += results[j].loss;
        rec.sample_reward += results[j].diag.sample_reward;
        rec.greedy_reward += results[j].diag.greedy_reward;
        rec.advantage += results[j].diag.advantage;
        rec.skipped += results[j].diag.skipped ? 1 : 0;
      }
      total.scale(1.0f / static_cast<float>(n));
      norm_acc += adam.step(model.parameters(), total, lr);
      ++batches;
      rec.images += n;
    }

    if (rec.images > 0) {
      const double n = static_cast<double>(rec.images);
      rec.loss /= n;
      rec.sample_reward /= n;
      rec.greedy_reward /= n;
      rec.advantage /= n;
      rec.grad_norm = norm_acc / static_cast<double>(batches);
    }
    rec.checkpoint = checkpoint_name(epoch);
    save(epoch);
    metric_lines.push_back(rec.to_json());
    write_metrics(metrics_path, metric_lines);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("{} epoch {}/{}: loss {:.4f} lr {:.2e} reward {:.4f} (greedy {:.4f}) {:.1f}s", phase_name(config.phase), epoch, config.epochs,
                 rec.loss, lr, rec.sample_reward, rec.greedy_reward, rec.seconds);
    if (options.on_epoch) options.on_epoch(rec);
    result.epochs.push_back(rec);
  }
  return result;
}

}  // namespace cavp::training
