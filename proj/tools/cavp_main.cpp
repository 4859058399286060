// SPDX-License-Identifier: Apache-2.0
// cavp: data generation, training, evaluation, scoring, gradient checks and
// attention traces for compositional visual-policy captioning.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include <spdlog/spdlog.h>

#include "cavp/common/errors.hpp"
#include "cavp/common/logging.hpp"
#include "cavp/common/manifest.hpp"
#include "cavp/data/dataset.hpp"
#include "cavp/data/scene_generator.hpp"
#include "cavp/decoding/decoder.hpp"
#include "cavp/decoding/trace.hpp"
#include "cavp/metrics/corpus.hpp"
#include "cavp/metrics/reward.hpp"
#include "cavp/training/checkpoint.hpp"
#include "cavp/training/evaluation.hpp"
#include "cavp/training/model_gradcheck.hpp"
#include "cavp/training/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw cavp::DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path sidecar(const fs::path& file, const std::string& suffix) { return fs::path(file.string() + suffix); }

// ---------------------------------------------------------------- datagen

struct DatagenArgs {
  std::size_t scenes = 2000;
  std::uint64_t seed = 0;
  bool deterministic = false;
  fs::path out;
  cavp::data::GrammarConfig grammar;
};

int run_datagen(const DatagenArgs& a) {
  cavp::data::GrammarConfig g = a.grammar;
  g.deterministic = a.deterministic;
  cavp::RunManifest m;
  m.command = "datagen";
  m.seed = a.seed;
  m.version = CAVP_VERSION;
  m.config = {{"scenes", a.scenes},       {"deterministic", g.deterministic}, {"regions", g.regions},
              {"feature_dim", g.feature_dim}, {"noise", g.noise},            {"min_objects", g.min_objects},
              {"max_objects", g.max_objects}, {"min_references", g.min_references}, {"max_references", g.max_references}};
  for (auto name : {cavp::data::kFeaturesFile, cavp::data::kCaptionsFile, cavp::data::kLexiconFile, cavp::data::kScenesFile,
                    cavp::data::kDatasetInfoFile})
    m.outputs.push_back((a.out / name).string());
  m.write(a.out / "manifest.json");

  const auto ds = cavp::data::generate_scenes(a.scenes, a.seed, g);
  const auto written = cavp::data::save_dataset(ds, a.out);
  m.outputs.clear();
  for (const auto& p : written) m.outputs.push_back(p.string());
  m.digest_outputs();
  m.write(a.out / "manifest.json");
  std::printf("wrote %zu scenes to %s\n", ds.size(), a.out.c_str());
  return kOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string phase = "xe";
  std::string variant = "cavp4c";
  std::string reward = "ciderD";
  std::optional<double> cloning_weight;
  std::string profile = "desk";
  std::optional<fs::path> config_file;
  fs::path data;
  fs::path out;
  std::uint64_t seed = 0;
  std::optional<fs::path> init;
  std::optional<fs::path> resume;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<int> min_count;
  int threads = 1;
};

int run_train(const TrainArgs& a) {
  using namespace cavp::training;
  const Phase phase = parse_phase(a.phase);
  if (phase == Phase::kScst && !a.init && !a.resume) throw UsageError("--phase scst requires --init <xe checkpoint>");

  // Precedence: flags > config file > built-in profile.
  TrainConfig cfg = a.profile == "paper" ? TrainConfig::paper(phase) : TrainConfig::desk(phase);
  if (a.profile == "paper") spdlog::warn("the paper profile is sized for the published setup and is not runnable on a desk machine");
  if (a.config_file) {
    std::ifstream in(*a.config_file);
    if (!in) throw cavp::DataError("cannot open " + a.config_file->string());
    json merged = cfg.to_json();
    json overrides;
    try {
      overrides = json::parse(in);
    } catch (const json::exception& e) {
      throw cavp::DataError(a.config_file->string() + ": " + e.what());
    }
    merged.merge_patch(overrides);
    merged["phase"] = a.phase;
    cfg = TrainConfig::from_json(merged);
  }
  cfg.phase = phase;
  cfg.model.variant = cavp::parse_variant(a.variant);
  cfg.reward = cavp::metrics::parse_reward_kind(a.reward);
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  if (a.cloning_weight) cfg.cloning_weight = *a.cloning_weight;
  else if (phase == Phase::kScst) cfg.cloning_weight = 0.0;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.schedule.base = *a.lr;
  if (a.min_count) cfg.min_count = *a.min_count;
  try {
    cfg.validate();
  } catch (const cavp::ContractError& e) {
    throw UsageError(e.what());
  }

  cavp::RunManifest m;
  m.command = "train";
  m.seed = cfg.seed;
  m.version = CAVP_VERSION;
  m.config = cfg.to_json();
  m.config["threads"] = cfg.threads;
  m.add_input(a.data);
  if (a.init) m.add_input(*a.init);
  if (a.resume) m.add_input(*a.resume);
  m.outputs.push_back((a.out / kMetricsLog).string());
  for (int e = 0; e <= cfg.epochs; ++e) m.outputs.push_back((a.out / checkpoint_name(e)).string());
  m.write(a.out / "manifest.json");

  const auto ds = cavp::data::load_dataset(a.data);
  TrainOptions opts;
  opts.out_dir = a.out;
  opts.init = a.init;
  opts.resume = a.resume;
  opts.on_epoch = [](const EpochRecord& r) {
    std::printf("%s epoch %d: loss %.5f lr %.3g reward %.4f greedy %.4f (%.1fs)\n", std::string(phase_name(r.phase)).c_str(), r.epoch, r.loss,
                r.learning_rate, r.sample_reward, r.greedy_reward, r.seconds);
    std::fflush(stdout);
  };
  const auto result = train(cfg, ds, opts);
  m.digest_outputs();
  m.write(a.out / "manifest.json");
  std::printf("checkpoints: %zu, vocabulary: %d\n", result.checkpoints.size(), result.vocab.size());
  return kOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  fs::path ckpt;
  fs::path data;
  std::string split = "test";
  int beam = 5;
  std::string metrics = "all";
  fs::path out;
  std::optional<fs::path> decodes;
  int threads = 1;
};

json report_json(const cavp::metrics::MetricReport& r) { return {{"images", r.images}, {"metrics", r.scores}}; }

int run_eval(const EvalArgs& a) {
  const auto metric_names = cavp::metrics::parse_metric_list(a.metrics);
  const auto split = cavp::data::parse_split(a.split);
  if (a.beam < 1) throw UsageError("--beam must be >= 1");
  const fs::path decodes = a.decodes ? *a.decodes : sidecar(a.out, ".decodes.jsonl");

  cavp::RunManifest m;
  m.command = "eval";
  m.version = CAVP_VERSION;
  m.config = {{"split", a.split}, {"beam", a.beam}, {"metrics", metric_names}};
  m.add_input(a.ckpt);
  m.add_input(a.data);
  m.outputs = {a.out.string(), decodes.string()};
  m.write(sidecar(a.out, ".manifest.json"));

  const auto ck = cavp::training::load_checkpoint(a.ckpt);
  const auto ds = cavp::data::load_dataset(a.data);
  const auto positions = ds.indices(split);
  const auto traj = cavp::training::decode_images(*ck.model, ds, positions, a.beam, a.threads);
  std::vector<cavp::decoding::DecodeRecord> records;
  for (std::size_t i = 0; i < positions.size(); ++i)
    records.push_back(cavp::decoding::make_decode_record(ds.features[positions[i]].image_id, traj[i], ck.vocab));
  if (decodes.has_parent_path()) fs::create_directories(decodes.parent_path());
  cavp::decoding::write_decodes(decodes, records);

  const auto report = cavp::training::score_trajectories(ck.vocab, ds, positions, traj, metric_names);
  json j = report_json(report);
  j["split"] = a.split;
  j["beam"] = a.beam;
  write_json(a.out, j);
  m.digest_outputs();
  m.write(sidecar(a.out, ".manifest.json"));
  for (const auto& [k, v] : report.scores) std::printf("%-10s %.6f\n", k.c_str(), v);
  std::printf("images     %zu\n", report.images);
  return kOk;
}

// ------------------------------------------------------------------ score

struct ScoreArgs {
  fs::path decodes;
  fs::path data;
  std::string metrics = "all";
  fs::path out;
};

int run_score(const ScoreArgs& a) {
  const auto metric_names = cavp::metrics::parse_metric_list(a.metrics);
  cavp::RunManifest m;
  m.command = "score";
  m.version = CAVP_VERSION;
  m.config = {{"metrics", metric_names}};
  m.add_input(a.decodes);
  m.add_input(a.data);
  m.outputs = {a.out.string()};
  m.write(sidecar(a.out, ".manifest.json"));

  const auto ds = cavp::data::load_dataset(a.data);
  std::map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < ds.size(); ++i) by_id[ds.features[i].image_id] = i;
  std::vector<cavp::metrics::TokenSequence> cands;
  std::vector<std::vector<cavp::metrics::TokenSequence>> refs;
  for (const auto& r : cavp::decoding::read_decodes(a.decodes)) {
    auto it = by_id.find(r.image_id);
    if (it == by_id.end()) throw cavp::DataError("decode file names image " + std::to_string(r.image_id) + " which the dataset lacks");
    cands.push_back(cavp::metrics::tokenize(r.caption));
    refs.push_back(ds.captions[it->second].references);
  }
  const auto report = cavp::metrics::evaluate_corpus(cands, refs, metric_names);
  write_json(a.out, report_json(report));
  m.digest_outputs();
  m.write(sidecar(a.out, ".manifest.json"));
  for (const auto& [k, v] : report.scores) std::printf("%-10s %.6f\n", k.c_str(), v);
  std::printf("images     %zu\n", report.images);
  return kOk;
}

// -------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double eps = 1e-5;
  double tolerance = 1e-4;
  int seeds = 20;
  std::optional<std::string> fault;
};

int run_gradcheck(const GradcheckArgs& a) {
  cavp::training::ModelGradcheckOptions o;
  o.seed = a.seed;
  o.seeds = a.seeds;
  o.check.eps = a.eps;
  o.check.tolerance = a.tolerance;
  if (a.fault) {
    bool found = false;
    for (int k = 0; k <= static_cast<int>(cavp::ad::OpKind::kPick); ++k) {
      const auto op = static_cast<cavp::ad::OpKind>(k);
      if (cavp::ad::op_name(op) == *a.fault) {
        o.check.fault = op;
        found = true;
      }
    }
    if (!found) throw UsageError("unknown op '" + *a.fault + "' for --inject-fault");
  }
  const auto entries = cavp::training::run_gradcheck_suite(o);
  bool ok = true;
  std::printf("%-28s %-12s %-10s %s\n", "check", "rel_error", "status", "worst array (error)");
  for (const auto& e : entries) {
    ok = ok && e.passed;
    std::printf("%-28s %-12.3e %-10s %s (%.2e)\n", e.name.c_str(), e.max_rel_error, e.passed ? "ok" : "FAIL", e.worst_parameter.c_str(),
                e.worst_array_error);
  }
  std::printf("%s: eps %.1e, tolerance %.1e, %d seeds\n", ok ? "PASS" : "FAIL", a.eps, a.tolerance, a.seeds);
  return ok ? kOk : kNumerical;
}

// ------------------------------------------------------------------ trace

struct TraceArgs {
  fs::path ckpt;
  fs::path data;
  std::uint64_t image = 0;
  int beam = 1;
  fs::path out;
};

int run_trace(const TraceArgs& a) {
  cavp::RunManifest m;
  m.command = "trace";
  m.version = CAVP_VERSION;
  m.config = {{"image", a.image}, {"beam", a.beam}};
  m.add_input(a.ckpt);
  m.add_input(a.data);
  m.outputs = {a.out.string()};
  m.write(sidecar(a.out, ".manifest.json"));

  const auto ck = cavp::training::load_checkpoint(a.ckpt);
  const auto ds = cavp::data::load_dataset(a.data);
  const cavp::RegionFeatureSet* features = nullptr;
  for (const auto& f : ds.features)
    if (f.image_id == a.image) features = &f.features;
  if (features == nullptr) throw cavp::DataError("image " + std::to_string(a.image) + " not in " + a.data.string());
  const auto traj = a.beam <= 1 ? cavp::decoding::greedy_decode(*ck.model, *features) : cavp::decoding::beam_decode(*ck.model, *features, a.beam);
  const auto rows = cavp::decoding::make_trace(traj, ck.vocab);
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  cavp::decoding::write_trace(a.out, a.image, rows);
  m.digest_outputs();
  m.write(sidecar(a.out, ".manifest.json"));
  std::printf("%zu steps: %s\n", rows.size(), cavp::metrics::join(ck.vocab.decode(traj.tokens())).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  cavp::configure_logging_from_env();
  CLI::App app{"cavp: compositional visual-policy captioning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CAVP_VERSION);

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic scene dataset");
  datagen->add_option("--scenes", dg.scenes, "Number of scenes")->capture_default_str();
  datagen->add_option("--seed", dg.seed, "Generator seed")->capture_default_str();
  datagen->add_flag("--deterministic", dg.deterministic, "One canonical caption per scene");
  datagen->add_option("--out", dg.out, "Output directory")->required();
  datagen->add_option("--regions", dg.grammar.regions, "Regions per image (k)")->capture_default_str();
  datagen->add_option("--feature-dim", dg.grammar.feature_dim, "Feature dimension (D)")->capture_default_str();
  datagen->add_option("--noise", dg.grammar.noise, "Gaussian feature noise sigma")->capture_default_str();

  const std::vector<std::string> variants(cavp::kVariantNames.begin(), cavp::kVariantNames.end());
  const std::vector<std::string> rewards = {"bleu4", "rougeL", "meteorlite", "ciderD"};
  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a captioning model (xe or scst phase)");
  train->add_option("--phase", tr.phase, "xe | scst")->check(CLI::IsMember({"xe", "scst"}))->capture_default_str();
  train->add_option("--variant", tr.variant, "single | cavp3p | cavp4p | cavp4c")->check(CLI::IsMember(variants))->capture_default_str();
  train->add_option("--reward", tr.reward, "bleu4 | rougeL | meteorlite | ciderD")->check(CLI::IsMember(rewards))->capture_default_str();
  train->add_option("--cloning-weight", tr.cloning_weight, "Output sub-policy cloning weight (xe only; default 0.1)");
  train->add_option("--config", tr.profile, "Built-in profile: desk | paper")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
  train->add_option("--config-file", tr.config_file, "JSON overrides applied on top of the profile");
  train->add_option("--data", tr.data, "Dataset directory")->required();
  train->add_option("--out", tr.out, "Output directory")->required();
  train->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
  train->add_option("--init", tr.init, "Starting checkpoint (required for scst)");
  train->add_option("--resume", tr.resume, "Continue a run from one of its checkpoints");
  train->add_option("--epochs", tr.epochs, "Override the profile's epoch count");
  train->add_option("--batch-size", tr.batch_size, "Override the profile's batch size");
  train->add_option("--lr", tr.lr, "Override the base learning rate");
  train->add_option("--min-count", tr.min_count, "Vocabulary threshold");
  train->add_option("--threads", tr.threads, "Worker threads (results do not depend on it)")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Decode a split and score it");
  eval->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  eval->add_option("--data", ev.data, "Dataset directory")->required();
  eval->add_option("--split", ev.split, "train | val | test")->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  eval->add_option("--beam", ev.beam, "Beam width (1 = greedy)")->capture_default_str();
  eval->add_option("--metrics", ev.metrics, "Comma-separated metrics or 'all'")->capture_default_str();
  eval->add_option("--out", ev.out, "Report file (JSON)")->required();
  eval->add_option("--decodes", ev.decodes, "Decode file (default: <out>.decodes.jsonl)");
  eval->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Score a decode file against a dataset's references");
  score->add_option("--decodes", sc.decodes, "Decode file")->required();
  score->add_option("--data", sc.data, "Dataset directory")->required();
  score->add_option("--metrics", sc.metrics, "Comma-separated metrics or 'all'")->capture_default_str();
  score->add_option("--out", sc.out, "Report file (JSON)")->required();

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every primitive and the full model");
  gradcheck->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  gradcheck->add_option("--eps", gc.eps, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--seeds", gc.seeds, "Random draws per check")->capture_default_str();
  gradcheck->add_option("--inject-fault", gc.fault, "Corrupt the backward rule of one op (negative control)");

  TraceArgs tc;
  auto* trace = app.add_subcommand("trace", "Export the per-step attention trace of one image");
  trace->add_option("--ckpt", tc.ckpt, "Checkpoint")->required();
  trace->add_option("--data", tc.data, "Dataset directory")->required();
  trace->add_option("--image", tc.image, "Image id")->required();
  trace->add_option("--beam", tc.beam, "Beam width (1 = greedy)")->capture_default_str();
  trace->add_option("--out", tc.out, "Trace file (JSON lines)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*datagen) return run_datagen(dg);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev);
    if (*score) return run_score(sc);
    if (*gradcheck) return run_gradcheck(gc);
    if (*trace) return run_trace(tc);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const cavp::ContractError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const cavp::ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const cavp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const cavp::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
