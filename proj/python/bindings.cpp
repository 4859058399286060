// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"

#include "cavp/common/errors.hpp"
#include "cavp/common/tokens.hpp"
#include "cavp/data/dataset.hpp"
#include "cavp/data/scene_generator.hpp"
#include "cavp/decoding/decoder.hpp"
#include "cavp/metrics/bleu.hpp"
#include "cavp/metrics/cider.hpp"
#include "cavp/metrics/corpus.hpp"
#include "cavp/metrics/meteor.hpp"
#include "cavp/metrics/rouge.hpp"
#include "cavp/training/checkpoint.hpp"
#include "cavp/training/model_gradcheck.hpp"
#include "cavp/training/trainer.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace cavp;

namespace {

std::vector<metrics::TokenSequence> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<metrics::TokenSequence> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(metrics::tokenize(t));
  return out;
}

RegionFeatureSet to_features(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw ShapeError("features must be a 2-D array (regions x dim)");
  const auto k = static_cast<int>(a.shape(0)), d = static_cast<int>(a.shape(1));
  return RegionFeatureSet(k, d, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const RegionFeatureSet& f) {
  py::array_t<float> out({f.regions(), f.dim()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

py::dict epoch_dict(const training::EpochRecord& r) {
  py::dict d;
  d["phase"] = std::string(training::phase_name(r.phase));
  d["epoch"] = r.epoch;
  d["loss"] = r.loss;
  d["lr"] = r.learning_rate;
  d["grad_norm"] = r.grad_norm;
  d["sample_reward"] = r.sample_reward;
  d["greedy_reward"] = r.greedy_reward;
  d["advantage"] = r.advantage;
  d["checkpoint"] = r.checkpoint;
  return d;
}

/// A loaded checkpoint that captions region features.
class Captioner {
 public:
  explicit Captioner(const fs::path& path) : ckpt_(training::load_checkpoint(path)) {}

  py::dict decode(py::array_t<float, py::array::c_style | py::array::forcecast> features, int beam) const {
    const auto f = to_features(std::move(features));
    Trajectory t;
    {
      py::gil_scoped_release release;
      t = beam <= 1 ? decoding::greedy_decode(*ckpt_.model, f) : decoding::beam_decode(*ckpt_.model, f, beam);
    }
    py::dict d;
    d["caption"] = metrics::join(ckpt_.vocab.decode(t.words()));
    d["tokens"] = t.tokens();
    d["log_prob"] = t.total_log_prob;
    d["finished"] = t.finished;
    return d;
  }

  std::vector<double> score(py::array_t<float, py::array::c_style | py::array::forcecast> features, const std::string& caption) const {
    auto ids = ckpt_.vocab.encode(metrics::tokenize(caption));
    ids.push_back(tokens::kEos);
    return replay_log_probs(*ckpt_.model, to_features(std::move(features)), ids);
  }

  std::string variant() const { return std::string(variant_name(ckpt_.config.variant)); }
  const std::vector<std::string>& vocabulary() const { return ckpt_.vocab.tokens(); }
  int epoch() const { return ckpt_.state.epoch; }
  std::string phase() const { return ckpt_.state.phase; }

 private:
  training::Checkpoint ckpt_;
};

}  // namespace

PYBIND11_MODULE(_cavp, m) {
  m.doc() = "Context-aware visual policy captioning: data, metrics, training and decoding.";

  // Most specific first: the translators are tried in reverse registration order.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  // data
  m.def(
      "generate_dataset",
      [](const fs::path& out, std::size_t scenes, std::uint64_t seed, bool deterministic, int regions, int feature_dim, double noise) {
        data::GrammarConfig g;
        g.deterministic = deterministic;
        g.regions = regions;
        g.feature_dim = feature_dim;
        g.noise = noise;
        const auto ds = data::generate_scenes(scenes, seed, g);
        std::vector<std::string> paths;
        for (const auto& p : data::save_dataset(ds, out)) paths.push_back(p.string());
        return paths;
      },
      py::arg("out_dir"), py::arg("scenes"), py::arg("seed") = 0, py::arg("deterministic") = false, py::arg("regions") = 8,
      py::arg("feature_dim") = 24, py::arg("noise") = 0.05, "Writes a synthetic scene dataset and returns the file paths.");

  py::class_<data::Dataset>(m, "Dataset")
      .def_static("load", &data::load_dataset, py::arg("path"))
      .def("__len__", &data::Dataset::size)
      .def_property_readonly("regions", [](const data::Dataset& d) { return d.info.regions; })
      .def_property_readonly("feature_dim", [](const data::Dataset& d) { return d.info.feature_dim; })
      .def("image_id", [](const data::Dataset& d, std::size_t i) { return d.features.at(i).image_id; })
      .def("features", [](const data::Dataset& d, std::size_t i) { return to_array(d.features.at(i).features); })
      .def("captions",
           [](const data::Dataset& d, std::size_t i) {
             std::vector<std::string> out;
             for (const auto& r : d.captions.at(i).references) out.push_back(metrics::join(r));
             return out;
           })
      .def(
          "indices", [](const data::Dataset& d, const std::string& split) { return d.indices(data::parse_split(split)); }, py::arg("split"));

  // metrics
  m.def(
      "bleu", [](const std::string& c, const std::vector<std::string>& refs, int n) { return metrics::bleu(metrics::tokenize(c), tokenize_all(refs), n); },
      py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4);
  m.def(
      "rouge_l", [](const std::string& c, const std::vector<std::string>& refs) { return metrics::rouge_l(metrics::tokenize(c), tokenize_all(refs)); },
      py::arg("candidate"), py::arg("references"));
  m.def(
      "meteor_lite",
      [](const std::string& c, const std::vector<std::string>& refs) { return metrics::meteor_lite(metrics::tokenize(c), tokenize_all(refs)); },
      py::arg("candidate"), py::arg("references"));
  m.def(
      "cider_d",
      [](const std::string& c, const std::vector<std::string>& refs, const std::vector<std::vector<std::string>>& corpus) {
        std::vector<std::vector<metrics::TokenSequence>> docs;
        for (const auto& doc : corpus) docs.push_back(tokenize_all(doc));
        return metrics::cider_d(metrics::tokenize(c), tokenize_all(refs), metrics::TfIdfIndex::build(docs));
      },
      py::arg("candidate"), py::arg("references"), py::arg("corpus"),
      "CIDEr-D with document frequencies from `corpus` (one reference list per image).");
  m.def(
      "evaluate_corpus",
      [](const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs, const std::string& names) {
        std::vector<std::vector<metrics::TokenSequence>> r;
        for (const auto& x : refs) r.push_back(tokenize_all(x));
        const auto report = metrics::evaluate_corpus(tokenize_all(cands), r, metrics::parse_metric_list(names));
        return report.scores;
      },
      py::arg("candidates"), py::arg("references"), py::arg("metrics") = "all");

  // training
  m.def(
      "train",
      [](const fs::path& data_dir, const fs::path& out_dir, const std::string& phase, const std::string& variant, const std::string& reward,
         std::optional<int> epochs, std::uint64_t seed, std::optional<fs::path> init, const py::dict& overrides) {
        const auto ph = training::parse_phase(phase);
        auto cfg = training::TrainConfig::desk(ph);
        if (!overrides.empty()) {
          auto merged = cfg.to_json();
          merged.merge_patch(nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(overrides)).cast<std::string>()));
          merged["phase"] = phase;
          cfg = training::TrainConfig::from_json(merged);
        }
        cfg.model.variant = parse_variant(variant);
        cfg.reward = metrics::parse_reward_kind(reward);
        cfg.seed = seed;
        if (ph == training::Phase::kScst) cfg.cloning_weight = 0.0;
        if (epochs) cfg.epochs = *epochs;
        training::TrainOptions opts;
        opts.out_dir = out_dir;
        opts.init = init;
        std::vector<training::EpochRecord> records;
        {
          py::gil_scoped_release release;
          const auto ds = data::load_dataset(data_dir);
          records = training::train(cfg, ds, opts).epochs;
        }
        py::list out;
        for (const auto& r : records) out.append(epoch_dict(r));
        return out;
      },
      py::arg("data_dir"), py::arg("out_dir"), py::arg("phase") = "xe", py::arg("variant") = "cavp4c", py::arg("reward") = "ciderD",
      py::arg("epochs") = py::none(), py::arg("seed") = 0, py::arg("init") = py::none(), py::arg("overrides") = py::dict(),
      "Runs one training phase with the desk profile; `overrides` patches the config JSON. Returns per-epoch records.");

  py::class_<Captioner>(m, "Captioner")
      .def(py::init<const fs::path&>(), py::arg("checkpoint"))
      .def("decode", &Captioner::decode, py::arg("features"), py::arg("beam") = 1)
      .def("score", &Captioner::score, py::arg("features"), py::arg("caption"), "Per-step log-probabilities of a caption (end token included).")
      .def_property_readonly("variant", &Captioner::variant)
      .def_property_readonly("vocabulary", &Captioner::vocabulary)
      .def_property_readonly("epoch", &Captioner::epoch)
      .def_property_readonly("phase", &Captioner::phase);

  m.def(
      "gradcheck",
      [](int seeds, double eps, double tolerance, std::uint64_t seed) {
        training::ModelGradcheckOptions o;
        o.seeds = seeds;
        o.seed = seed;
        o.check.eps = eps;
        o.check.tolerance = tolerance;
        std::vector<ad::GradcheckEntry> entries;
        {
          py::gil_scoped_release release;
          entries = training::run_gradcheck_suite(o);
        }
        py::list out;
        for (const auto& e : entries) {
          py::dict d;
          d["name"] = e.name;
          d["rel_error"] = e.max_rel_error;
          d["passed"] = e.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("seeds") = 20, py::arg("eps") = 1e-5, py::arg("tolerance") = 1e-4, py::arg("seed") = 0);
}
