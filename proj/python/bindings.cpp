#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "replaydet/audio_io.hpp"
#include "replaydet/codec.hpp"
#include "replaydet/eval.hpp"
#include "replaydet/features.hpp"
#include "replaydet/pipeline.hpp"
#include "replaydet/synth_corpus.hpp"

namespace py = pybind11;
using namespace replaydet;

namespace {

AudioClip to_clip(const Eigen::VectorXd& samples, int rate) {
  AudioClip c;
  c.samples.assign(samples.data(), samples.data() + samples.size());
  c.sample_rate_hz = rate;
  return c;
}

Eigen::VectorXd to_array(const AudioClip& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.samples.data(), static_cast<Eigen::Index>(c.size()));
}

CodecConfig codec_at(int bitrate_bps) {
  CodecConfig c;
  c.bitrate_bps = bitrate_bps;
  return c;
}

py::dict stats_dict(const ExtractStats& s) {
  py::dict d;
  d["utterances"] = s.utterances;
  d["features"] = s.features;
  d["cache_hits"] = s.cache_hits;
  d["computed"] = s.computed;
  d["failures"] = s.failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Replay-attack detection with codec and vocoder residual features";

  // Library errors surface as ReplayDetError with the error code name in
  // its `code` attribute.
  const py::object error_type = py::exception<Error>(m, "ReplayDetError");
  static PyObject* error_ptr = error_type.ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_ptr)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_ptr, exc.ptr());
    }
  });

  m.attr("SAMPLE_RATE") = kCanonicalRate;
  m.attr("SUPPORTED_BITRATES") = std::vector<int>(std::begin(kSupportedBitrates),
                                                  std::end(kSupportedBitrates));

  // Audio. Clips cross the boundary as float64 arrays at 16 kHz.
  m.def("load_wav", [](const std::filesystem::path& p) { return to_array(load_wav(p)); },
        py::arg("path"), "Load a WAV as mono 16 kHz float64 samples.");
  m.def("save_wav",
        [](const Eigen::VectorXd& x, const std::filesystem::path& p) {
          save_wav(to_clip(x, kCanonicalRate), p);
        },
        py::arg("samples"), py::arg("path"));
  m.def("generate_bonafide",
        [](std::uint64_t seed, double duration_s) { return to_array(generate_bonafide(seed, duration_s)); },
        py::arg("seed"), py::arg("duration_s") = 2.0);
  m.def("replay",
        [](const Eigen::VectorXd& x, std::uint64_t channel_seed) {
          return to_array(apply_replay_channel(to_clip(x, kCanonicalRate),
                                               random_replay_channel(channel_seed)));
        },
        py::arg("samples"), py::arg("channel_seed"),
        "Pass samples through a randomly drawn replay channel.");
  m.def("codec_roundtrip",
        [](const Eigen::VectorXd& x, int bitrate_bps) {
          return to_array(roundtrip(to_clip(x, kCanonicalRate), codec_at(bitrate_bps)));
        },
        py::arg("samples"), py::arg("bitrate_bps") = 16000);
  m.def("extract_features",
        [](const Eigen::VectorXd& x, int bitrate_bps) {
          return extract_raw(to_clip(x, kCanonicalRate), codec_at(bitrate_bps), PipelineConfig{})
              .values;
        },
        py::arg("samples"), py::arg("bitrate_bps") = 16000,
        "512-dim residual feature with the default spectrogram settings.");

  m.def("compute_eer",
        [](const std::vector<double>& bonafide, const std::vector<double>& spoof) {
          const auto r = compute_eer(bonafide, spoof);
          return py::make_tuple(r.eer, r.threshold);
        },
        py::arg("bonafide"), py::arg("spoof"), "Returns (eer, threshold).");

  m.def("build_corpus",
        [](const std::filesystem::path& out, int n_bonafide, int n_spoof, std::uint64_t seed) {
          const auto r = build_corpus(n_bonafide, n_spoof, out, seed);
          py::dict d;
          d["manifest"] = r.manifest;
          d["train_manifest"] = r.train_manifest;
          d["eval_manifest"] = r.eval_manifest;
          d["eval_keys"] = r.eval_keys;
          d["noise_dir"] = r.noise_dir;
          d["rir_dir"] = r.rir_dir;
          return d;
        },
        py::arg("out_dir"), py::arg("n_bonafide"), py::arg("n_spoof"), py::arg("seed") = 0);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("parse", &parse_config, py::arg("text"))
      .def_static("load", [](const std::filesystem::path& p) { return load_config(p); })
      .def_static("keys", &ExperimentConfig::keys)
      .def("__getitem__", [](const ExperimentConfig& c, const std::string& k) { return c.get(k); })
      .def("__setitem__",
           [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.set(k, v); })
      .def("to_text", &ExperimentConfig::to_text)
      .def("__repr__", [](const ExperimentConfig& c) { return "Config(\n" + c.to_text() + ")"; });

  m.def("extract",
        [](const ExperimentConfig& c, const std::filesystem::path& workdir, int jobs) {
          RunOptions opt;
          opt.jobs = jobs;
          const auto s = cmd_extract(c, workdir, opt);
          py::dict d;
          d["train"] = stats_dict(s.train);
          d["eval"] = stats_dict(s.eval);
          return d;
        },
        py::arg("config"), py::arg("workdir"), py::arg("jobs") = 1);
  m.def("train",
        [](const ExperimentConfig& c, const std::filesystem::path& workdir,
           const std::filesystem::path& model) {
          TrainingReport report;
          const auto tm = cmd_train(c, workdir, model, {}, &report);
          py::dict d;
          d["kind"] = std::string(classifier_kind_name(tm.kind()));
          d["pca_components"] = tm.pca.num_components();
          d["converged"] = report.converged;
          d["epoch_losses"] = report.epoch_losses;
          d["warnings"] = report.warnings;
          return d;
        },
        py::arg("config"), py::arg("workdir"), py::arg("model_path"));
  m.def("score",
        [](const ExperimentConfig& c, const std::filesystem::path& workdir,
           const std::filesystem::path& model, const std::filesystem::path& scores, int jobs) {
          RunOptions opt;
          opt.jobs = jobs;
          std::vector<std::pair<std::string, double>> out;
          for (const auto& r : cmd_score(c, workdir, model, scores, opt)) out.emplace_back(r.utt_id, r.score);
          return out;
        },
        py::arg("config"), py::arg("workdir"), py::arg("model_path"), py::arg("scores_path"),
        py::arg("jobs") = 1);
  m.def("evaluate",
        [](const std::filesystem::path& scores, const std::filesystem::path& keys) {
          std::ostringstream sink;
          const auto r = cmd_eval(scores, keys, sink);
          py::dict d;
          d["eer"] = r.eer;
          d["threshold"] = r.threshold;
          d["bonafide"] = r.num_bonafide;
          d["spoof"] = r.num_spoof;
          return d;
        },
        py::arg("scores_path"), py::arg("keys_path"));
}
