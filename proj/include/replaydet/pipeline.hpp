#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "replaydet/augment.hpp"
#include "replaydet/classifiers.hpp"
#include "replaydet/codec.hpp"
#include "replaydet/error.hpp"
#include "replaydet/eval.hpp"
#include "replaydet/features.hpp"
#include "replaydet/synth_corpus.hpp"

namespace replaydet {

// Flat "section.key=value" experiment description. Defaults match the
// reference configuration (50/25 ms frames, FFT 1024, 98% PCA energy,
// nu 0.5, tol 1e-3, 16 kbps).
struct ExperimentConfig {
  CodecConfig codec;
  PipelineConfig features;
  std::string vocoder_command;  // external vocoder template; empty = builtin
  double pca_energy = 0.98;
  ClassifierConfig classifier;
  std::vector<AugmentKind> augmentations;
  AugmentSpec augment;  // shared parameters; kind and seed are per use
  std::string noise_dir;
  std::string rir_dir;
  std::uint64_t seed = 0;
  std::string train_manifest;
  std::string eval_manifest;
  std::string workdir;

  // Throws Config for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  // One "key=value" line per key, in a fixed order.
  std::string to_text() const;
  // The subset of to_text() that determines extracted features.
  std::string feature_fingerprint() const;

  void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Each override is "key=value".
void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::string>& overrides);

// Flag value, then the config's paths.workdir, then REPLAYDET_WORKDIR,
// then "replaydet_work".
std::filesystem::path resolve_workdir(const std::string& flag_value,
                                      const ExperimentConfig& config);

struct RunOptions {
  int jobs = 1;
  std::ostream* log = nullptr;  // progress and warnings; null = silent
};

struct ExtractStats {
  std::size_t utterances = 0;
  std::size_t features = 0;    // rows written (originals + variants)
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
  std::size_t failures = 0;    // utterances skipped
  bool over_failure_threshold() const {
    return utterances > 0 && failures * 100 > utterances;
  }
};

std::filesystem::path feature_table_path(const std::filesystem::path& workdir,
                                         std::string_view split);

// Extracts one Raw feature per (utterance x variant) into `table_path`.
// Training splits get one extra variant per configured augmentation.
// Per-utterance results are cached under workdir/cache by content hash.
ExtractStats extract_split(const ExperimentConfig& config,
                           const std::filesystem::path& manifest,
                           bool training, const std::filesystem::path& workdir,
                           const std::filesystem::path& table_path,
                           const RunOptions& options = {});

struct ExtractSummary {
  ExtractStats train;
  ExtractStats eval;
};

ExtractSummary cmd_extract(const ExperimentConfig& config,
                           const std::filesystem::path& workdir,
                           const RunOptions& options = {});

// Fits PCA and the classifier on bonafide rows of the training table.
TrainedModel cmd_train(const ExperimentConfig& config,
                       const std::filesystem::path& workdir,
                       const std::filesystem::path& model_path,
                       const RunOptions& options = {},
                       TrainingReport* report = nullptr);

std::vector<ScoreRecord> cmd_score(const ExperimentConfig& config,
                                   const std::filesystem::path& workdir,
                                   const std::filesystem::path& model_path,
                                   const std::filesystem::path& scores_path,
                                   const RunOptions& options = {});

// Prints EER %, threshold and counts to `report`.
EerResult cmd_eval(const std::filesystem::path& scores_path,
                   const std::filesystem::path& keys_path, std::ostream& report);

std::vector<KeyRecord> keys_from_manifest(const std::filesystem::path& manifest);
void write_keys(const std::vector<KeyRecord>& keys,
                const std::filesystem::path& path);

// Process exit code for a library error: 1 usage/config, 2 data,
// 3 solver or training failure.
int exit_code_for(ErrorCode code);

}  // namespace replaydet
