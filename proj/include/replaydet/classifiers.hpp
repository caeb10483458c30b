#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "replaydet/anogan.hpp"
#include "replaydet/features.hpp"
#include "replaydet/ocsvm.hpp"
#include "replaydet/vae.hpp"

namespace replaydet {

enum class ClassifierKind : std::uint32_t { kVae = 1, kOcsvm = 2, kAnoGan = 3 };

std::string_view classifier_kind_name(ClassifierKind kind);
std::optional<ClassifierKind> parse_classifier_kind(std::string_view name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kOcsvm;
  VaeConfig vae;
  OcsvmConfig ocsvm;
  AnoGanConfig anogan;
  AnoGanSearchConfig search;
};

// A fitted PCA plus one classifier, as persisted in a model file.
struct TrainedModel {
  PcaTransform pca;
  std::variant<VaeModel, OcsvmModel, AnoGanModel> classifier;
  std::string config_echo;

  ClassifierKind kind() const;
};

// Fits PCA on the raw rows, then the configured classifier on the reduced
// rows. All rows are treated as bonafide.
TrainedModel train_model(const Eigen::MatrixXd& raw_rows, double pca_energy,
                         const ClassifierConfig& config,
                         TrainingReport* report = nullptr);

double score_reduced(const TrainedModel& model, const FeatureVector& reduced);
double score_raw(const TrainedModel& model, const FeatureVector& raw);

inline constexpr std::uint32_t kModelFileVersion = 1;

// "RDMD", version, kind, config echo, PCA, classifier blob.
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace replaydet
