#include "replaydet/classifiers.hpp"

#include <fstream>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"

namespace replaydet {

std::string_view classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kVae: return "vae";
    case ClassifierKind::kOcsvm: return "ocsvm";
    case ClassifierKind::kAnoGan: return "anogan";
  }
  return "unknown";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view name) {
  for (auto k : {ClassifierKind::kVae, ClassifierKind::kOcsvm, ClassifierKind::kAnoGan})
    if (classifier_kind_name(k) == name) return k;
  return std::nullopt;
}

ClassifierKind TrainedModel::kind() const {
  switch (classifier.index()) {
    case 0: return ClassifierKind::kVae;
    case 1: return ClassifierKind::kOcsvm;
    default: return ClassifierKind::kAnoGan;
  }
}

TrainedModel train_model(const Eigen::MatrixXd& raw_rows, double pca_energy,
                         const ClassifierConfig& config, TrainingReport* report) {
  TrainedModel model;
  model.pca = fit_pca(raw_rows, pca_energy);
  const Eigen::MatrixXd reduced = apply_pca(model.pca, raw_rows);
  switch (config.kind) {
    case ClassifierKind::kVae:
      model.classifier = vae_train(reduced, config.vae, report);
      break;
    case ClassifierKind::kOcsvm:
      model.classifier = ocsvm_train(reduced, config.ocsvm, report);
      break;
    case ClassifierKind::kAnoGan:
      model.classifier = anogan_train(reduced, config.anogan, config.search, report);
      break;
  }
  return model;
}

double score_reduced(const TrainedModel& model, const FeatureVector& reduced) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, VaeModel>) return vae_score(m, reduced);
        else if constexpr (std::is_same_v<T, OcsvmModel>) return ocsvm_score(m, reduced);
        else return anogan_score(m, reduced);
      },
      model.classifier);
}

double score_raw(const TrainedModel& model, const FeatureVector& raw) {
  return score_reduced(model, apply_pca(model.pca, raw));
}

void write_model(std::ostream& out, const TrainedModel& model) {
  out.write("RDMD", 4);
  binary::write_u32(out, kModelFileVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(model.kind()));
  binary::write_string(out, model.config_echo);
  write_pca(out, model.pca);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, VaeModel>) write_vae(out, m);
        else if constexpr (std::is_same_v<T, OcsvmModel>) write_ocsvm(out, m);
        else write_anogan(out, m);
      },
      model.classifier);
}

TrainedModel read_model(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  r.expect_magic("RDMD");
  if (r.u32() != kModelFileVersion) r.corrupt("unsupported model file version");
  const auto kind = static_cast<ClassifierKind>(r.u32());
  TrainedModel model;
  model.config_echo = r.string();
  model.pca = read_pca(in);
  switch (kind) {
    case ClassifierKind::kVae: model.classifier = read_vae(in); break;
    case ClassifierKind::kOcsvm: model.classifier = read_ocsvm(in); break;
    case ClassifierKind::kAnoGan: model.classifier = read_anogan(in); break;
    default: r.corrupt("unknown classifier kind");
  }
  const Eigen::Index k = model.pca.num_components();
  const Eigen::Index expect = std::visit(
      [](const auto& m) -> Eigen::Index {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OcsvmModel>) return m.input_dim();
        else return m.input_dim;
      },
      model.classifier);
  if (expect != k) r.corrupt("classifier input does not match PCA output");
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + tmp.string());
    write_model(out, model);
    if (!out) fail(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  return read_model(in);
}

}  // namespace replaydet
