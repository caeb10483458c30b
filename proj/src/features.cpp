#include "replaydet/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"

namespace replaydet {

ResidualExtractor::ResidualExtractor(std::shared_ptr<const Vocoder> vocoder,
                                     std::shared_ptr<const Codec> codec,
                                     PipelineConfig config)
    : vocoder_(std::move(vocoder)),
      codec_(std::move(codec)),
      config_(std::move(config)) {
  require(vocoder_ != nullptr && codec_ != nullptr,
          "extractor needs a vocoder and a codec");
}

AudioClip ResidualExtractor::process(const AudioClip& clip) const {
  AudioClip out = codec_->roundtrip(vocoder_->resynthesize(clip));
  require(out.size() == clip.size(), "processing branch changed clip length");
  return out;
}

Spectrogram ResidualExtractor::spectrogram(const AudioClip& clip) const {
  Spectrogram spec = stft_log_spectrogram(clip, config_.stft);
  if (config_.scale == SpectrumScale::kLogMel)
    spec = mel_project(spec, config_.num_mel, clip.sample_rate_hz);
  return spec;
}

FeatureVector ResidualExtractor::extract(
    const AudioClip& clip, const SpectrogramTransform& transform) const {
  const auto frame_len = static_cast<std::size_t>(
      std::lround(config_.stft.frame_ms * clip.sample_rate_hz / 1000.0));
  if (clip.size() < std::max<std::size_t>(frame_len, clip.sample_rate_hz / 10))
    fail(ErrorCode::kClipTooShort,
         "feature extraction needs at least 100 ms and one frame");
  Spectrogram original = spectrogram(clip);
  Spectrogram processed = spectrogram(process(clip));
  if (transform) std::tie(original, processed) = transform(original, processed);
  FeatureVector f;
  f.values = average_then_subtract(original, processed);
  f.stage = FeatureStage::kRaw;
  return f;
}

ResidualExtractor make_extractor(const CodecConfig& codec_config,
                                 const PipelineConfig& pipeline_config) {
  return ResidualExtractor(
      std::make_shared<SourceFilterVocoder>(pipeline_config.vocoder),
      std::make_shared<ConfiguredCodec>(codec_config), pipeline_config);
}

FeatureVector extract_raw(const AudioClip& clip, const CodecConfig& codec_config,
                          const PipelineConfig& pipeline_config) {
  return make_extractor(codec_config, pipeline_config).extract(clip);
}

Eigen::VectorXd average_then_subtract(const Spectrogram& a,
                                      const Spectrogram& b) {
  require(a.values.cols() == b.values.cols(), "spectrogram widths differ");
  return temporal_mean(a) - temporal_mean(b);
}

Eigen::VectorXd subtract_then_average(const Spectrogram& a,
                                      const Spectrogram& b) {
  require(a.values.rows() == b.values.rows() &&
              a.values.cols() == b.values.cols(),
          "spectrogram shapes differ");
  return (a.values - b.values).colwise().mean().transpose();
}

PcaTransform fit_pca(const Eigen::MatrixXd& features, double energy) {
  require(features.rows() >= 2, "PCA needs at least two feature vectors");
  require(energy > 0.0 && energy <= 1.0, "energy fraction must be in (0, 1]");

  PcaTransform pca;
  pca.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - pca.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) /
                              static_cast<double>(features.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  require(solver.info() == Eigen::Success, "eigendecomposition failed");

  // Eigen returns ascending order.
  const Eigen::Index d = cov.rows();
  pca.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

  const double total = pca.eigenvalues.sum();
  Eigen::Index k = 1;
  if (total <= 1e-300) {
    pca.degenerate = true;
    pca.explained_energy_fraction = 1.0;
  } else {
    double cumulative = 0.0;
    for (k = 0; k < d;) {
      cumulative += pca.eigenvalues(k);
      ++k;
      if (cumulative / total >= energy - 1e-12) break;
    }
    pca.explained_energy_fraction = cumulative / total;
  }

  pca.components = vectors.leftCols(k);
  // Sign convention: largest-magnitude entry of each component is positive.
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg;
    pca.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (pca.components(arg, c) < 0) pca.components.col(c) *= -1.0;
  }
  return pca;
}

FeatureVector apply_pca(const PcaTransform& pca, const FeatureVector& f) {
  require(f.stage == FeatureStage::kRaw, "PCA input must be a raw feature");
  if (f.dim() != pca.input_dim())
    fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(f.dim()) + " vs PCA input " +
             std::to_string(pca.input_dim()));
  FeatureVector out;
  out.values = pca.components.transpose() * (f.values - pca.mean);
  out.stage = FeatureStage::kReduced;
  return out;
}

Eigen::MatrixXd apply_pca(const PcaTransform& pca, const Eigen::MatrixXd& rows) {
  if (rows.cols() != pca.input_dim())
    fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(rows.cols()) + " vs PCA input " +
             std::to_string(pca.input_dim()));
  return (rows.rowwise() - pca.mean.transpose()) * pca.components;
}

void write_pca(std::ostream& out, const PcaTransform& pca) {
  binary::write_vector(out, pca.mean);
  binary::write_matrix(out, pca.components);
  binary::write_vector(out, pca.eigenvalues);
  binary::write_f64(out, pca.explained_energy_fraction);
  binary::write_u32(out, pca.degenerate ? 1u : 0u);
}

PcaTransform read_pca(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  PcaTransform pca;
  pca.mean = r.vector();
  pca.components = r.matrix();
  pca.eigenvalues = r.vector();
  pca.explained_energy_fraction = r.f64();
  pca.degenerate = r.u32() != 0;
  if (pca.components.rows() != pca.mean.size())
    r.corrupt("PCA components do not match mean dimension");
  return pca;
}

void write_feature_table(const FeatureTable& table,
                         const std::filesystem::path& path) {
  require(static_cast<Eigen::Index>(table.ids.size()) == table.rows.rows(),
          "feature ids and rows disagree in count");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + tmp.string());
    out.write("RDFT", 4);
    binary::write_u32(out, kFeatureCacheVersion);
    binary::write_u32(out, static_cast<std::uint32_t>(table.rows.cols()));
    binary::write_u32(out, static_cast<std::uint32_t>(table.rows.rows()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        rm = table.rows;
    binary::write_f64_array(out, rm.data(), static_cast<std::size_t>(rm.size()));
    for (const auto& id : table.ids) binary::write_string(out, id);
    if (!out) fail(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  binary::Reader r(in, ErrorCode::kCorruptCache);
  r.expect_magic("RDFT");
  if (r.u32() != kFeatureCacheVersion) r.corrupt("unsupported cache version");
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  if (static_cast<std::uint64_t>(dim) * count > (1ull << 31))
    r.corrupt("cache dimensions out of range");
  FeatureTable table;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      count, dim);
  r.bytes(rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(double));
  table.rows = rm;
  table.ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) table.ids.push_back(r.string());
  return table;
}

}  // namespace replaydet
