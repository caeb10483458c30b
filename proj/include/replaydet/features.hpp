#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "replaydet/codec.hpp"
#include "replaydet/dsp.hpp"
#include "replaydet/vocoder.hpp"

namespace replaydet {

enum class FeatureStage { kRaw, kReduced };

struct FeatureVector {
  Eigen::VectorXd values;
  FeatureStage stage = FeatureStage::kRaw;

  Eigen::Index dim() const { return values.size(); }
};

struct PipelineConfig {
  StftConfig stft;
  SpectrumScale scale = SpectrumScale::kLogLinear;
  int num_mel = 80;
  VocoderConfig vocoder;
};

// Applied identically to both branch spectrograms before averaging
// (SpecAugment variants).
using SpectrogramTransform = std::function<std::pair<Spectrogram, Spectrogram>(
    const Spectrogram& original, const Spectrogram& processed)>;

// Residual between an utterance and its vocoded + codec-roundtripped copy,
// averaged over time.
class ResidualExtractor {
 public:
  ResidualExtractor(std::shared_ptr<const Vocoder> vocoder,
                    std::shared_ptr<const Codec> codec, PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  // codec(vocoder(clip)); same length as the input.
  AudioClip process(const AudioClip& clip) const;

  Spectrogram spectrogram(const AudioClip& clip) const;

  FeatureVector extract(const AudioClip& clip,
                        const SpectrogramTransform& transform = {}) const;

 private:
  std::shared_ptr<const Vocoder> vocoder_;
  std::shared_ptr<const Codec> codec_;
  PipelineConfig config_;
};

// Builds the default chain: source-filter vocoder then the configured codec.
ResidualExtractor make_extractor(const CodecConfig& codec_config,
                                 const PipelineConfig& pipeline_config);

FeatureVector extract_raw(const AudioClip& clip, const CodecConfig& codec_config,
                          const PipelineConfig& pipeline_config);

// mean_t(a) - mean_t(b)
Eigen::VectorXd average_then_subtract(const Spectrogram& a, const Spectrogram& b);
// mean_t(a - b)
Eigen::VectorXd subtract_then_average(const Spectrogram& a, const Spectrogram& b);

struct PcaTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // dim x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // all eigenvalues, descending
  double explained_energy_fraction = 0.0;
  bool degenerate = false;  // zero total variance; k forced to 1

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index num_components() const { return components.cols(); }
  double total_variance() const { return eigenvalues.sum(); }
};

// Rows of `features` are samples. Keeps the fewest leading eigenvectors of
// the sample covariance whose eigenvalues reach `energy` of the total.
PcaTransform fit_pca(const Eigen::MatrixXd& features, double energy = 0.98);

FeatureVector apply_pca(const PcaTransform& pca, const FeatureVector& f);
Eigen::MatrixXd apply_pca(const PcaTransform& pca, const Eigen::MatrixXd& rows);

void write_pca(std::ostream& out, const PcaTransform& pca);
PcaTransform read_pca(std::istream& in);

// Utterance-level features with their ids, in the "RDFT" cache layout:
// magic, version u32, dim u32, count u32, row-major f64 matrix, then one
// length-prefixed id per row.
struct FeatureTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd rows;  // count x dim
};

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

void write_feature_table(const FeatureTable& table,
                         const std::filesystem::path& path);
FeatureTable read_feature_table(const std::filesystem::path& path);

}  // namespace replaydet
