#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "replaydet/audio_io.hpp"
#include "replaydet/eval.hpp"

namespace replaydet {

struct BonafideConfig {
  double f0_min_hz = 80.0;
  double f0_max_hz = 300.0;
  double peak = 0.5;
  // Aspiration RMS relative to the voiced part, drawn per utterance. Off by
  // default; 0.03-0.08 gives a speech-like -25 to -30 dB above 4 kHz.
  double aspiration_min = 0.0;
  double aspiration_max = 0.0;
};

// Formant-synthesized vowel sequence: a glottal pulse train with a gliding
// F0 through three cascaded resonators whose frequencies move between
// randomly drawn vowel targets, with optional aspiration noise.
// Deterministic per seed.
AudioClip generate_bonafide(std::uint64_t seed, double duration_s,
                            const BonafideConfig& config = {});

struct ReplayChannelConfig {
  double rir_t60_s = 0.3;          // 0 = direct path only
  double speaker_nonlinearity = 0.1;  // cubic soft-clip coefficient
  double mic_bandlimit_hz = 5000.0;   // >= Nyquist disables the low-pass
  double noise_snr_db = 30.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ReplayChannelConfig&) const = default;
};

// Parameters drawn from T60 [0.1, 0.8] s, nonlinearity [0, 0.3], band
// limit [3400, 7000] Hz and SNR [15, 40] dB.
ReplayChannelConfig random_replay_channel(std::uint64_t seed);

// Exponentially decaying noise tail behind a unit direct path.
std::vector<double> make_rir(double t60_s, int sample_rate_hz,
                             std::uint64_t seed, std::size_t max_len);

// soft-clip -> RIR -> low-pass -> additive noise -> restore input peak.
AudioClip apply_replay_channel(const AudioClip& clip,
                               const ReplayChannelConfig& config);

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path path;  // resolved against the manifest directory
  Label label = Label::kBonafide;
};

// Tab-separated "utt_id  path  label"; relative paths resolve against the
// manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

struct CorpusConfig {
  int n_bonafide = 20;
  int n_spoof = 20;
  double train_fraction = 0.5;
  double min_duration_s = 1.0;
  double max_duration_s = 2.0;
  int channels_per_split = 8;
  bool augment_sources = true;  // also write noise/ and rir/ directories
  std::uint64_t seed = 0;
};

struct CorpusResult {
  std::filesystem::path manifest;        // all utterances
  std::filesystem::path train_manifest;
  std::filesystem::path eval_manifest;
  std::filesystem::path eval_keys;
  std::filesystem::path noise_dir;  // empty unless augment_sources
  std::filesystem::path rir_dir;
  std::vector<ReplayChannelConfig> train_channels;
  std::vector<ReplayChannelConfig> eval_channels;
};

// Stand-ins for recorded noise and impulse-response collections: colored
// noise clips in noise/ and exponential-decay impulse responses in rir/.
void write_augment_sources(const std::filesystem::path& out_dir,
                           std::uint64_t seed, int count = 4);

// Writes wav/<id>.wav plus manifest.tsv, train.tsv, eval.tsv and
// eval_keys.txt under out_dir. Spoofed utterances are independent bonafide
// renditions passed through a channel from their split's pool; the train
// and eval pools are disjoint.
CorpusResult build_corpus(const CorpusConfig& config,
                          const std::filesystem::path& out_dir);
CorpusResult build_corpus(int n_bonafide, int n_spoof,
                          const std::filesystem::path& out_dir,
                          std::uint64_t seed);

}  // namespace replaydet
