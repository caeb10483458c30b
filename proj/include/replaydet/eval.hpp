#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace replaydet {

enum class Label { kBonafide, kSpoof };

std::string_view label_name(Label label);

struct ScoreRecord {
  std::string utt_id;
  double score = 0.0;  // higher = more bonafide
};

struct LabeledScore {
  std::string utt_id;
  double score = 0.0;
  Label label = Label::kBonafide;
};

struct KeyRecord {
  std::string utt_id;
  Label label = Label::kBonafide;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t num_bonafide = 0;
  std::size_t num_spoof = 0;
};

// Thresholds are the sorted unique scores plus +inf. A score >= t is
// accepted: FRR(t) = P(bonafide < t), FAR(t) = P(spoof >= t). The EER is
// read off where FRR - FAR changes sign, interpolating linearly between the
// two neighbouring thresholds.
EerResult compute_eer(std::span<const double> bonafide,
                      std::span<const double> spoof);
EerResult compute_eer(std::span<const LabeledScore> scores);

// "utt_id score" per line, 12 significant digits.
std::string format_score_line(const ScoreRecord& record);
void write_scores(std::span<const ScoreRecord> records,
                  const std::filesystem::path& path);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);
std::vector<ScoreRecord> parse_scores(std::string_view text);

// "utt_id label" per line with label in {bonafide, spoof}.
std::vector<KeyRecord> read_keys(const std::filesystem::path& path);
std::vector<KeyRecord> parse_keys(std::string_view text);

// Attaches labels; every scored id must have a key (MissingKey lists the
// ids that do not).
std::vector<LabeledScore> join_scores(std::span<const ScoreRecord> scores,
                                      std::span<const KeyRecord> keys);

}  // namespace replaydet
