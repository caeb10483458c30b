#include "replaydet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "replaydet/error.hpp"

namespace replaydet {
namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line_number, fields) for every non-empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
    if (line.empty()) continue;
    fn(line_no, fields);
  }
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

std::string_view label_name(Label label) {
  return label == Label::kBonafide ? "bonafide" : "spoof";
}

EerResult compute_eer(std::span<const double> bonafide,
                      std::span<const double> spoof) {
  if (bonafide.empty() || spoof.empty())
    fail(ErrorCode::kSingleClassInput,
         "EER needs both labels (bonafide " + std::to_string(bonafide.size()) +
             ", spoof " + std::to_string(spoof.size()) + ")");
  for (double s : bonafide) require(std::isfinite(s), "scores must be finite");
  for (double s : spoof) require(std::isfinite(s), "scores must be finite");

  std::vector<double> b(bonafide.begin(), bonafide.end());
  std::vector<double> s(spoof.begin(), spoof.end());
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> thresholds;
  thresholds.reserve(b.size() + s.size() + 1);
  std::merge(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nb = static_cast<double>(b.size());
  const double ns = static_cast<double>(s.size());
  std::size_t ib = 0, is = 0;  // counts of scores strictly below t
  double prev_frr = 0.0, prev_far = 1.0, prev_t = thresholds.front();
  EerResult out;
  out.num_bonafide = b.size();
  out.num_spoof = s.size();
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const double t = thresholds[k];
    while (ib < b.size() && b[ib] < t) ++ib;
    while (is < s.size() && s[is] < t) ++is;
    const double frr = static_cast<double>(ib) / nb;
    const double far = static_cast<double>(s.size() - is) / ns;
    const double d = frr - far;
    if (d >= 0.0) {
      if (d == 0.0 || k == 0) {
        out.eer = d == 0.0 ? frr : 0.5 * (frr + far);
        out.threshold = t;
      } else {
        const double d_prev = prev_frr - prev_far;
        const double w = -d_prev / (d - d_prev);
        out.eer = prev_frr + w * (frr - prev_frr);
        out.threshold = std::isfinite(t) ? prev_t + w * (t - prev_t) : prev_t;
      }
      return out;
    }
    prev_frr = frr;
    prev_far = far;
    prev_t = t;
  }
  // Unreachable: FRR(+inf) = 1 and FAR(+inf) = 0.
  return out;
}

EerResult compute_eer(std::span<const LabeledScore> scores) {
  std::vector<double> b, s;
  for (const auto& r : scores) (r.label == Label::kBonafide ? b : s).push_back(r.score);
  return compute_eer(b, s);
}

std::string format_score_line(const ScoreRecord& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", r.score);
  return r.utt_id + " " + buf + "\n";
}

void write_scores(std::span<const ScoreRecord> records,
                  const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + tmp.string());
    for (const auto& r : records) {
      require(std::isfinite(r.score), "score for " + r.utt_id + " is not finite");
      require(!r.utt_id.empty() && r.utt_id.find_first_of(" \t\n") == std::string::npos,
              "utterance ids must be non-empty without whitespace");
      out << format_score_line(r);
    }
    if (!out) fail(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<ScoreRecord> parse_scores(std::string_view text) {
  std::vector<ScoreRecord> out;
  for_each_line(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 2)
      malformed(line_no, "expected 2 fields, found " + std::to_string(f.size()));
    ScoreRecord r;
    r.utt_id = std::string(f[0]);
    const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), r.score);
    if (ec != std::errc{} || ptr != f[1].data() + f[1].size() || !std::isfinite(r.score))
      malformed(line_no, "bad score '" + std::string(f[1]) + "'");
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  return parse_scores(slurp(path));
}

std::vector<KeyRecord> parse_keys(std::string_view text) {
  std::vector<KeyRecord> out;
  for_each_line(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 2)
      malformed(line_no, "expected 2 fields, found " + std::to_string(f.size()));
    KeyRecord k;
    k.utt_id = std::string(f[0]);
    if (f[1] == "bonafide") k.label = Label::kBonafide;
    else if (f[1] == "spoof") k.label = Label::kSpoof;
    else malformed(line_no, "unknown label '" + std::string(f[1]) + "'");
    out.push_back(std::move(k));
  });
  return out;
}

std::vector<KeyRecord> read_keys(const std::filesystem::path& path) {
  return parse_keys(slurp(path));
}

std::vector<LabeledScore> join_scores(std::span<const ScoreRecord> scores,
                                      std::span<const KeyRecord> keys) {
  std::unordered_map<std::string, Label> by_id;
  for (const auto& k : keys) by_id.emplace(k.utt_id, k.label);
  std::vector<LabeledScore> out;
  std::vector<std::string> missing;
  for (const auto& s : scores) {
    const auto it = by_id.find(s.utt_id);
    if (it == by_id.end()) {
      missing.push_back(s.utt_id);
      continue;
    }
    out.push_back({s.utt_id, s.score, it->second});
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    fail(ErrorCode::kMissingKey,
         std::to_string(missing.size()) + " scored ids have no key: " + list);
  }
  return out;
}

}  // namespace replaydet
