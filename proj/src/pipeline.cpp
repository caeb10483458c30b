#include "replaydet/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "replaydet/error.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::kConfig,
       "invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename T, typename Member>
Field number(const char* key, Member member) {
  return {key,
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(std::invoke(member, c));
            else return std::to_string(std::invoke(member, c));
          },
          [member, key](ExperimentConfig& c, std::string_view v) {
            std::invoke(member, c) = parse_number<T>(key, v);
          }};
}

template <typename Member>
Field text(const char* key, Member member) {
  return {key, [member](const ExperimentConfig& c) { return std::invoke(member, c); },
          [member](ExperimentConfig& c, std::string_view v) {
            std::invoke(member, c) = std::string(v);
          }};
}

// Accessor helpers for nested members.
#define RD_NUM(T, key, expr) \
  number<T>(key, [](auto& c) -> auto& { return c.expr; })
#define RD_TEXT(key, expr) text(key, [](auto& c) -> auto& { return c.expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(RD_NUM(int, "codec.bitrate_bps", codec.bitrate_bps));
    f.push_back({"codec.mode",
                 [](const ExperimentConfig& c) -> std::string {
                   return c.codec.mode == CodecMode::kBuiltinMdct ? "builtin" : "external";
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   if (v == "builtin") c.codec.mode = CodecMode::kBuiltinMdct;
                   else if (v == "external") c.codec.mode = CodecMode::kExternalCommand;
                   else bad_value("codec.mode", v);
                 }});
    f.push_back(RD_TEXT("codec.encode_command", codec.encode_command));
    f.push_back(RD_TEXT("codec.decode_command", codec.decode_command));
    f.push_back(RD_NUM(double, "spectrogram.frame_ms", features.stft.frame_ms));
    f.push_back(RD_NUM(double, "spectrogram.hop_ms", features.stft.hop_ms));
    f.push_back(RD_NUM(int, "spectrogram.fft", features.stft.fft_size));
    f.push_back({"spectrogram.scale",
                 [](const ExperimentConfig& c) -> std::string {
                   return c.features.scale == SpectrumScale::kLogLinear ? "loglinear" : "logmel";
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   if (v == "loglinear") c.features.scale = SpectrumScale::kLogLinear;
                   else if (v == "logmel") c.features.scale = SpectrumScale::kLogMel;
                   else bad_value("spectrogram.scale", v);
                 }});
    f.push_back(RD_NUM(int, "spectrogram.num_mel", features.num_mel));
    f.push_back(RD_NUM(double, "vocoder.frame_ms", features.vocoder.frame_ms));
    f.push_back(RD_NUM(double, "vocoder.hop_ms", features.vocoder.hop_ms));
    f.push_back(RD_NUM(double, "vocoder.f0_min_hz", features.vocoder.f0_min_hz));
    f.push_back(RD_NUM(double, "vocoder.f0_max_hz", features.vocoder.f0_max_hz));
    f.push_back(RD_NUM(double, "vocoder.voicing_threshold", features.vocoder.voicing_threshold));
    f.push_back(RD_NUM(int, "vocoder.num_cepstra", features.vocoder.num_cepstra));
    f.push_back(RD_NUM(int, "vocoder.fft", features.vocoder.fft_size));
    f.push_back(RD_TEXT("vocoder.command", vocoder_command));
    f.push_back(RD_NUM(double, "pca_energy", pca_energy));
    f.push_back({"classifier.kind",
                 [](const ExperimentConfig& c) {
                   return std::string(classifier_kind_name(c.classifier.kind));
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto k = parse_classifier_kind(v);
                   if (!k) bad_value("classifier.kind", v);
                   c.classifier.kind = *k;
                 }});
    f.push_back(RD_NUM(int, "vae.epochs", classifier.vae.epochs));
    f.push_back(RD_NUM(double, "vae.lr", classifier.vae.lr));
    f.push_back(RD_NUM(int, "vae.batch", classifier.vae.batch));
    f.push_back(RD_NUM(int, "vae.latent_dim", classifier.vae.latent_dim));
    f.push_back(RD_NUM(int, "vae.num_samples", classifier.vae.num_samples));
    f.push_back(RD_NUM(double, "ocsvm.nu", classifier.ocsvm.nu));
    f.push_back(RD_NUM(double, "ocsvm.tol", classifier.ocsvm.tol));
    f.push_back({"ocsvm.gamma",
                 [](const ExperimentConfig& c) {
                   return c.classifier.ocsvm.gamma > 0.0 ? fmt(c.classifier.ocsvm.gamma)
                                                         : std::string("scale");
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   c.classifier.ocsvm.gamma =
                       v == "scale" ? 0.0 : parse_number<double>("ocsvm.gamma", v);
                 }});
    f.push_back(RD_NUM(long, "ocsvm.max_iter", classifier.ocsvm.max_iter));
    f.push_back(RD_NUM(int, "anogan.epochs", classifier.anogan.epochs));
    f.push_back(RD_NUM(double, "anogan.lr", classifier.anogan.lr));
    f.push_back(RD_NUM(int, "anogan.batch", classifier.anogan.batch));
    f.push_back(RD_NUM(int, "anogan.z_dim", classifier.anogan.z_dim));
    f.push_back(RD_NUM(int, "anogan.search_iters", classifier.search.search_iters));
    f.push_back(RD_NUM(double, "anogan.search_lr", classifier.search.search_lr));
    f.push_back(RD_NUM(int, "anogan.restarts", classifier.search.restarts));
    f.push_back({"augment.kinds",
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (auto k : c.augmentations) {
                     if (!s.empty()) s += ',';
                     s += augment_kind_name(k);
                   }
                   return s.empty() ? std::string("none") : s;
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   c.augmentations.clear();
                   if (v.empty() || v == "none") return;
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     const auto comma = v.find(',', start);
                     const auto name = v.substr(start, comma == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : comma - start);
                     const auto k = parse_augment_kind(name);
                     if (!k) bad_value("augment.kinds", name);
                     if (std::find(c.augmentations.begin(), c.augmentations.end(), *k) ==
                         c.augmentations.end())
                       c.augmentations.push_back(*k);
                     if (comma == std::string_view::npos) break;
                     start = comma + 1;
                   }
                 }});
    f.push_back(RD_NUM(int, "augment.mask_max_len", augment.mask_max_len));
    f.push_back(RD_NUM(double, "augment.mask_max_prop", augment.mask_max_prop));
    f.push_back(RD_NUM(int, "augment.mask_count", augment.mask_count));
    f.push_back(RD_NUM(double, "augment.snr_db", augment.snr_db));
    f.push_back(RD_NUM(double, "augment.speed_lo", augment.speed_lo));
    f.push_back(RD_NUM(double, "augment.speed_hi", augment.speed_hi));
    f.push_back(RD_NUM(double, "augment.emph_coeff", augment.emph_coeff));
    f.push_back(RD_TEXT("augment.noise_dir", noise_dir));
    f.push_back(RD_TEXT("augment.rir_dir", rir_dir));
    f.push_back(RD_NUM(std::uint64_t, "seed", seed));
    f.push_back(RD_TEXT("paths.train_manifest", train_manifest));
    f.push_back(RD_TEXT("paths.eval_manifest", eval_manifest));
    f.push_back(RD_TEXT("paths.workdir", workdir));
    return f;
  }();
  return table;
}

#undef RD_NUM
#undef RD_TEXT

const Field& field(std::string_view key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  fail(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool affects_features(std::string_view key) {
  for (std::string_view prefix : {"codec.", "spectrogram.", "vocoder.", "augment."})
    if (key.substr(0, prefix.size()) == prefix) return true;
  return key == "seed";
}

// ---- hashing -------------------------------------------------------------

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      fail(ErrorCode::kIoError, "SHA-256 unavailable");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(const void* data, std::size_t n) {
    EVP_DigestUpdate(ctx_, data, n);
    return *this;
  }
  Sha256& update(std::string_view s) {
    // Length prefix keeps concatenations unambiguous.
    const std::uint64_t n = s.size();
    update(&n, sizeof n);
    return update(s.data(), s.size());
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

// ---- augmentation sources --------------------------------------------------

struct SourceSet {
  std::vector<AudioClip> clips;
  std::string digest;
};

SourceSet load_sources(const std::string& dir, const char* what) {
  SourceSet set;
  if (dir.empty()) return set;
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  if (ec) fail(ErrorCode::kFileNotFound, std::string(what) + " directory " + dir);
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) {
    const auto bytes = read_bytes(f);
    h.update(bytes.data(), bytes.size());
    set.clips.push_back(parse_wav(bytes));
  }
  set.digest = h.hex();
  return set;
}

struct Variant {
  std::string name;  // "" for the original
  std::optional<AugmentKind> kind;
};

std::uint64_t seed_from_hex(const std::string& hex) {
  std::uint64_t v = 0;
  std::from_chars(hex.data(), hex.data() + 16, v, 16);
  return v;
}

FeatureVector extract_variant(const ResidualExtractor& extractor,
                              const AudioClip& clip, const Variant& variant,
                              const ExperimentConfig& config, std::uint64_t seed,
                              const SourceSet& noise, const SourceSet& rirs) {
  if (!variant.kind) return extractor.extract(clip);
  AugmentSpec spec = config.augment;
  spec.kind = *variant.kind;
  spec.seed = seed;
  Rng pick(mix_seed(seed, 0x9C));
  switch (spec.kind) {
    case AugmentKind::kFreqMask:
    case AugmentKind::kTimeMask:
      return extractor.extract(clip, [&](const Spectrogram& a, const Spectrogram& b) {
        Spectrogram ma = a, mb = b;
        for (int i = 0; i < spec.mask_count; ++i) {
          const auto s = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
          const MaskDraw d = spec.kind == AugmentKind::kFreqMask
                                 ? draw_freq_mask(ma, std::min<int>(spec.mask_max_len,
                                                                    static_cast<int>(ma.num_bins())), s)
                                 : draw_time_mask(ma, spec.mask_max_len, spec.mask_max_prop, s);
          if (spec.kind == AugmentKind::kFreqMask) {
            ma = apply_freq_mask(ma, d);
            mb = apply_freq_mask(mb, d);
          } else {
            ma = apply_time_mask(ma, d);
            mb = apply_time_mask(mb, d);
          }
        }
        return std::make_pair(ma, mb);
      });
    case AugmentKind::kAddNoise:
      if (noise.clips.empty())
        fail(ErrorCode::kConfig, "add_noise needs augment.noise_dir with WAV files");
      return extractor.extract(add_noise(clip, noise.clips[pick.below(noise.clips.size())],
                                         spec.snr_db, spec.seed));
    case AugmentKind::kAddReverb:
      if (rirs.clips.empty())
        fail(ErrorCode::kConfig, "add_reverb needs augment.rir_dir with WAV files");
      return extractor.extract(add_reverb(clip, rirs.clips[pick.below(rirs.clips.size())]));
    case AugmentKind::kAdjustSpeed:
      return extractor.extract(adjust_speed(clip, spec.speed_lo, spec.speed_hi, spec.seed));
    case AugmentKind::kPreEmphasis:
      return extractor.extract(pre_emphasis(clip, spec.emph_coeff));
    case AugmentKind::kDeEmphasis:
      return extractor.extract(de_emphasis(clip, spec.emph_coeff));
  }
  return extractor.extract(clip);
}

ResidualExtractor build_extractor(const ExperimentConfig& config) {
  PipelineConfig pc = config.features;
  pc.vocoder.seed = config.seed;
  std::shared_ptr<const Vocoder> vocoder;
  if (config.vocoder_command.empty())
    vocoder = std::make_shared<SourceFilterVocoder>(pc.vocoder);
  else
    vocoder = std::make_shared<ExternalVocoder>(config.vocoder_command);
  return ResidualExtractor(vocoder, std::make_shared<ConfiguredCodec>(config.codec), pc);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// thrown by any call is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string base_id(const std::string& id) { return id.substr(0, id.find('#')); }

}  // namespace

// ---- config ----------------------------------------------------------------

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  field(key).set(*this, trim(value));
}

std::string ExperimentConfig::get(std::string_view key) const {
  return field(key).get(*this);
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

std::string ExperimentConfig::feature_fingerprint() const {
  std::string out;
  for (const auto& f : fields())
    if (affects_features(f.key)) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  codec.validate();
  augment.validate();
  if (!(pca_energy > 0.0 && pca_energy <= 1.0))
    fail(ErrorCode::kConfig, "pca_energy must be in (0, 1]");
  if (features.stft.frame_ms <= 0 || features.stft.hop_ms <= 0 || features.stft.fft_size < 2)
    fail(ErrorCode::kConfig, "spectrogram frame, hop and fft must be positive");
  if (classifier.ocsvm.nu <= 0.0 || classifier.ocsvm.nu > 1.0)
    fail(ErrorCode::kConfig, "ocsvm.nu must be in (0, 1]");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kConfig, "override '" + o + "' is not key=value");
    config.set(trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
}

std::filesystem::path resolve_workdir(const std::string& flag_value,
                                      const ExperimentConfig& config) {
  if (!flag_value.empty()) return flag_value;
  if (!config.workdir.empty()) return config.workdir;
  if (const char* env = std::getenv("REPLAYDET_WORKDIR"); env && *env) return env;
  return "replaydet_work";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return 1;
    case ErrorCode::kNonFiniteLoss: return 3;
    default: return 2;
  }
}

// ---- extraction ------------------------------------------------------------

std::filesystem::path feature_table_path(const std::filesystem::path& workdir,
                                         std::string_view split) {
  return workdir / "features" / (std::string(split) + ".rdft");
}

ExtractStats extract_split(const ExperimentConfig& config,
                           const std::filesystem::path& manifest, bool training,
                           const std::filesystem::path& workdir,
                           const std::filesystem::path& table_path,
                           const RunOptions& options) {
  config.validate();
  const auto entries = read_manifest(manifest);
  const ResidualExtractor extractor = build_extractor(config);

  std::vector<Variant> variants{{"", std::nullopt}};
  SourceSet noise, rirs;
  if (training) {
    for (auto k : config.augmentations)
      variants.push_back({std::string(augment_kind_name(k)), k});
    const auto needs = [&](AugmentKind k) {
      return std::find(config.augmentations.begin(), config.augmentations.end(), k) !=
             config.augmentations.end();
    };
    if (needs(AugmentKind::kAddNoise)) noise = load_sources(config.noise_dir, "noise");
    if (needs(AugmentKind::kAddReverb)) rirs = load_sources(config.rir_dir, "RIR");
  }
  const std::string fingerprint =
      config.feature_fingerprint() + "noise=" + noise.digest + "\nrir=" + rirs.digest + "\n";

  const auto cache_dir = workdir / "cache";
  std::filesystem::create_directories(cache_dir);
  std::filesystem::create_directories(table_path.parent_path());

  struct Outcome {
    std::vector<Eigen::VectorXd> rows;  // one per variant
    std::size_t hits = 0;
    std::string error;
  };
  std::vector<Outcome> outcomes(entries.size());
  std::mutex log_mutex;

  parallel_for(entries.size(), options.jobs, [&](std::size_t i) {
    Outcome& out = outcomes[i];
    try {
      const auto bytes = read_bytes(entries[i].path);
      const std::string audio_hash = Sha256().update(bytes.data(), bytes.size()).hex();
      std::optional<AudioClip> clip;
      for (const auto& v : variants) {
        const std::string key =
            Sha256().update(audio_hash).update(fingerprint).update(v.name).hex();
        const auto cache_file = cache_dir / (key + ".rdft");
        if (std::filesystem::exists(cache_file)) {
          try {
            const FeatureTable t = read_feature_table(cache_file);
            if (t.rows.rows() == 1) {
              out.rows.push_back(t.rows.row(0).transpose());
              ++out.hits;
              continue;
            }
          } catch (const Error&) {
            // Unreadable entry: recompute and overwrite.
          }
        }
        if (!clip) clip = parse_wav(bytes);
        const std::uint64_t seed =
            mix_seed(mix_seed(config.seed, seed_from_hex(audio_hash)),
                     seed_from_hex(Sha256().update(v.name).hex()));
        const FeatureVector f =
            extract_variant(extractor, *clip, v, config, seed, noise, rirs);
        FeatureTable t;
        t.ids = {key};
        t.rows = f.values.transpose();
        write_feature_table(t, cache_file);
        out.rows.push_back(f.values);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfig) throw;
      out.rows.clear();
      out.error = e.what();
    }
    if (options.log && !out.error.empty()) {
      std::lock_guard lock(log_mutex);
      *options.log << "skip " << entries[i].utt_id << ": " << out.error << "\n";
    }
  });

  ExtractStats stats;
  stats.utterances = entries.size();
  FeatureTable table;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (!o.error.empty()) {
      ++stats.failures;
      continue;
    }
    stats.cache_hits += o.hits;
    stats.computed += o.rows.size() - o.hits;
    for (std::size_t v = 0; v < o.rows.size(); ++v) {
      table.ids.push_back(v == 0 ? entries[i].utt_id
                                 : entries[i].utt_id + "#" + variants[v].name);
      rows.push_back(o.rows[v]);
    }
  }
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().size();
  table.rows.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    table.rows.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  write_feature_table(table, table_path);
  stats.features = rows.size();
  if (options.log)
    *options.log << manifest.filename().string() << ": " << stats.features
                 << " features (" << stats.cache_hits << " cached, " << stats.computed
                 << " computed, " << stats.failures << " utterances skipped)\n";
  return stats;
}

ExtractSummary cmd_extract(const ExperimentConfig& config,
                           const std::filesystem::path& workdir,
                           const RunOptions& options) {
  if (config.train_manifest.empty() && config.eval_manifest.empty())
    fail(ErrorCode::kConfig, "set paths.train_manifest and/or paths.eval_manifest");
  ExtractSummary s;
  if (!config.train_manifest.empty())
    s.train = extract_split(config, config.train_manifest, true, workdir,
                            feature_table_path(workdir, "train"), options);
  if (!config.eval_manifest.empty())
    s.eval = extract_split(config, config.eval_manifest, false, workdir,
                           feature_table_path(workdir, "eval"), options);
  return s;
}

// ---- training / scoring ----------------------------------------------------

TrainedModel cmd_train(const ExperimentConfig& config,
                       const std::filesystem::path& workdir,
                       const std::filesystem::path& model_path,
                       const RunOptions& options, TrainingReport* report) {
  config.validate();
  if (config.train_manifest.empty())
    fail(ErrorCode::kConfig, "paths.train_manifest is required for training");
  std::unordered_map<std::string, Label> labels;
  for (const auto& e : read_manifest(config.train_manifest)) labels[e.utt_id] = e.label;

  const FeatureTable table = read_feature_table(feature_table_path(workdir, "train"));
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto it = labels.find(base_id(table.ids[i]));
    if (it != labels.end() && it->second == Label::kBonafide)
      keep.push_back(static_cast<Eigen::Index>(i));
  }
  if (keep.empty()) fail(ErrorCode::kPreconditionViolation, "no bonafide training rows");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), table.rows.cols());
  for (std::size_t k = 0; k < keep.size(); ++k)
    rows.row(static_cast<Eigen::Index>(k)) = table.rows.row(keep[k]);

  ClassifierConfig cc = config.classifier;
  cc.vae.seed = cc.anogan.seed = config.seed;
  TrainingReport local;
  TrainedModel model = train_model(rows, config.pca_energy, cc, &local);
  model.config_echo = config.to_text();
  if (!model_path.parent_path().empty())
    std::filesystem::create_directories(model_path.parent_path());
  save_model(model, model_path);
  if (options.log) {
    *options.log << "trained " << classifier_kind_name(cc.kind) << " on " << keep.size()
                 << " bonafide rows, " << model.pca.num_components()
                 << " PCA components (" << fmt(model.pca.explained_energy_fraction)
                 << " energy)\n";
    for (const auto& w : local.warnings) *options.log << "warning: " << w << "\n";
  }
  if (report) *report = std::move(local);
  return model;
}

std::vector<ScoreRecord> cmd_score(const ExperimentConfig& config,
                                   const std::filesystem::path& workdir,
                                   const std::filesystem::path& model_path,
                                   const std::filesystem::path& scores_path,
                                   const RunOptions& options) {
  const TrainedModel model = load_model(model_path);
  const FeatureTable table = read_feature_table(feature_table_path(workdir, "eval"));
  (void)config;
  std::vector<ScoreRecord> records(table.ids.size());
  parallel_for(table.ids.size(), options.jobs, [&](std::size_t i) {
    FeatureVector f;
    f.values = table.rows.row(static_cast<Eigen::Index>(i)).transpose();
    records[i] = {table.ids[i], score_raw(model, f)};
  });
  if (!scores_path.parent_path().empty())
    std::filesystem::create_directories(scores_path.parent_path());
  write_scores(records, scores_path);
  if (options.log) *options.log << "scored " << records.size() << " utterances\n";
  return records;
}

EerResult cmd_eval(const std::filesystem::path& scores_path,
                   const std::filesystem::path& keys_path, std::ostream& report) {
  const auto scores = read_scores(scores_path);
  const auto keys = read_keys(keys_path);
  const auto labeled = join_scores(scores, keys);
  const EerResult r = compute_eer(labeled);
  char buf[160];
  std::snprintf(buf, sizeof buf, "EER: %.2f%%\nthreshold: %.12g\nbonafide: %zu\nspoof: %zu\n",
                100.0 * r.eer, r.threshold, r.num_bonafide, r.num_spoof);
  report << buf;
  return r;
}

std::vector<KeyRecord> keys_from_manifest(const std::filesystem::path& manifest) {
  std::vector<KeyRecord> keys;
  for (const auto& e : read_manifest(manifest)) keys.push_back({e.utt_id, e.label});
  return keys;
}

void write_keys(const std::vector<KeyRecord>& keys, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot open " + path.string());
  for (const auto& k : keys) out << k.utt_id << ' ' << label_name(k.label) << '\n';
}

}  // namespace replaydet
