#include <doctest.h>

#include <fstream>
#include <sstream>

#include "replaydet/classifiers.hpp"
#include "replaydet/error.hpp"
#include "support.hpp"

using namespace replaydet;

namespace {

Eigen::MatrixXd blob(int n, int d, std::uint32_t seed, double sd = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0, sd);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = nd(gen);
  return m;
}

ClassifierConfig quick(ClassifierKind kind, std::uint64_t seed) {
  ClassifierConfig c;
  c.kind = kind;
  c.vae.epochs = 30;
  c.vae.seed = seed;
  c.anogan.epochs = 10;
  c.anogan.z_dim = 8;
  c.anogan.seed = seed;
  c.search.search_iters = 20;
  c.search.restarts = 1;
  return c;
}

}  // namespace

TEST_CASE("kind names parse back") {
  for (auto k : {ClassifierKind::kVae, ClassifierKind::kOcsvm, ClassifierKind::kAnoGan})
    CHECK(parse_classifier_kind(classifier_kind_name(k)) == k);
  CHECK(classifier_kind_name(ClassifierKind::kOcsvm) == "ocsvm");
  CHECK_FALSE(parse_classifier_kind("gmm").has_value());
}

TEST_CASE("property: every scorer ranks an in-distribution point above a 20 sigma outlier") {
  // 2-D toy data embedded in 2 raw dims; PCA keeps both.
  for (auto kind : {ClassifierKind::kVae, ClassifierKind::kOcsvm, ClassifierKind::kAnoGan}) {
    int ok = 0;
    const int trials = kind == ClassifierKind::kAnoGan ? 20 : 100;
    for (int t = 0; t < trials; ++t) {
      const auto data = blob(40, 2, 100 + t);
      const auto model = train_model(data, 1.0, quick(kind, t));
      const FeatureVector inside{data.row(t % 40).transpose(), FeatureStage::kRaw};
      FeatureVector outside{data.row(t % 40).transpose(), FeatureStage::kRaw};
      outside.values(0) += 20.0;
      ok += score_raw(model, inside) > score_raw(model, outside);
    }
    INFO(classifier_kind_name(kind));
    CHECK(ok >= 0.95 * trials);
  }
}

TEST_CASE("model files round-trip for every kind and reproduce scores") {
  auto dir = oracle::scratch_dir("classifiers_roundtrip");
  const auto data = blob(40, 6, 7);
  for (auto kind : {ClassifierKind::kVae, ClassifierKind::kOcsvm, ClassifierKind::kAnoGan}) {
    auto model = train_model(data, 0.98, quick(kind, 3));
    model.config_echo = "classifier.kind = " + std::string(classifier_kind_name(kind));
    const auto path = dir / (std::string(classifier_kind_name(kind)) + ".rdmd");
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back.kind() == kind);
    CHECK(back.config_echo == model.config_echo);
    CHECK(back.pca.components == model.pca.components);
    const FeatureVector f{data.row(5).transpose(), FeatureStage::kRaw};
    CHECK(score_raw(back, f) == score_raw(model, f));
    // Re-saving gives the same bytes.
    save_model(back, dir / "again.rdmd");
    std::ifstream a(path, std::ios::binary), b(dir / "again.rdmd", std::ios::binary);
    CHECK(std::string(std::istreambuf_iterator<char>(a), {}) ==
          std::string(std::istreambuf_iterator<char>(b), {}));
  }
}

TEST_CASE("model header starts with RDMD, version and kind") {
  const auto model = train_model(blob(20, 3, 8), 0.98, quick(ClassifierKind::kOcsvm, 1));
  std::stringstream ss;
  write_model(ss, model);
  const std::string s = ss.str();
  CHECK(s.substr(0, 4) == "RDMD");
  CHECK(static_cast<unsigned char>(s[4]) == 1);
  CHECK(static_cast<unsigned char>(s[8]) == 2);
}

TEST_CASE("corrupt or truncated model files are rejected") {
  auto dir = oracle::scratch_dir("classifiers_corrupt");
  const auto model = train_model(blob(20, 3, 9), 0.98, quick(ClassifierKind::kOcsvm, 1));
  save_model(model, dir / "m.rdmd");
  std::filesystem::resize_file(dir / "m.rdmd", 30);
  try {
    load_model(dir / "m.rdmd");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptModel);
  }
  std::ofstream(dir / "bad.rdmd") << "NOPE and then some";
  try {
    load_model(dir / "bad.rdmd");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptModel);
  }
}

TEST_CASE("raw and reduced scoring agree") {
  const auto data = blob(30, 5, 10);
  const auto model = train_model(data, 0.98, quick(ClassifierKind::kOcsvm, 1));
  const FeatureVector raw{data.row(2).transpose(), FeatureStage::kRaw};
  CHECK(score_raw(model, raw) == score_reduced(model, apply_pca(model.pca, raw)));
}
