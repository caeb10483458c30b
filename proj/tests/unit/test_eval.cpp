#include <doctest.h>

#include <fstream>

#include "replaydet/error.hpp"
#include "replaydet/eval.hpp"
#include "support.hpp"

using namespace replaydet;

namespace {

struct Sets {
  std::vector<double> bona, spoof;
};

// Random score sets, sometimes with heavy ties from coarse rounding.
Sets random_sets(std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> size(1, 250);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> shift(-1, 3);
  const bool coarse = seed % 3 == 0;
  const double mu = shift(gen);
  Sets s;
  const int nb = size(gen), ns = size(gen);
  for (int i = 0; i < nb; ++i) s.bona.push_back(nd(gen) + mu);
  for (int i = 0; i < ns; ++i) s.spoof.push_back(nd(gen));
  if (coarse)
    for (auto* v : {&s.bona, &s.spoof})
      for (double& x : *v) x = std::round(x * 4) / 4;
  return s;
}

template <typename Fn>
std::vector<double> mapped(const std::vector<double>& v, Fn f) {
  std::vector<double> out;
  for (double x : v) out.push_back(f(x));
  return out;
}

}  // namespace

TEST_CASE("perfect separation gives zero") {
  const std::vector<double> b = {5, 6, 7}, s = {1, 2, 3};
  CHECK(compute_eer(b, s).eer == 0.0);
}

TEST_CASE("fully inverted scores give one") {
  const std::vector<double> b = {1, 2}, s = {5, 6};
  CHECK(compute_eer(b, s).eer == 1.0);
}

TEST_CASE("interleaved four-by-four example crosses at 1.5 with EER one half") {
  // FRR(1.5) = |{1, 0}| / 4, FAR(1.5) = |{2.5, 1.5}| / 4.
  const std::vector<double> b = {3, 2, 1, 0}, s = {2.5, 1.5, 0.5, -0.5};
  const auto r = compute_eer(b, s);
  CHECK(r.eer == 0.5);
  CHECK(r.threshold == 1.5);
  const auto o = oracle::brute_force_eer(b, s);
  CHECK(o.eer == r.eer);
}

TEST_CASE("a quarter when one score of each class is on the wrong side") {
  const std::vector<double> b = {3, 2, 1, -1}, s = {2.5, 0, -2, -3};
  // t = 1: FRR = 1/4 (-1), FAR = 1/4 (2.5).
  const auto r = compute_eer(b, s);
  CHECK(r.eer == doctest::Approx(0.25));
}

TEST_CASE("matches the brute-force enumeration on random sets") {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    const auto s = random_sets(seed);
    const auto r = compute_eer(s.bona, s.spoof);
    const auto o = oracle::brute_force_eer(s.bona, s.spoof);
    INFO("seed " << seed);
    CHECK(std::abs(r.eer - o.eer) <= 1e-12);
    CHECK(std::abs(r.threshold - o.threshold) <= 1e-12 * std::max(1.0, std::abs(o.threshold)));
    CHECK(r.num_bonafide == s.bona.size());
    CHECK(r.num_spoof == s.spoof.size());
  }
}

TEST_CASE("property: strictly monotone transforms leave the EER unchanged") {
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    const auto s = random_sets(seed);
    const double base = compute_eer(s.bona, s.spoof).eer;
    auto f = [](double x) { return std::exp(x / 3) * 7 - 2; };
    auto g = [](double x) { return x * x * x + x; };
    CHECK(std::abs(compute_eer(mapped(s.bona, f), mapped(s.spoof, f)).eer - base) <= 1e-12);
    CHECK(std::abs(compute_eer(mapped(s.bona, g), mapped(s.spoof, g)).eer - base) <= 1e-12);
  }
}

TEST_CASE("property: negating scores and swapping labels keeps the EER on tie-free data") {
  for (std::uint32_t seed = 1; seed < 100; ++seed) {
    if (seed % 3 == 0) continue;  // rounded sets have ties
    const auto s = random_sets(seed);
    auto neg = [](double x) { return -x; };
    const double a = compute_eer(s.bona, s.spoof).eer;
    const double b = compute_eer(mapped(s.spoof, neg), mapped(s.bona, neg)).eer;
    INFO("seed " << seed);
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("labels independent of scores tend to one half") {
  std::mt19937 gen(7);
  std::normal_distribution<double> nd(0, 1);
  std::vector<double> b, s;
  for (int i = 0; i < 2000; ++i) (gen() % 2 ? b : s).push_back(nd(gen));
  CHECK(std::abs(compute_eer(b, s).eer - 0.5) <= 0.05);
}

TEST_CASE("single-class and non-finite input is rejected") {
  const std::vector<double> b = {1, 2}, none;
  try {
    compute_eer(b, none);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingleClassInput);
  }
  const std::vector<double> bad = {NAN};
  CHECK_THROWS(compute_eer(b, bad));
}

TEST_CASE("score lines use 12 significant digits and round-trip") {
  CHECK(format_score_line({"u1", 1.0 / 3}) == "u1 0.333333333333\n");
  CHECK(format_score_line({"u2", -1234.5}) == "u2 -1234.5\n");
  auto dir = oracle::scratch_dir("eval_scores");
  const std::vector<ScoreRecord> recs = {{"a", 0.5}, {"b", -2e-7}, {"c", 123456789.123}};
  write_scores(recs, dir / "s.txt");
  const auto back = read_scores(dir / "s.txt");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].utt_id == recs[i].utt_id);
    CHECK(back[i].score == doctest::Approx(recs[i].score).epsilon(1e-11));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "s.txt.tmp"));
}

TEST_CASE("key files and joining") {
  const auto keys = parse_keys("a bonafide\nb spoof\r\n\nc spoof\n");
  REQUIRE(keys.size() == 3);
  CHECK(keys[1].label == Label::kSpoof);
  const std::vector<ScoreRecord> scores = {{"a", 1}, {"c", 0}};
  const auto joined = join_scores(scores, keys);
  REQUIRE(joined.size() == 2);
  CHECK(joined[0].label == Label::kBonafide);
  CHECK(compute_eer(joined).eer == 0.0);
  const std::vector<ScoreRecord> orphan = {{"a", 1}, {"zz", 0}};
  try {
    join_scores(orphan, keys);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingKey);
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("malformed lines name their line number") {
  for (const char* text : {"a 1\nb\n", "a 1\nb x\n", "a 1\nb 1 2\n", "a 1\nb nan\n"}) {
    try {
      parse_scores(text);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedLine);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  try {
    parse_keys("a bonafide\nb genuine\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedLine);
  }
  try {
    read_scores("/nonexistent/scores.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFileNotFound);
  }
}
