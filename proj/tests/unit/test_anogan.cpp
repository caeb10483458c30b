#include <doctest.h>

#include <sstream>

#include "gradcheck.hpp"
#include "replaydet/anogan.hpp"
#include "replaydet/error.hpp"
#include "replaydet/rng.hpp"
#include "support.hpp"

using namespace replaydet;

namespace {

AnoGanModel toy_model(int dim, std::uint64_t seed, int z_dim = 8) {
  AnoGanConfig cfg;
  cfg.seed = seed;
  cfg.z_dim = z_dim;
  return anogan_init(dim, cfg);
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Points on a unit ring in the first two of `dim` coordinates.
Eigen::MatrixXd ring(int n, int dim, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0, 2 * oracle::kPi);
  std::normal_distribution<double> nd(0, 0.02);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, dim);
  for (int i = 0; i < n; ++i) {
    const double t = u(gen);
    m(i, 0) = std::cos(t) + nd(gen);
    m(i, 1) = std::sin(t) + nd(gen);
    for (int j = 2; j < dim; ++j) m(i, j) = nd(gen);
  }
  return m;
}

double ring_distance(const Eigen::VectorXd& p) {
  double rest = 0;
  for (Eigen::Index j = 2; j < p.size(); ++j) rest += p(j) * p(j);
  const double r = std::hypot(p(0), p(1));
  return std::sqrt((r - 1) * (r - 1) + rest);
}

}  // namespace

TEST_CASE("generator output has the feature dimension") {
  for (int d : {4, 17, 64}) {
    const auto m = toy_model(d, 1);
    for (std::uint64_t s = 0; s < 3; ++s) CHECK(anogan_generate(m, normals(8, s)).size() == static_cast<std::size_t>(d));
  }
}

TEST_CASE("discriminator and generator gradients match central differences") {
  auto m = toy_model(4, 2);
  const std::vector<double> real = {0.5, -0.3, 1.1, 0.2};
  const auto z = normals(8, 3);

  std::vector<double> gt(m.disc_trunk.num_params(), 0.0), gh(m.disc_head.num_params(), 0.0);
  anogan_discriminator_loss(m, real, z, gt, gh);
  auto dloss = [&] { return anogan_discriminator_loss(m, real, z, {}, {}); };
  CHECK(oracle::check_gradient(m.disc_trunk.params(), gt, dloss).worst_relative <= 1e-4);
  CHECK(oracle::check_gradient(m.disc_head.params(), gh, dloss).worst_relative <= 1e-4);

  std::vector<double> gg(m.generator.num_params(), 0.0);
  anogan_generator_loss(m, z, gg);
  auto gloss = [&] { return anogan_generator_loss(m, z, {}); };
  CHECK(oracle::check_gradient(m.generator.params(), gg, gloss).worst_relative <= 1e-4);
}

TEST_CASE("anomaly gradient with respect to z matches central differences") {
  const auto m = toy_model(4, 4);
  const std::vector<double> x = {0.2, 0.4, -0.6, 0.9};
  auto z = normals(8, 5);
  std::vector<double> grad;
  anogan_anomaly(m, x, z, 0.5, 0.5, &grad);
  auto a = [&] { return anogan_anomaly(m, x, z, 0.5, 0.5); };
  CHECK(oracle::check_gradient(z, grad, a).worst_relative <= 1e-4);
}

TEST_CASE("anomaly weights: residual-only is half the L1 residual") {
  const auto m = toy_model(5, 6);
  const std::vector<double> x = {0.1, -0.2, 0.3, -0.4, 0.5};
  const auto z = normals(8, 7);
  const auto g = anogan_generate(m, z);
  double l1 = 0;
  for (int i = 0; i < 5; ++i) l1 += std::abs(x[i] - g[i]);
  CHECK(anogan_anomaly(m, x, z, 0.5, 0.0) == doctest::Approx(0.5 * l1));
  const double both = anogan_anomaly(m, x, z, 0.5, 0.5);
  const double disc_only = anogan_anomaly(m, x, z, 0.0, 0.5);
  CHECK(both == doctest::Approx(0.5 * l1 + disc_only));
}

TEST_CASE("zero search iterations evaluates A at the seeded start") {
  auto m = toy_model(4, 8);
  m.standardizer = Standardizer::identity(4);
  m.score_seed = 99;
  AnoGanSearchConfig s;
  s.search_iters = 0;
  s.restarts = 1;
  const Eigen::Vector4d f(0.3, 0.1, -0.2, 0.4);
  Rng rng(mix_seed(99, 0));
  std::vector<double> z0(8);
  for (double& v : z0) v = rng.normal();
  const std::vector<double> x(f.data(), f.data() + 4);
  CHECK(anogan_score(m, f, s) == doctest::Approx(-anogan_anomaly(m, x, z0, 0.5, 0.5)));
  CHECK(anogan_score(m, f, s) == anogan_score(m, f, s));
}

TEST_CASE("a planted generator output scores above a random feature of equal norm") {
  auto m = toy_model(6, 9);
  m.standardizer = Standardizer::identity(6);
  const auto z0 = normals(8, 10);
  const auto g = anogan_generate(m, z0);
  const Eigen::VectorXd planted = Eigen::Map<const Eigen::VectorXd>(g.data(), 6);
  // Residual at z0 is zero; a perturbed z cannot do better.
  auto zp = z0;
  zp[0] += 0.3;
  CHECK(anogan_anomaly(m, g, z0, 0.5, 0.0) <= anogan_anomaly(m, g, zp, 0.5, 0.0));
  int wins = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(normals(6, 100 + s).data(), 6);
    r *= planted.norm() / r.norm();
    wins += anogan_score(m, planted) >= anogan_score(m, r);
  }
  CHECK(wins >= 9);
}

TEST_CASE("training on a ring puts generated samples nearer the ring than uniform noise") {
  const auto data = ring(256, 4, 12);
  AnoGanConfig cfg;
  cfg.seed = 13;
  cfg.epochs = 300;
  cfg.z_dim = 16;
  TrainingReport report;
  const auto m = anogan_train(data, cfg, {}, &report);
  CHECK(report.epoch_losses.size() == 300);
  std::mt19937 gen(14);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double gen_d = 0, uni_d = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const auto g = anogan_generate(m, normals(16, 1000 + i));
    const Eigen::VectorXd gs = m.standardizer.invert(Eigen::Map<const Eigen::VectorXd>(g.data(), 4));
    gen_d += ring_distance(gs);
    Eigen::VectorXd p(4);
    for (int j = 0; j < 4; ++j) p(j) = j < 2 ? u(gen) : 0.0;
    uni_d += ring_distance(p);
  }
  CHECK(gen_d / n < uni_d / n);
}

TEST_CASE("scores: dimension mismatch and round-trip") {
  const auto data = ring(40, 6, 15);
  AnoGanConfig cfg;
  cfg.epochs = 2;
  cfg.z_dim = 8;
  const auto m = anogan_train(data, cfg);
  try {
    anogan_score(m, Eigen::VectorXd::Zero(5));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  std::stringstream ss;
  write_anogan(ss, m);
  const auto back = read_anogan(ss);
  const Eigen::VectorXd f = data.row(3).transpose();
  CHECK(anogan_score(back, f) == anogan_score(m, f));
}

TEST_CASE("fewer than 32 rows is rejected") {
  try {
    anogan_train(ring(31, 4, 16), AnoGanConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPreconditionViolation);
  }
}
