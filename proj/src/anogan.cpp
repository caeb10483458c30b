#include "replaydet/anogan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

constexpr int kHidden = 64;       // affine width on both sides of the convs
constexpr int kBaseChannels = 32;
constexpr double kGanBeta1 = 0.5;

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double disc_logit(const AnoGanModel& m, std::span<const double> x) {
  return m.disc_head.forward(m.disc_trunk.forward(x))[0];
}

void fill_normal(std::vector<double>& z, Rng& rng) {
  for (double& v : z) v = rng.normal();
}

}  // namespace

AnoGanModel anogan_init(int input_dim, const AnoGanConfig& config) {
  require(input_dim >= 1, "AnoGAN input dim must be positive");
  require(config.z_dim >= 1, "z_dim must be positive");
  AnoGanModel m;
  m.input_dim = input_dim;
  m.z_dim = config.z_dim;
  m.score_seed = mix_seed(config.seed, 0xA5C0);
  m.standardizer = Standardizer::identity(input_dim);

  m.generator = nn::Sequential(config.z_dim);
  m.generator.linear(kBaseChannels * 2).relu().reshape(kBaseChannels)
      .conv_transpose1d(16).relu()
      .conv_transpose1d(16).relu()
      .conv_transpose1d(8).relu()
      .conv_transpose1d(8).relu()
      .conv_transpose1d(1)
      .linear(input_dim);

  m.disc_trunk = nn::Sequential(input_dim);
  m.disc_trunk.linear(kHidden).leaky_relu().reshape(1)
      .conv1d(8).leaky_relu()
      .conv1d(8).leaky_relu()
      .conv1d(16).leaky_relu()
      .conv1d(16).leaky_relu()
      .conv1d(kBaseChannels).leaky_relu();
  m.disc_head = nn::Sequential(m.disc_trunk.output_size());
  m.disc_head.linear(1);

  Rng rng(mix_seed(config.seed, 0x6A4));
  m.generator.init(rng);
  m.disc_trunk.init(rng);
  m.disc_head.init(rng);
  return m;
}

std::vector<double> anogan_generate(const AnoGanModel& m,
                                    std::span<const double> z) {
  return m.generator.forward(z);
}

double anogan_discriminator_loss(const AnoGanModel& m,
                                 std::span<const double> real,
                                 std::span<const double> z,
                                 std::span<double> trunk_grad,
                                 std::span<double> head_grad) {
  const bool grads = !trunk_grad.empty() || !head_grad.empty();
  const auto fake = m.generator.forward(z);
  double loss = 0.0;
  // (input, target is real)
  const std::pair<std::span<const double>, bool> cases[] = {{real, true},
                                                            {fake, false}};
  for (const auto& [x, is_real] : cases) {
    nn::Sequential::Trace tt, th;
    const auto feat = m.disc_trunk.forward(x, grads ? &tt : nullptr);
    const double logit = m.disc_head.forward(feat, grads ? &th : nullptr)[0];
    loss += is_real ? nn::softplus(-logit) : nn::softplus(logit);
    if (!grads) continue;
    const double g = is_real ? nn::sigmoid(logit) - 1.0 : nn::sigmoid(logit);
    const double g_arr[1] = {g};
    const auto g_feat = m.disc_head.backward(th, g_arr, head_grad);
    m.disc_trunk.backward(tt, g_feat, trunk_grad);
  }
  return loss;
}

double anogan_generator_loss(const AnoGanModel& m, std::span<const double> z,
                             std::span<double> generator_grad) {
  nn::Sequential::Trace tg, tt, th;
  const bool grads = !generator_grad.empty();
  const auto fake = m.generator.forward(z, grads ? &tg : nullptr);
  const auto feat = m.disc_trunk.forward(fake, grads ? &tt : nullptr);
  const double logit = m.disc_head.forward(feat, grads ? &th : nullptr)[0];
  const double loss = nn::softplus(-logit);
  if (!grads) return loss;
  const double g_arr[1] = {nn::sigmoid(logit) - 1.0};
  const auto g_feat = m.disc_head.backward(th, g_arr, {});
  const auto g_fake = m.disc_trunk.backward(tt, g_feat, {});
  m.generator.backward(tg, g_fake, generator_grad);
  return loss;
}

double anogan_anomaly(const AnoGanModel& m, std::span<const double> x,
                      std::span<const double> z, double wr, double wd,
                      std::vector<double>* grad_z) {
  require(x.size() == static_cast<std::size_t>(m.input_dim),
          "AnoGAN input size mismatch");
  nn::Sequential::Trace tg, tt;
  const auto g = m.generator.forward(z, grad_z ? &tg : nullptr);
  std::vector<double> g_gen(g.size(), 0.0);
  double residual = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = x[i] - g[i];
    residual += std::abs(r);
    g_gen[i] = -wr * sign(r);
  }
  double discrimination = 0.0;
  if (wd != 0.0) {
    const auto fx = m.disc_trunk.forward(x);
    const auto fg = m.disc_trunk.forward(g, grad_z ? &tt : nullptr);
    std::vector<double> g_feat(fg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) {
      const double r = fx[i] - fg[i];
      discrimination += std::abs(r);
      g_feat[i] = -wd * sign(r);
    }
    if (grad_z) {
      const auto back = m.disc_trunk.backward(tt, g_feat, {});
      for (std::size_t i = 0; i < g_gen.size(); ++i) g_gen[i] += back[i];
    }
  }
  if (grad_z) *grad_z = m.generator.backward(tg, g_gen, {});
  return wr * residual + wd * discrimination;
}

AnoGanModel anogan_train(const Eigen::MatrixXd& features,
                         const AnoGanConfig& config,
                         const AnoGanSearchConfig& search,
                         TrainingReport* report) {
  require(features.rows() >= 32, "AnoGAN training needs at least 32 vectors");
  require(config.epochs >= 1 && config.batch >= 1 && config.lr > 0.0,
          "AnoGAN epochs, batch and learning rate must be positive");
  AnoGanModel m = anogan_init(static_cast<int>(features.cols()), config);
  m.search = search;
  m.standardizer = Standardizer::fit(features);

  const auto n = static_cast<std::size_t>(features.rows());
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd s =
        m.standardizer.apply(features.row(static_cast<Eigen::Index>(i)).transpose());
    rows[i].assign(s.data(), s.data() + s.size());
  }

  nn::Adam g_opt(m.generator.num_params(), config.lr, kGanBeta1);
  nn::Adam t_opt(m.disc_trunk.num_params(), config.lr, kGanBeta1);
  nn::Adam h_opt(m.disc_head.num_params(), config.lr, kGanBeta1);
  std::vector<double> gg(m.generator.num_params()), gt(m.disc_trunk.num_params()),
      gh(m.disc_head.num_params());
  std::vector<double> z(static_cast<std::size_t>(m.z_dim));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(config.seed, 0x7A1C));
  TrainingReport local;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const bool last = epoch + 1 == config.epochs;
    double epoch_loss = 0.0;
    long correct = 0, judged = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch, ++batch_index) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch));
      const double inv = 1.0 / static_cast<double>(end - start);

      std::fill(gt.begin(), gt.end(), 0.0);
      std::fill(gh.begin(), gh.end(), 0.0);
      double d_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        fill_normal(z, rng);
        d_loss += anogan_discriminator_loss(m, rows[order[k]], z, gt, gh);
        if (last) {
          correct += disc_logit(m, rows[order[k]]) > 0.0;
          correct += disc_logit(m, anogan_generate(m, z)) < 0.0;
          judged += 2;
        }
      }
      check_finite_loss(d_loss, epoch + 1, batch_index, "AnoGAN discriminator");
      for (double& g : gt) g *= inv;
      for (double& g : gh) g *= inv;
      t_opt.step(m.disc_trunk.params(), gt);
      h_opt.step(m.disc_head.params(), gh);

      std::fill(gg.begin(), gg.end(), 0.0);
      double g_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        fill_normal(z, rng);
        g_loss += anogan_generator_loss(m, z, gg);
      }
      check_finite_loss(g_loss, epoch + 1, batch_index, "AnoGAN generator");
      for (double& g : gg) g *= inv;
      g_opt.step(m.generator.params(), gg);
      epoch_loss += d_loss + g_loss;
    }
    local.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    if (last) local.discriminator_accuracy = static_cast<double>(correct) / judged;
  }
  local.iterations = config.epochs;

  // Collapse detector: spread of generated samples.
  Rng probe(mix_seed(config.seed, 0xC011));
  Eigen::MatrixXd samples(64, m.input_dim);
  for (int s = 0; s < 64; ++s) {
    fill_normal(z, probe);
    const auto g = anogan_generate(m, z);
    for (int c = 0; c < m.input_dim; ++c) samples(s, c) = g[static_cast<std::size_t>(c)];
  }
  const double spread =
      (samples.rowwise() - samples.colwise().mean()).array().square().mean();
  if (spread < 1e-6)
    local.warnings.push_back("ModeCollapseWarning: generator output variance " +
                             std::to_string(spread));
  if (local.discriminator_accuracy <= 0.5 || local.discriminator_accuracy >= 1.0)
    local.warnings.push_back("discriminator accuracy " +
                             std::to_string(local.discriminator_accuracy) +
                             " outside (0.5, 1.0) over the last epoch");
  if (report) *report = std::move(local);
  return m;
}

double anogan_score(const AnoGanModel& m, const Eigen::VectorXd& f,
                    const AnoGanSearchConfig& search) {
  if (f.size() != m.input_dim)
    fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(f.size()) + " vs AnoGAN input " +
             std::to_string(m.input_dim));
  require(search.search_iters >= 0 && search.restarts >= 1,
          "search needs non-negative iterations and at least one restart");
  const Eigen::VectorXd xs = m.standardizer.apply(f);
  const std::span<const double> x(xs.data(), static_cast<std::size_t>(xs.size()));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> z(static_cast<std::size_t>(m.z_dim)), grad;
  for (int r = 0; r < search.restarts; ++r) {
    Rng rng(mix_seed(m.score_seed, static_cast<std::uint64_t>(r)));
    fill_normal(z, rng);
    nn::Adam opt(z.size(), search.search_lr);
    for (int it = 0;; ++it) {
      const bool step = it < search.search_iters;
      const double a = anogan_anomaly(m, x, z, search.residual_weight,
                                      search.discrimination_weight,
                                      step ? &grad : nullptr);
      best = std::min(best, a);
      if (!step) break;
      opt.step(z, grad);
    }
  }
  return -best;
}

double anogan_score(const AnoGanModel& m, const Eigen::VectorXd& f) {
  return anogan_score(m, f, m.search);
}

double anogan_score(const AnoGanModel& m, const FeatureVector& f) {
  require(f.stage == FeatureStage::kReduced, "AnoGAN scores Reduced features");
  return anogan_score(m, f.values, m.search);
}

void write_anogan(std::ostream& out, const AnoGanModel& m) {
  binary::write_u32(out, static_cast<std::uint32_t>(m.input_dim));
  binary::write_u32(out, static_cast<std::uint32_t>(m.z_dim));
  binary::write_u64(out, m.score_seed);
  binary::write_u32(out, static_cast<std::uint32_t>(m.search.search_iters));
  binary::write_f64(out, m.search.search_lr);
  binary::write_u32(out, static_cast<std::uint32_t>(m.search.restarts));
  binary::write_f64(out, m.search.residual_weight);
  binary::write_f64(out, m.search.discrimination_weight);
  m.standardizer.write(out);
  m.generator.write(out);
  m.disc_trunk.write(out);
  m.disc_head.write(out);
}

AnoGanModel read_anogan(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  AnoGanModel m;
  m.input_dim = static_cast<int>(r.u32());
  m.z_dim = static_cast<int>(r.u32());
  m.score_seed = r.u64();
  m.search.search_iters = static_cast<int>(r.u32());
  m.search.search_lr = r.f64();
  m.search.restarts = static_cast<int>(r.u32());
  m.search.residual_weight = r.f64();
  m.search.discrimination_weight = r.f64();
  m.standardizer = Standardizer::read(in);
  m.generator = nn::Sequential::read(in);
  m.disc_trunk = nn::Sequential::read(in);
  m.disc_head = nn::Sequential::read(in);
  if (m.generator.input_size() != m.z_dim ||
      m.generator.output_size() != m.input_dim ||
      m.disc_trunk.input_size() != m.input_dim ||
      m.disc_head.input_size() != m.disc_trunk.output_size() ||
      m.disc_head.output_size() != 1 || m.standardizer.dim() != m.input_dim)
    r.corrupt("AnoGAN shapes are inconsistent");
  return m;
}

}  // namespace replaydet
