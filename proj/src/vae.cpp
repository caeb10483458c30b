#include "replaydet/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

constexpr int kLayers = 5;

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
}

}  // namespace

std::vector<int> vae_layer_widths(int input_dim, int latent_dim) {
  require(input_dim >= 1 && latent_dim >= 1, "VAE dims must be positive");
  std::vector<int> widths;
  const double ratio = static_cast<double>(latent_dim) / input_dim;
  for (int i = 0; i < kLayers; ++i) {
    const double w = input_dim * std::pow(ratio, static_cast<double>(i) / kLayers);
    widths.push_back(std::max(latent_dim, static_cast<int>(std::lround(w))));
  }
  return widths;
}

double vae_kl(std::span<const double> mu, std::span<const double> logvar) {
  require(mu.size() == logvar.size(), "mu and logvar sizes differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    kl += 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - 1.0 - logvar[i]);
  return kl;
}

VaeModel vae_init(int input_dim, const VaeConfig& config) {
  require(config.latent_dim >= 1, "latent dim must be positive");
  require(config.num_samples >= 1, "VAE needs at least one latent sample");
  VaeModel m;
  m.input_dim = input_dim;
  m.latent_dim = config.latent_dim;
  m.num_samples = config.num_samples;
  m.score_seed = mix_seed(config.seed, 0x5C0BE);
  m.standardizer = Standardizer::identity(input_dim);

  const auto widths = vae_layer_widths(input_dim, config.latent_dim);
  m.encoder = nn::Sequential(input_dim);
  for (int i = 1; i < kLayers; ++i) m.encoder.linear(widths[i]).relu();
  m.encoder.linear(2 * config.latent_dim);

  m.decoder = nn::Sequential(config.latent_dim);
  for (int i = kLayers - 1; i >= 1; --i) m.decoder.linear(widths[i]).relu();
  m.decoder.linear(input_dim);

  Rng rng(mix_seed(config.seed, 0x1417));
  m.encoder.init(rng);
  m.decoder.init(rng);
  return m;
}

VaeLoss vae_sample_loss(const VaeModel& model, std::span<const double> x,
                        std::span<const double> eps,
                        std::span<double> encoder_grad,
                        std::span<double> decoder_grad) {
  const auto L = static_cast<std::size_t>(model.latent_dim);
  require(x.size() == static_cast<std::size_t>(model.input_dim),
          "VAE input size mismatch");
  require(eps.size() == L, "noise size must equal the latent dim");

  nn::Sequential::Trace te, td;
  const auto enc = model.encoder.forward(x, &te);
  const std::span<const double> mu(enc.data(), L), logvar(enc.data() + L, L);
  std::vector<double> z(L), sigma(L);
  for (std::size_t i = 0; i < L; ++i) {
    sigma[i] = std::exp(0.5 * logvar[i]);
    z[i] = mu[i] + sigma[i] * eps[i];
  }
  const auto x_hat = model.decoder.forward(z, &td);

  VaeLoss loss;
  std::vector<double> g_out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x_hat[i] - x[i];
    loss.reconstruction += 0.5 * r * r;
    g_out[i] = r;
  }
  loss.kl = vae_kl(mu, logvar);

  if (encoder_grad.empty() && decoder_grad.empty()) return loss;
  const auto gz = model.decoder.backward(td, g_out, decoder_grad);
  std::vector<double> g_enc(2 * L);
  for (std::size_t i = 0; i < L; ++i) {
    g_enc[i] = gz[i] + mu[i];
    g_enc[L + i] = gz[i] * eps[i] * 0.5 * sigma[i] +
                   0.5 * (sigma[i] * sigma[i] - 1.0);
  }
  model.encoder.backward(te, g_enc, encoder_grad);
  return loss;
}

VaeModel vae_train(const Eigen::MatrixXd& features, const VaeConfig& config,
                   TrainingReport* report) {
  require(features.rows() >= 10, "VAE training needs at least 10 vectors");
  require(config.epochs >= 1 && config.batch >= 1 && config.lr > 0.0,
          "VAE epochs, batch and learning rate must be positive");
  const auto dim = static_cast<int>(features.cols());
  VaeModel m = vae_init(dim, config);
  m.standardizer = config.standardize ? Standardizer::fit(features)
                                      : Standardizer::identity(dim);

  const auto n = static_cast<std::size_t>(features.rows());
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd s =
        m.standardizer.apply(features.row(static_cast<Eigen::Index>(i)).transpose());
    rows[i].assign(s.data(), s.data() + s.size());
  }

  nn::Adam enc_opt(m.encoder.num_params(), config.lr);
  nn::Adam dec_opt(m.decoder.num_params(), config.lr);
  std::vector<double> g_enc(m.encoder.num_params()), g_dec(m.decoder.num_params());
  std::vector<double> eps(static_cast<std::size_t>(m.latent_dim));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(config.seed, 0x7A1B));
  TrainingReport local;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch, ++batch_index) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch));
      std::fill(g_enc.begin(), g_enc.end(), 0.0);
      std::fill(g_dec.begin(), g_dec.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        for (double& e : eps) e = rng.normal();
        batch_loss += vae_sample_loss(m, rows[order[k]], eps, g_enc, g_dec).total();
      }
      check_finite_loss(batch_loss, epoch + 1, batch_index, "VAE");
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : g_enc) g *= inv;
      for (double& g : g_dec) g *= inv;
      enc_opt.step(m.encoder.params(), g_enc);
      dec_opt.step(m.decoder.params(), g_dec);
      epoch_loss += batch_loss;
    }
    local.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  local.iterations = config.epochs;
  if (local.epoch_losses.back() > local.epoch_losses.front()) {
    local.converged = false;
    local.warnings.push_back("VAE final-epoch loss exceeds first-epoch loss");
  }
  if (report) *report = std::move(local);
  return m;
}

double vae_score(const VaeModel& model, const Eigen::VectorXd& f) {
  if (f.size() != model.input_dim)
    fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(f.size()) + " vs VAE input " +
             std::to_string(model.input_dim));
  const Eigen::VectorXd x = model.standardizer.apply(f);
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  const auto L = static_cast<std::size_t>(model.latent_dim);
  const auto enc = model.encoder.forward(xs);

  Rng rng(model.score_seed);
  const double log_norm = 0.5 * model.input_dim * std::log(2.0 * std::numbers::pi);
  std::vector<double> z(L);
  double total = 0.0;
  for (int l = 0; l < model.num_samples; ++l) {
    for (std::size_t i = 0; i < L; ++i)
      z[i] = enc[i] + std::exp(0.5 * enc[L + i]) * rng.normal();
    const auto x_hat = model.decoder.forward(z);
    double sq = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) sq += (xs[i] - x_hat[i]) * (xs[i] - x_hat[i]);
    total += -0.5 * sq - log_norm;
  }
  return total / model.num_samples;
}

double vae_score(const VaeModel& model, const FeatureVector& f) {
  require(f.stage == FeatureStage::kReduced, "VAE scores Reduced features");
  return vae_score(model, f.values);
}

void write_vae(std::ostream& out, const VaeModel& m) {
  binary::write_u32(out, static_cast<std::uint32_t>(m.input_dim));
  binary::write_u32(out, static_cast<std::uint32_t>(m.latent_dim));
  binary::write_u32(out, static_cast<std::uint32_t>(m.num_samples));
  binary::write_u64(out, m.score_seed);
  m.standardizer.write(out);
  m.encoder.write(out);
  m.decoder.write(out);
}

VaeModel read_vae(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  VaeModel m;
  m.input_dim = static_cast<int>(r.u32());
  m.latent_dim = static_cast<int>(r.u32());
  m.num_samples = static_cast<int>(r.u32());
  m.score_seed = r.u64();
  m.standardizer = Standardizer::read(in);
  m.encoder = nn::Sequential::read(in);
  m.decoder = nn::Sequential::read(in);
  if (m.standardizer.dim() != m.input_dim || m.encoder.input_size() != m.input_dim ||
      m.encoder.output_size() != 2 * m.latent_dim ||
      m.decoder.input_size() != m.latent_dim || m.decoder.output_size() != m.input_dim ||
      m.num_samples < 1)
    r.corrupt("VAE shapes are inconsistent");
  return m;
}

}  // namespace replaydet
