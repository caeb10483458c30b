#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "replaydet/features.hpp"
#include "replaydet/nn.hpp"
#include "replaydet/training.hpp"

namespace replaydet {

struct VaeConfig {
  int epochs = 100;
  double lr = 1e-3;
  int batch = 32;
  std::uint64_t seed = 0;
  int latent_dim = 2;
  int num_samples = 10;  // latent draws per score
  // Per-dimension standardization before the network. Off by default: with
  // a unit-variance decoder, unit-variance inputs leave nothing worth
  // encoding and the posterior collapses.
  bool standardize = false;
};

// Widths of the five encoder layers' inputs, shrinking geometrically from
// the input dim toward the latent dim. The decoder mirrors them.
std::vector<int> vae_layer_widths(int input_dim, int latent_dim);

struct VaeModel {
  int input_dim = 0;
  int latent_dim = 2;
  int num_samples = 10;
  std::uint64_t score_seed = 0;
  Standardizer standardizer;
  nn::Sequential encoder;  // -> [mu, logvar]
  nn::Sequential decoder;
};

struct VaeLoss {
  double reconstruction = 0.0;  // 0.5 * ||x - x_hat||^2
  double kl = 0.0;
  double total() const { return reconstruction + kl; }
};

// KL(N(mu, exp(logvar)) || N(0, I)).
double vae_kl(std::span<const double> mu, std::span<const double> logvar);

// Randomly initialized, untrained model.
VaeModel vae_init(int input_dim, const VaeConfig& config);

// Negative ELBO of one standardized sample for a fixed reparameterization
// noise `eps`. Gradients are accumulated into the spans when non-empty.
VaeLoss vae_sample_loss(const VaeModel& model, std::span<const double> x,
                        std::span<const double> eps,
                        std::span<double> encoder_grad,
                        std::span<double> decoder_grad);

// Rows are Reduced feature vectors of bonafide utterances.
VaeModel vae_train(const Eigen::MatrixXd& features, const VaeConfig& config,
                   TrainingReport* report = nullptr);

// Mean decoder log-density of the input over the model's latent draws.
double vae_score(const VaeModel& model, const Eigen::VectorXd& f);
double vae_score(const VaeModel& model, const FeatureVector& f);

void write_vae(std::ostream& out, const VaeModel& model);
VaeModel read_vae(std::istream& in);

}  // namespace replaydet
