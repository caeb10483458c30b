#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "replaydet/features.hpp"
#include "replaydet/nn.hpp"
#include "replaydet/training.hpp"

namespace replaydet {

struct AnoGanConfig {
  int epochs = 100;
  double lr = 1e-3;
  int batch = 32;
  int z_dim = 64;
  std::uint64_t seed = 0;
};

struct AnoGanSearchConfig {
  int search_iters = 100;
  double search_lr = 0.01;
  int restarts = 3;
  double residual_weight = 0.5;
  double discrimination_weight = 0.5;
};

// Generator: affine z -> 32x2, five transposed convolutions (length 2 ->
// 64), affine 64 -> d. Discriminator trunk: affine d -> 64, five
// convolutions (length 64 -> 2, 32 channels); the trunk output is the
// feature map used for the discrimination loss; an affine head gives the
// real/fake logit.
struct AnoGanModel {
  int input_dim = 0;
  int z_dim = 64;
  std::uint64_t score_seed = 0;
  AnoGanSearchConfig search;
  Standardizer standardizer;
  nn::Sequential generator;
  nn::Sequential disc_trunk;
  nn::Sequential disc_head;
};

AnoGanModel anogan_init(int input_dim, const AnoGanConfig& config);

// G(z) in standardized feature space.
std::vector<double> anogan_generate(const AnoGanModel& model,
                                    std::span<const double> z);

// Binary cross-entropy discriminator loss for one real sample and one
// generated sample G(z); gradients accumulate into the spans when given.
double anogan_discriminator_loss(const AnoGanModel& model,
                                 std::span<const double> real,
                                 std::span<const double> z,
                                 std::span<double> trunk_grad,
                                 std::span<double> head_grad);

// Non-saturating generator loss -log D(G(z)).
double anogan_generator_loss(const AnoGanModel& model, std::span<const double> z,
                             std::span<double> generator_grad);

// A(z) = wr * ||x - G(z)||_1 + wd * ||f(x) - f(G(z))||_1 for standardized x.
// `grad_z` (if non-null) receives dA/dz.
double anogan_anomaly(const AnoGanModel& model, std::span<const double> x,
                      std::span<const double> z, double residual_weight,
                      double discrimination_weight,
                      std::vector<double>* grad_z = nullptr);

AnoGanModel anogan_train(const Eigen::MatrixXd& features,
                         const AnoGanConfig& config,
                         const AnoGanSearchConfig& search = {},
                         TrainingReport* report = nullptr);

// -min_z A(z) over seeded restarts.
double anogan_score(const AnoGanModel& model, const Eigen::VectorXd& f,
                    const AnoGanSearchConfig& search);
double anogan_score(const AnoGanModel& model, const Eigen::VectorXd& f);
double anogan_score(const AnoGanModel& model, const FeatureVector& f);

void write_anogan(std::ostream& out, const AnoGanModel& model);
AnoGanModel read_anogan(std::istream& in);

}  // namespace replaydet
