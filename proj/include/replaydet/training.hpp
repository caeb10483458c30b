#pragma once

#include <Eigen/Dense>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace replaydet {

// Per-dimension affine normalization fitted on training rows. Dimensions
// with (near) zero spread keep unit scale.
struct Standardizer {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& rows);
  static Standardizer identity(Eigen::Index dim);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return (x - shift).cwiseQuotient(scale);
  }
  Eigen::VectorXd invert(const Eigen::VectorXd& z) const {
    return z.cwiseProduct(scale) + shift;
  }
  Eigen::Index dim() const { return shift.size(); }

  void write(std::ostream& out) const;
  static Standardizer read(std::istream& in);
};

struct TrainingReport {
  std::vector<double> epoch_losses;
  std::vector<std::string> warnings;
  bool converged = true;
  long iterations = 0;
  // AnoGAN only: discriminator accuracy over the last epoch.
  double discriminator_accuracy = 0.0;
};

// Throws NonFiniteLoss with the epoch and batch in the message.
void check_finite_loss(double loss, int epoch, int batch, const char* what);

}  // namespace replaydet
