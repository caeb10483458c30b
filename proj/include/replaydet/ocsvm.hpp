#pragma once

#include <Eigen/Dense>
#include <istream>
#include <ostream>

#include "replaydet/features.hpp"
#include "replaydet/training.hpp"

namespace replaydet {

struct OcsvmConfig {
  double nu = 0.5;
  double tol = 1e-3;
  double gamma = 0.0;  // <= 0 selects 1 / (d * var(X))
  long max_iter = 0;   // <= 0 selects max(10^7, 100 n)
};

// Dual solution in the normalized scaling: 0 <= alpha_i <= 1/(nu n),
// sum(alpha) = 1, decision(x) = sum alpha_i K(x_i, x) - rho.
struct OcsvmDual {
  Eigen::VectorXd alpha;
  double rho = 0.0;
  long iterations = 0;
  bool converged = true;
  // Final maximal KKT violation (max over up-set of -G minus min over
  // low-set of -G), in the solver's internal unit-box scaling.
  double kkt_gap = 0.0;
};

// SMO with second-order working-set selection on a precomputed kernel.
OcsvmDual ocsvm_solve_dual(const Eigen::MatrixXd& kernel, double nu,
                           double tol, long max_iter = 0);

// 1 / (d * var(X)) over all entries; 1 when the variance is zero.
double ocsvm_gamma_scale(const Eigen::MatrixXd& features);

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double gamma);

struct OcsvmModel {
  Eigen::MatrixXd support_vectors;  // rows
  Eigen::VectorXd alpha;            // per support vector
  double rho = 0.0;
  double gamma = 1.0;
  double nu = 0.5;
  double tol = 1e-3;
  int num_train = 0;
  bool converged = true;

  Eigen::Index input_dim() const { return support_vectors.cols(); }
};

OcsvmModel ocsvm_train(const Eigen::MatrixXd& features,
                       const OcsvmConfig& config = {},
                       TrainingReport* report = nullptr);

double ocsvm_score(const OcsvmModel& model, const Eigen::VectorXd& f);
double ocsvm_score(const OcsvmModel& model, const FeatureVector& f);

void write_ocsvm(std::ostream& out, const OcsvmModel& model);
OcsvmModel read_ocsvm(std::istream& in);

}  // namespace replaydet
