#include "replaydet/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"

namespace replaydet {
namespace {

constexpr double kTau = 1e-12;

}  // namespace

// Internally the box is [0, 1] with sum(alpha) = nu * n, which keeps the
// stopping tolerance on the same footing as common SVM libraries; the
// result is rescaled by 1/(nu n) on return.
OcsvmDual ocsvm_solve_dual(const Eigen::MatrixXd& Q, double nu, double tol,
                           long max_iter) {
  const Eigen::Index n = Q.rows();
  require(n >= 1 && Q.cols() == n, "kernel must be square and non-empty");
  require(nu > 0.0 && nu <= 1.0, "nu must be in (0, 1]");
  require(tol > 0.0, "tolerance must be positive");
  if (max_iter <= 0) max_iter = std::max<long>(10'000'000, 100 * static_cast<long>(n));

  const double C = 1.0;
  const double total = nu * static_cast<double>(n);
  // Uniform start: feasible for any nu and symmetric in the data.
  Eigen::VectorXd a = Eigen::VectorXd::Constant(n, total / static_cast<double>(n));
  Eigen::VectorXd G = Q * a;

  OcsvmDual out;
  long iter = 0;
  for (;; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_max2 = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t)
      if (a(t) < C && -G(t) >= g_max) {
        g_max = -G(t);
        i = t;
      }
    double obj_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (a(t) <= 0.0) continue;
      g_max2 = std::max(g_max2, G(t));
      if (i < 0) continue;
      const double b = g_max + G(t);
      if (b > 0.0) {
        double quad = Q(i, i) + Q(t, t) - 2.0 * Q(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(b * b) / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j = t;
        }
      }
    }
    out.kkt_gap = std::max(0.0, g_max + g_max2);
    if (i < 0 || j < 0 || g_max + g_max2 < tol) break;
    if (iter >= max_iter) {
      out.converged = false;
      break;
    }

    const double old_ai = a(i), old_aj = a(j);
    double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
    if (quad <= 0.0) quad = kTau;
    const double delta = (G(i) - G(j)) / quad;
    const double sum = a(i) + a(j);
    a(i) -= delta;
    a(j) += delta;
    if (sum > C) {
      if (a(i) > C) { a(i) = C; a(j) = sum - C; }
      if (a(j) > C) { a(j) = C; a(i) = sum - C; }
    } else {
      if (a(j) < 0.0) { a(j) = 0.0; a(i) = sum; }
      if (a(i) < 0.0) { a(i) = 0.0; a(j) = sum; }
    }
    const double di = a(i) - old_ai, dj = a(j) - old_aj;
    G += Q.col(i) * di + Q.col(j) * dj;
  }
  out.iterations = iter;

  // rho from free variables, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  long n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (a(t) >= C) {
      lb = std::max(lb, G(t));
    } else if (a(t) <= 0.0) {
      ub = std::min(ub, G(t));
    } else {
      ++n_free;
      sum_free += G(t);
    }
  }
  double rho;
  if (n_free > 0) {
    rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : lb;
  }
  out.alpha = a / total;
  out.rho = rho / total;
  return out;
}

double ocsvm_gamma_scale(const Eigen::MatrixXd& X) {
  require(X.size() > 0, "gamma needs data");
  const double mean = X.mean();
  const double var = (X.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double gamma) {
  require(a.cols() == b.cols(), "kernel inputs differ in dimension");
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + na;
  d2.rowwise() += nb.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

OcsvmModel ocsvm_train(const Eigen::MatrixXd& X, const OcsvmConfig& config,
                       TrainingReport* report) {
  require(X.rows() >= 2, "OCSVM needs at least two vectors");
  require(X.allFinite(), "OCSVM input contains non-finite values");
  OcsvmModel m;
  m.nu = config.nu;
  m.tol = config.tol;
  m.num_train = static_cast<int>(X.rows());
  m.gamma = config.gamma > 0.0 ? config.gamma : ocsvm_gamma_scale(X);

  const Eigen::MatrixXd K = rbf_kernel(X, X, m.gamma);
  const OcsvmDual dual = ocsvm_solve_dual(K, config.nu, config.tol, config.max_iter);
  m.rho = dual.rho;
  m.converged = dual.converged;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (dual.alpha(i) > 0.0) sv.push_back(i);
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  m.alpha.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    m.alpha(static_cast<Eigen::Index>(k)) = dual.alpha(sv[k]);
  }
  if (report) {
    report->iterations = dual.iterations;
    report->converged = dual.converged;
    if (!dual.converged)
      report->warnings.push_back("OCSVM solver hit the iteration cap (KKT gap " +
                                 std::to_string(dual.kkt_gap) + ")");
  }
  return m;
}

double ocsvm_score(const OcsvmModel& m, const Eigen::VectorXd& f) {
  if (f.size() != m.input_dim())
    fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(f.size()) + " vs OCSVM input " +
             std::to_string(m.input_dim()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i)
    acc += m.alpha(i) *
           std::exp(-m.gamma * (m.support_vectors.row(i).transpose() - f).squaredNorm());
  return acc - m.rho;
}

double ocsvm_score(const OcsvmModel& m, const FeatureVector& f) {
  require(f.stage == FeatureStage::kReduced, "OCSVM scores Reduced features");
  return ocsvm_score(m, f.values);
}

void write_ocsvm(std::ostream& out, const OcsvmModel& m) {
  binary::write_f64(out, m.nu);
  binary::write_f64(out, m.tol);
  binary::write_f64(out, m.gamma);
  binary::write_f64(out, m.rho);
  binary::write_u32(out, static_cast<std::uint32_t>(m.num_train));
  binary::write_u32(out, m.converged ? 1u : 0u);
  binary::write_matrix(out, m.support_vectors);
  binary::write_vector(out, m.alpha);
}

OcsvmModel read_ocsvm(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  OcsvmModel m;
  m.nu = r.f64();
  m.tol = r.f64();
  m.gamma = r.f64();
  m.rho = r.f64();
  m.num_train = static_cast<int>(r.u32());
  m.converged = r.u32() != 0;
  m.support_vectors = r.matrix();
  m.alpha = r.vector();
  if (m.alpha.size() != m.support_vectors.rows())
    r.corrupt("OCSVM coefficient count does not match support vectors");
  return m;
}

}  // namespace replaydet
