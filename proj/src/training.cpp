#include "replaydet/training.hpp"

#include <cmath>

#include "replaydet/binary_io.hpp"
#include "replaydet/error.hpp"

namespace replaydet {

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  require(rows.rows() >= 1, "standardizer needs at least one row");
  Standardizer s;
  s.shift = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  const double n = static_cast<double>(rows.rows());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - s.shift(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  Standardizer s;
  s.shift = Eigen::VectorXd::Zero(dim);
  s.scale = Eigen::VectorXd::Ones(dim);
  return s;
}

void Standardizer::write(std::ostream& out) const {
  binary::write_vector(out, shift);
  binary::write_vector(out, scale);
}

Standardizer Standardizer::read(std::istream& in) {
  binary::Reader r(in, ErrorCode::kCorruptModel);
  Standardizer s;
  s.shift = r.vector();
  s.scale = r.vector();
  if (s.shift.size() != s.scale.size()) r.corrupt("standardizer sizes differ");
  return s;
}

void check_finite_loss(double loss, int epoch, int batch, const char* what) {
  if (!std::isfinite(loss))
    fail(ErrorCode::kNonFiniteLoss, std::string(what) + " loss became " +
                                        std::to_string(loss) + " at epoch " +
                                        std::to_string(epoch) + ", batch " +
                                        std::to_string(batch));
}

}  // namespace replaydet
