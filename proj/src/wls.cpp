#include "disac/wls.hpp"

#include "disac/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace disac {

void LinearSystem::validate() const {
  if (rhs.size() != coefficients.rows() || weights.size() != coefficients.rows())
    throw Error(ErrorKind::DimensionMismatch, "rhs and weights must have one entry per row of the system");
  if (!unknown_labels.empty() && static_cast<Eigen::Index>(unknown_labels.size()) != coefficients.cols())
    throw Error(ErrorKind::DimensionMismatch, "unknown label count does not match the column count");
  if (!coefficients.allFinite() || !rhs.allFinite() || !weights.allFinite())
    throw Error(ErrorKind::InvalidArgument, "linear system contains non-finite values");
  if ((weights.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "weights must be non-negative");
}

namespace {

std::string column_name(const LinearSystem& s, Eigen::Index j) {
  std::string name = "column " + std::to_string(j);
  if (!s.unknown_labels.empty()) name += " (" + s.unknown_labels[j] + ")";
  return name;
}

}  // namespace

WlsSolution solve_wls(const LinearSystem& system) {
  system.validate();
  const Eigen::Index rows = system.rows();
  const Eigen::Index cols = system.unknowns();
  if (cols == 0) throw Error(ErrorKind::InvalidArgument, "system has no unknowns");
  if (rows < cols)
    throw Error(ErrorKind::Underdetermined,
                std::to_string(rows) + " equations for " + std::to_string(cols) + " unknowns");
  const double wmax = system.weights.maxCoeff();
  if (!(wmax > 0.0)) throw Error(ErrorKind::InvalidArgument, "all weights are zero");

  const Eigen::VectorXd sqrt_w = system.weights.cwiseMax(1e-12 * wmax).cwiseSqrt();
  Eigen::MatrixXd a = sqrt_w.asDiagonal() * system.coefficients;
  const Eigen::VectorXd b = sqrt_w.cwiseProduct(system.rhs);
  Eigen::VectorXd scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (scale[j] == 0.0) throw Error(ErrorKind::RankDeficient, column_name(system, j) + " is identically zero");
    a.col(j) /= scale[j];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols) {
    const Eigen::Index dependent = qr.colsPermutation().indices()[qr.rank()];
    throw Error(ErrorKind::RankDeficient, column_name(system, dependent) + " depends on the other columns");
  }
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  WlsSolution out;
  out.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(out.condition <= kMaxCondition))
    throw Error(ErrorKind::IllConditioned,
                "weighted system condition number " + std::to_string(out.condition) + " exceeds 1e12");
  const Eigen::VectorXd y = qr.solve(b);
  out.x = y.cwiseQuotient(scale);
  out.residual = (a * y - b).norm();
  return out;
}

}  // namespace disac
