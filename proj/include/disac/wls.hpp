#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace disac {

// Weighted linear system: minimize sum_i w_i (a_i x - b_i)^2.
struct LinearSystem {
  Eigen::MatrixXd coefficients;
  Eigen::VectorXd rhs;
  Eigen::VectorXd weights;
  // Optional names for the unknowns, used in diagnostics.
  std::vector<std::string> unknown_labels;

  Eigen::Index rows() const { return coefficients.rows(); }
  Eigen::Index unknowns() const { return coefficients.cols(); }
  void validate() const;
};

struct WlsSolution {
  Eigen::VectorXd x;
  // ||W^{1/2} (A x - b)||
  double residual = 0.0;
  // 2-norm condition number of the column-equilibrated W^{1/2} A.
  double condition = 0.0;
};

inline constexpr double kMaxCondition = 1e12;

// Column-pivoted QR of W^{1/2} A after scaling every column to unit norm
// (unknowns carry mixed units, e.g. metres and seconds). Weights are floored
// at 1e-12 of the largest weight.
// Throws Error(RankDeficient) naming a dependent column, or
// Error(IllConditioned) when the condition number exceeds kMaxCondition.
WlsSolution solve_wls(const LinearSystem& system);

}  // namespace disac
