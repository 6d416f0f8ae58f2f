#pragma once

#include "disac/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace disac {

struct CpdOptions {
  int max_iters = 500;
  // Stop when the residual drops by less than tol * ||T|| in one sweep, or
  // when the relative residual itself falls below tol.
  double tol = 1e-8;
  int restarts = 5;
  // Restart 0 starts from the GEVD solution instead of random factors when
  // the tensor shape allows it.
  bool algebraic_init = true;
  // Caller-supplied starting factors for restart 0 (takes precedence over
  // the GEVD start). Columns need not be normalized.
  std::optional<std::array<CMatrix, 5>> initial_factors;
  // A restart stops once its residual reaches this value, and the remaining
  // restarts are skipped.
  double target_residual = 0.0;
  std::uint64_t seed = 0;
};

// Rank-L CP model T ~ sum_r gains[r] * f0(:,r) o f1(:,r) o ... o f4(:,r)
// with unit-norm factor columns, ordered by |gain| descending.
struct CpFactors {
  std::array<CMatrix, 5> factors;
  CVector gains;
  // Frobenius norm of T - model.
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  int best_restart = 0;
  // Per-sweep residuals of the winning restart.
  std::vector<double> residual_history;
  // True when every restart's residual sequence was non-increasing.
  bool monotone = true;

  int rank() const { return static_cast<int>(gains.size()); }
  Tensor5 reconstruct() const { return Tensor5::from_factors(factors, gains); }
};

// Alternating least squares. Restart 0 starts from an algebraic (GEVD)
// solution when available; the others from random complex Gaussian factors
// drawn from Philox(seed + i). The best residual wins.
// Throws Error(RankDeficient) if rank exceeds what the unfoldings support.
CpFactors cpd_als(const Tensor5& tensor, int rank, const CpdOptions& options = {});

}  // namespace disac
