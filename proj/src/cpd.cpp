#include "disac/cpd.hpp"

#include "disac/error.hpp"
#include "disac/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace disac {

namespace {

using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Solves X V = M for Hermitian PSD V (X, M: rows x L) with a pseudo-inverse
// cut at 1e-13 of the largest eigenvalue.
CMatrix solve_right_hermitian(const CMatrix& v, const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(v);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cut = 1e-13 * std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = ev[i] > cut ? 1.0 / ev[i] : 0.0;
  const CMatrix& u = eig.eigenvectors();
  // V^{-1} = U diag(inv) U^H; X = M V^{-1}.
  return (m * u) * inv.asDiagonal() * u.adjoint();
}

// Top `count` left singular vectors from a Hermitian Gram matrix.
CMatrix leading_vectors(const CMatrix& gram, int count) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  const Eigen::Index n = gram.rows();
  // Eigenvalues ascend; take the last `count` columns in descending order.
  CMatrix out(n, count);
  for (int j = 0; j < count; ++j) out.col(j) = eig.eigenvectors().col(n - 1 - j);
  return out;
}

// Splits a vector of length rows*cols (row-major) into its best rank-1 pair.
std::pair<CVector, CVector> rank_one_split(const CVector& v, int rows, int cols) {
  const Eigen::Map<const RowMajorCMatrix> m(v.data(), rows, cols);
  Eigen::JacobiSVD<CMatrix> svd(CMatrix(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s = svd.singularValues()[0];
  return {svd.matrixU().col(0) * s, svd.matrixV().col(0).conjugate()};
}

// Algebraic initialisation: view the tensor as rx (R_el*R_az) x tx
// (T_el*T_az) x K, mix the tx mode with its two dominant singular vectors,
// and diagonalise the resulting slice pencil (GEVD). Exact for noiseless
// tensors of rank <= min(rx beams, K) with distinct pencil eigenvalues.
std::optional<std::array<CMatrix, 5>> gevd_init(const Tensor5& t, int rank) {
  const int ni = t.dim(0) * t.dim(1);
  const int nc = t.dim(2) * t.dim(3);
  const int nk = t.dim(4);
  if (rank > ni || rank > nk || nc < 2) return std::nullopt;
  const Eigen::Map<const RowMajorCMatrix> m(t.data().data(), static_cast<Eigen::Index>(ni) * nc, nk);

  CMatrix gram_c = CMatrix::Zero(nc, nc);
  for (int i = 0; i < ni; ++i) {
    const auto block = m.middleRows(static_cast<Eigen::Index>(i) * nc, nc);
    gram_c.noalias() += block * block.adjoint();
  }
  const CMatrix v = leading_vectors(gram_c, 2);
  CMatrix x1(ni, nk), x2(ni, nk);
  for (int i = 0; i < ni; ++i) {
    const auto block = m.middleRows(static_cast<Eigen::Index>(i) * nc, nc);
    x1.row(i) = v.col(0).adjoint() * block;
    x2.row(i) = v.col(1).adjoint() * block;
  }
  const Eigen::Map<const RowMajorCMatrix> unfold_i(t.data().data(), ni, static_cast<Eigen::Index>(nc) * nk);
  const CMatrix u = leading_vectors(unfold_i * unfold_i.adjoint(), rank);
  const CMatrix w = leading_vectors(m.transpose() * m.conjugate(), rank);
  const CMatrix s1 = u.adjoint() * x1 * w.conjugate();
  const CMatrix s2 = u.adjoint() * x2 * w.conjugate();
  Eigen::PartialPivLU<CMatrix> lu(s2);
  if (!(std::abs(lu.determinant()) > 0.0)) return std::nullopt;
  Eigen::ComplexEigenSolver<CMatrix> eig(s1 * lu.inverse());
  if (eig.info() != Eigen::Success) return std::nullopt;
  const CMatrix a = u * eig.eigenvectors();
  if (!a.allFinite()) return std::nullopt;

  // Remaining (tx, K) factors by least squares given the rx factor.
  const CMatrix z = a.completeOrthogonalDecomposition().solve(CMatrix(unfold_i));
  std::array<CMatrix, 5> f;
  for (int mode = 0; mode < 5; ++mode) f[mode].resize(t.dim(mode), rank);
  for (int r = 0; r < rank; ++r) {
    const auto [rx_el, rx_az] = rank_one_split(a.col(r), t.dim(0), t.dim(1));
    const CVector zr = z.row(r).transpose();
    const auto [tx, delay] = rank_one_split(zr, nc, nk);
    const auto [tx_el, tx_az] = rank_one_split(tx, t.dim(2), t.dim(3));
    f[0].col(r) = rx_el;
    f[1].col(r) = rx_az;
    f[2].col(r) = tx_el;
    f[3].col(r) = tx_az;
    f[4].col(r) = delay;
  }
  for (int mode = 0; mode < 5; ++mode) {
    if (!f[mode].allFinite()) return std::nullopt;
    for (int r = 0; r < rank; ++r) {
      const double n = f[mode].col(r).norm();
      if (n > 0.0) f[mode].col(r) /= n;
      else f[mode](0, r) = 1.0;
    }
  }
  return f;
}

class AlsRun {
 public:
  AlsRun(const Tensor5& t, int rank) : t_(t), rank_(rank) {
    for (int m = 0; m < 5; ++m) dims_[m] = t.dim(m);
    rows4_ = static_cast<Eigen::Index>(t.size() / dims_[4]);
    tmat_ = Eigen::Map<const RowMajorCMatrix>(t.data().data(), rows4_, dims_[4]);
    norm2_ = t.squared_norm();
  }

  void init_random(Philox& rng) {
    for (int m = 0; m < 5; ++m) {
      a_[m].resize(dims_[m], rank_);
      for (Eigen::Index r = 0; r < rank_; ++r) {
        for (int i = 0; i < dims_[m]; ++i) a_[m](i, r) = rng.complex_normal();
        const double n = a_[m].col(r).norm();
        if (n > 0.0) a_[m].col(r) /= n;
      }
    }
    lambda_ = CVector::Ones(rank_);
  }

  void init_factors(const std::array<CMatrix, 5>& f) {
    a_ = f;
    lambda_ = CVector::Ones(rank_);
    for (int m = 0; m < 5; ++m) {
      for (Eigen::Index r = 0; r < rank_; ++r) {
        const double n = a_[m].col(r).norm();
        if (n > 0.0) {
          a_[m].col(r) /= n;
        } else {
          a_[m].col(r).setZero();
          a_[m](0, r) = 1.0;
        }
      }
    }
  }

  // One ALS sweep over all five modes; returns the squared residual.
  double sweep() {
    // P4 = T_(0123 x 4) conj(A4): contraction of the subcarrier mode.
    p4_ = tmat_ * a_[4].conjugate();
    for (int n = 0; n < 4; ++n) update(n, mttkrp_spatial(n));
    const CMatrix m4 = tmat_.transpose() * conj_khatri_rao_spatial();
    update(4, m4);
    // <T, model> = sum conj(A4 diag(lambda)) .* M4.
    const CMatrix b4 = a_[4] * lambda_.asDiagonal();
    const double inner = (b4.conjugate().cwiseProduct(m4)).sum().real();
    return std::max(0.0, norm2_ - 2.0 * inner + model_norm2());
  }

  double explicit_residual2() const {
    Tensor5 model = Tensor5::from_factors(a_, lambda_);
    double s = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) s += std::norm(t_.data()[i] - model.data()[i]);
    return s;
  }

  const std::array<CMatrix, 5>& factors() const { return a_; }
  const CVector& lambda() const { return lambda_; }

 private:
  CMatrix gram_hadamard(int skip) const {
    CMatrix v = CMatrix::Ones(rank_, rank_);
    for (int m = 0; m < 5; ++m)
      if (m != skip) v = v.cwiseProduct(a_[m].adjoint() * a_[m]);
    return v;
  }

  double model_norm2() const {
    CMatrix v = gram_hadamard(-1);
    // Lambda enters as lambda_s^* lambda_r on entry (s, r).
    v = lambda_.conjugate().asDiagonal() * v * lambda_.asDiagonal();
    return v.sum().real();
  }

  // M_n for a spatial mode n < 4 from the cached P4.
  CMatrix mttkrp_spatial(int n) const {
    CMatrix out = CMatrix::Zero(dims_[n], rank_);
    std::array<CMatrix, 4> c;
    for (int m = 0; m < 4; ++m) {
      if (m == n) c[m] = CMatrix::Ones(dims_[m], rank_);
      else c[m] = a_[m].conjugate();
    }
    for (Eigen::Index r = 0; r < rank_; ++r) {
      Eigen::Index row = 0;
      int idx[4];
      for (idx[0] = 0; idx[0] < dims_[0]; ++idx[0]) {
        const cplx w0 = c[0](idx[0], r);
        for (idx[1] = 0; idx[1] < dims_[1]; ++idx[1]) {
          const cplx w1 = w0 * c[1](idx[1], r);
          for (idx[2] = 0; idx[2] < dims_[2]; ++idx[2]) {
            const cplx w2 = w1 * c[2](idx[2], r);
            for (idx[3] = 0; idx[3] < dims_[3]; ++idx[3], ++row) {
              out(idx[n], r) += w2 * c[3](idx[3], r) * p4_(row, r);
            }
          }
        }
      }
    }
    return out;
  }

  // Rows of conj(A0) (.) conj(A1) (.) conj(A2) (.) conj(A3) in row-major order.
  CMatrix conj_khatri_rao_spatial() const {
    CMatrix q(rows4_, rank_);
    for (Eigen::Index r = 0; r < rank_; ++r) {
      Eigen::Index row = 0;
      for (int i0 = 0; i0 < dims_[0]; ++i0) {
        const cplx w0 = std::conj(a_[0](i0, r));
        for (int i1 = 0; i1 < dims_[1]; ++i1) {
          const cplx w1 = w0 * std::conj(a_[1](i1, r));
          for (int i2 = 0; i2 < dims_[2]; ++i2) {
            const cplx w2 = w1 * std::conj(a_[2](i2, r));
            for (int i3 = 0; i3 < dims_[3]; ++i3, ++row) q(row, r) = w2 * std::conj(a_[3](i3, r));
          }
        }
      }
    }
    return q;
  }

  void update(int n, const CMatrix& mttkrp) {
    // Normal equations B conj(V) = M with V = hadamard of the other Grams.
    const CMatrix v = gram_hadamard(n);
    CMatrix b = solve_right_hermitian(v.conjugate(), mttkrp);
    for (Eigen::Index r = 0; r < rank_; ++r) {
      const double norm = b.col(r).norm();
      if (norm > 0.0) {
        a_[n].col(r) = b.col(r) / norm;
        lambda_[r] = norm;
      } else {
        lambda_[r] = 0.0;
      }
    }
  }

  const Tensor5& t_;
  int rank_;
  std::array<int, 5> dims_{};
  Eigen::Index rows4_ = 0;
  RowMajorCMatrix tmat_;
  double norm2_ = 0.0;
  std::array<CMatrix, 5> a_;
  CVector lambda_;
  CMatrix p4_;
};

}  // namespace

CpFactors cpd_als(const Tensor5& tensor, int rank, const CpdOptions& options) {
  if (rank < 1) throw Error(ErrorKind::InvalidArgument, "CP rank must be >= 1");
  for (int m = 0; m < 5; ++m) {
    if (tensor.dim(m) < 1) throw Error(ErrorKind::InvalidArgument, "tensor has an empty mode");
    const std::size_t others = tensor.size() / tensor.dim(m);
    if (static_cast<std::size_t>(rank) > others)
      throw Error(ErrorKind::RankDeficient, "rank " + std::to_string(rank) + " exceeds the column count (" +
                                                std::to_string(others) + ") of the mode-" + std::to_string(m) +
                                                " unfolding");
  }
  if (options.restarts < 1 || options.max_iters < 1)
    throw Error(ErrorKind::InvalidArgument, "CPD needs at least one restart and one iteration");

  std::optional<std::array<CMatrix, 5>> init = options.initial_factors;
  if (init) {
    for (int m = 0; m < 5; ++m)
      if ((*init)[m].rows() != tensor.dim(m) || (*init)[m].cols() != rank || !(*init)[m].allFinite())
        throw Error(ErrorKind::DimensionMismatch, "initial factors do not match the tensor shape and rank");
  }

  CpFactors best;
  const double tnorm = tensor.norm();
  if (tnorm == 0.0) {
    for (int m = 0; m < 5; ++m) {
      best.factors[m] = CMatrix::Zero(tensor.dim(m), rank);
      best.factors[m].row(0).setOnes();
    }
    best.gains = CVector::Zero(rank);
    best.residual = 0.0;
    best.converged = true;
    best.residual_history = {0.0};
    return best;
  }

  double best_res = std::numeric_limits<double>::infinity();
  bool all_monotone = true;
  // Rounding slack for the expanded-norm residual formula.
  const double slack = 1e-10 * tnorm;
  for (int restart = 0; restart < options.restarts; ++restart) {
    Philox rng(options.seed + static_cast<std::uint64_t>(restart), streams::kCpdInit);
    AlsRun run(tensor, rank);
    if (restart == 0 && (init || (options.algebraic_init && (init = gevd_init(tensor, rank))))) {
      run.init_factors(*init);
    } else {
      run.init_random(rng);
    }
    std::vector<double> history;
    bool converged = false;
    double prev = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
      double res = std::sqrt(run.sweep());
      // The expanded formula cannot resolve residuals near machine precision.
      if (res < 1e-5 * tnorm) res = std::sqrt(run.explicit_residual2());
      if (res > prev + slack) all_monotone = false;
      history.push_back(res);
      if (res < options.tol * tnorm || prev - res < options.tol * tnorm || res <= options.target_residual) {
        converged = true;
        ++iter;
        break;
      }
      prev = res;
    }
    const double final_res = std::sqrt(run.explicit_residual2());
    if (final_res < best_res) {
      best_res = final_res;
      best.factors = run.factors();
      best.gains = run.lambda();
      best.residual = final_res;
      best.converged = converged;
      best.iterations = iter;
      best.best_restart = restart;
      best.residual_history = std::move(history);
    }
    if (best_res <= options.target_residual) break;
  }
  best.monotone = all_monotone;

  // Order components by |gain| descending (stable).
  std::vector<int> order(rank);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(best.gains[a]) > std::abs(best.gains[b]); });
  CpFactors sorted = best;
  for (int j = 0; j < rank; ++j) {
    sorted.gains[j] = best.gains[order[j]];
    for (int m = 0; m < 5; ++m) sorted.factors[m].col(j) = best.factors[m].col(order[j]);
  }
  return sorted;
}

}  // namespace disac
