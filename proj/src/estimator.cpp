#include "disac/estimator.hpp"

#include "disac/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

namespace disac {

namespace {

constexpr double kPi = std::numbers::pi;

double correlation_sq(const CVector& u, const CVector& b) {
  const double bn = b.squaredNorm();
  if (bn <= 0.0) return 0.0;
  return std::norm(u.dot(b)) / bn;
}

using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// <X_r, T> for rank-1 tensors X_r = f0(:,r) o ... o f4(:,r).
CVector project_rank_one(const Tensor5& t, const std::array<CMatrix, 5>& f) {
  const Eigen::Index rank = f[0].cols();
  const Eigen::Index rows = static_cast<Eigen::Index>(t.size() / t.dim(4));
  const Eigen::Map<const RowMajorCMatrix> tmat(t.data().data(), rows, t.dim(4));
  const CMatrix p = tmat * f[4].conjugate();
  CVector h = CVector::Zero(rank);
  for (Eigen::Index r = 0; r < rank; ++r) {
    Eigen::Index row = 0;
    cplx acc = 0.0;
    for (int i0 = 0; i0 < t.dim(0); ++i0) {
      const cplx w0 = std::conj(f[0](i0, r));
      for (int i1 = 0; i1 < t.dim(1); ++i1) {
        const cplx w1 = w0 * std::conj(f[1](i1, r));
        for (int i2 = 0; i2 < t.dim(2); ++i2) {
          const cplx w2 = w1 * std::conj(f[2](i2, r));
          for (int i3 = 0; i3 < t.dim(3); ++i3, ++row) acc += w2 * std::conj(f[3](i3, r)) * p(row, r);
        }
      }
    }
    h[r] = acc;
  }
  return h;
}

CVector hermitian_solve(const CMatrix& g, const CVector& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
  const auto& ev = eig.eigenvalues();
  const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = ev[i] > cut ? 1.0 / ev[i] : 0.0;
  return eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().adjoint() * h));
}

double cb_gram_scale(const CodebookSet& cb) {
  return cb.rx_az.matrix.colwise().squaredNorm().mean() * cb.rx_el.matrix.colwise().squaredNorm().mean();
}

std::pair<CVector, CVector> rank_one_split(const CVector& v, int rows, int cols) {
  const Eigen::Map<const RowMajorCMatrix> m(v.data(), rows, cols);
  Eigen::JacobiSVD<CMatrix> svd(CMatrix(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU().col(0) * svd.singularValues()[0], svd.matrixV().col(0).conjugate()};
}

// W^{-H} for a square invertible codebook, empty otherwise.
std::optional<CMatrix> element_space_map(const BeamCodebook& cb) {
  if (cb.beams() != cb.elements() || cb.beams() < 2) return std::nullopt;
  Eigen::FullPivLU<CMatrix> lu(cb.matrix.adjoint());
  if (!lu.isInvertible()) return std::nullopt;
  return CMatrix(lu.inverse());
}

}  // namespace

std::optional<std::array<CMatrix, 5>> shift_invariance_init(const MeasurementTensor& tensor, int rank) {
  const Tensor5& t = tensor.data;
  const int ne = t.dim(kModeRxEl), na = t.dim(kModeRxAz), pe = t.dim(kModeTxEl), pa = t.dim(kModeTxAz),
            nk = t.dim(kModeSubcarrier);
  const int ntx = pe * pa;
  if (rank < 1 || rank > ntx || nk < 2) return std::nullopt;
  const auto& cb = tensor.codebooks;
  const auto map_el = element_space_map(cb.rx_el);
  const auto map_az = element_space_map(cb.rx_az);
  Tensor5 x = t;
  if (map_el) x = x.mode_product(kModeRxEl, *map_el);
  if (map_az) x = x.mode_product(kModeRxAz, *map_az);

  // Rows (rx_el, rx_az, k), columns (tx_el, tx_az).
  const Eigen::Index rows = static_cast<Eigen::Index>(ne) * na * nk;
  if (rank > rows) return std::nullopt;
  CMatrix y(rows, ntx);
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < na; ++a)
      for (int p = 0; p < pe; ++p)
        for (int q = 0; q < pa; ++q)
          for (int k = 0; k < nk; ++k) y((static_cast<Eigen::Index>(e) * na + a) * nk + k, p * pa + q) = x(e, a, p, q, k);

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(y.adjoint() * y);
  const auto& ev = eig.eigenvalues();
  CMatrix basis(rows, rank);
  for (int j = 0; j < rank; ++j) {
    const double lam = ev[ntx - 1 - j];
    if (!(lam > 1e-24 * ev[ntx - 1])) return std::nullopt;
    basis.col(j) = y * eig.eigenvectors().col(ntx - 1 - j) / std::sqrt(lam);
  }

  struct Axis {
    Eigen::Index stride;
    int size;
    double weight;
  };
  std::vector<Axis> axes{{1, nk, 1.0}};
  if (map_az && na > 1) axes.push_back({nk, na, 0.61});
  if (map_el && ne > 1) axes.push_back({static_cast<Eigen::Index>(na) * nk, ne, 0.37});
  CMatrix psi = CMatrix::Zero(rank, rank);
  for (const auto& ax : axes) {
    std::vector<Eigen::Index> sel;
    for (Eigen::Index r = 0; r < rows; ++r)
      if ((r / ax.stride) % ax.size < ax.size - 1) sel.push_back(r);
    CMatrix lo(sel.size(), rank), hi(sel.size(), rank);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      lo.row(i) = basis.row(sel[i]);
      hi.row(i) = basis.row(sel[i] + ax.stride);
    }
    psi += ax.weight * CMatrix(lo.colPivHouseholderQr().solve(hi));
  }
  Eigen::ComplexEigenSolver<CMatrix> ces(psi);
  if (ces.info() != Eigen::Success) return std::nullopt;
  const CMatrix steer = basis * ces.eigenvectors();
  const CMatrix tx = steer.colPivHouseholderQr().solve(y);
  if (!steer.allFinite() || !tx.allFinite()) return std::nullopt;

  std::array<CMatrix, 5> f;
  for (int m = 0; m < 5; ++m) f[m].resize(t.dim(m), rank);
  for (int r = 0; r < rank; ++r) {
    const auto [el, rest] = rank_one_split(steer.col(r), ne, na * nk);
    const auto [az, delay] = rank_one_split(rest, na, nk);
    f[kModeRxEl].col(r) = map_el ? CVector(cb.rx_el.matrix.adjoint() * el) : el;
    f[kModeRxAz].col(r) = map_az ? CVector(cb.rx_az.matrix.adjoint() * az) : az;
    f[kModeSubcarrier].col(r) = delay;
    const auto [txe, txa] = rank_one_split(tx.row(r).transpose(), pe, pa);
    f[kModeTxEl].col(r) = txe;
    f[kModeTxAz].col(r) = txa;
  }
  return f;
}

AxisEstimate extract_angle(const CVector& factor, const BeamCodebook& codebook) {
  if (factor.size() < 2)
    throw Error(ErrorKind::Unidentifiable, "a single beam cannot identify a spatial frequency");
  if (factor.size() != codebook.beams())
    throw Error(ErrorKind::DimensionMismatch, "factor length does not match the codebook beam count");

  const int grid_size = std::max(512, 64 * codebook.elements());
  const double step = 2.0 * kPi / grid_size;
  std::vector<double> gain(grid_size), score(grid_size);
  double max_gain = 0.0;
  for (int g = 0; g < grid_size; ++g) {
    const CVector b = beam_response(codebook, -kPi + g * step);
    gain[g] = b.squaredNorm();
    score[g] = correlation_sq(factor, b);
    max_gain = std::max(max_gain, gain[g]);
  }
  int best = -1;
  for (int g = 0; g < grid_size; ++g) {
    if (gain[g] < 0.01 * max_gain) continue;
    if (best < 0 || score[g] > score[best]) best = g;
  }

  auto objective = [&](double w) { return correlation_sq(factor, beam_response(codebook, w)); };
  // Golden-section search on one grid cell either side of the peak.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -kPi + (best - 1) * step;
  double hi = -kPi + (best + 1) * step;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    }
  }
  AxisEstimate out;
  out.omega = wrap_angle(0.5 * (lo + hi));
  const double fn = factor.squaredNorm();
  out.correlation = fn > 0.0 ? std::sqrt(objective(out.omega) / fn) : 0.0;
  out.low_confidence = out.correlation < 0.5;
  return out;
}

AngleInversion invert_spatial_frequencies(const SpatialFrequencies& f, const UpaGeometry& geom) {
  const double scale = geom.phase_scale();
  const double uh = f.horizontal / scale;
  const double uv = f.vertical / scale;
  AngleInversion out;
  out.valid = uh * uh + uv * uv <= 1.0 + 1e-9;
  out.angles.elevation = std::asin(std::clamp(uv, -1.0, 1.0));
  const double ce = std::cos(out.angles.elevation);
  out.angles.azimuth = ce > 0.0 ? std::asin(std::clamp(uh / ce, -1.0, 1.0)) : 0.0;
  return out;
}

double extract_delay(const CVector& factor, double subcarrier_spacing) {
  if (factor.size() < 2) throw Error(ErrorKind::InvalidArgument, "delay extraction needs K >= 2");
  const Eigen::Index k = factor.size();
  // sum_k u_{k+1} conj(u_k)
  const cplx lag = factor.head(k - 1).dot(factor.tail(k - 1));
  if (std::abs(lag) < 1e-9 * factor.squaredNorm() || factor.squaredNorm() == 0.0)
    throw Error(ErrorKind::Unidentifiable, "delay factor has no usable phase progression");
  const double period = 1.0 / subcarrier_spacing;
  double tau = -std::arg(lag) / (2.0 * kPi * subcarrier_spacing);
  tau = std::fmod(tau, period);
  if (tau < 0.0) tau += period;
  if (tau >= period) tau -= period;
  return tau;
}

int select_model_order(const MeasurementTensor& tensor, int max_rank) {
  if (max_rank < 1) throw Error(ErrorKind::InvalidArgument, "max_rank must be >= 1");
  const auto& t = tensor.data;
  if (t.size() == 0) return 0;
  const double entry_var = tensor.noise_variance * cb_gram_scale(tensor.codebooks);
  const double sigma_e = std::sqrt(std::max(entry_var, 0.0));

  // Singular values of the single-mode unfoldings and of every contiguous
  // split (modes 0..k-1 against k..4). Balanced splits separate paths that
  // coincide along one axis, e.g. two paths with nearly equal delays.
  std::vector<std::pair<Eigen::VectorXd, std::array<double, 2>>> spectra;
  double s_max = 0.0;
  auto add = [&](const CMatrix& gram, double rows, double cols) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
    Eigen::VectorXd sv = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    s_max = std::max(s_max, sv.maxCoeff());
    spectra.push_back({std::move(sv), {rows, cols}});
  };
  for (int m = 1; m < 4; ++m) {
    const CMatrix y = t.unfold(m);
    add(y * y.adjoint(), y.rows(), y.cols());
  }
  for (int k = 1; k < 5; ++k) {
    Eigen::Index rows = 1;
    for (int m = 0; m < k; ++m) rows *= t.dim(m);
    const Eigen::Index cols = static_cast<Eigen::Index>(t.size()) / rows;
    const Eigen::Map<const RowMajorCMatrix> y(t.data().data(), rows, cols);
    if (rows <= cols) add(y * y.adjoint(), rows, cols);
    else add(y.adjoint() * y, rows, cols);
  }
  if (s_max == 0.0) return 0;
  int order = 0;
  for (const auto& [sv, size] : spectra) {
    const double floor = std::max(1.1 * sigma_e * (std::sqrt(size[0]) + std::sqrt(size[1])), 1e-6 * s_max);
    order = std::max(order, static_cast<int>((sv.array() > floor).count()));
  }
  return std::min(order, max_rank);
}

PathEstimates estimate_paths(const MeasurementTensor& tensor, const EstimatorOptions& options) {
  PathEstimates out;
  const int rank = options.rank ? *options.rank : select_model_order(tensor, options.max_rank);
  out.rank = rank;
  if (rank <= 0 || tensor.data.norm() == 0.0) {
    out.rank = 0;
    return out;
  }
  CpdOptions cpd = options.cpd;
  if (!cpd.initial_factors && options.shift_init) cpd.initial_factors = shift_invariance_init(tensor, rank);
  if (cpd.target_residual <= 0.0) {
    // Good enough once within 2% of the residual expected at the true
    // parameters: noise energy minus the degrees of freedom the model absorbs.
    const double entry_var = tensor.noise_variance * cb_gram_scale(tensor.codebooks);
    double dof = 1.0;
    for (int m = 0; m < 5; ++m) dof += tensor.data.dim(m) - 1;
    const double free = std::max(static_cast<double>(tensor.data.size()) - rank * dof, 1.0);
    cpd.target_residual = std::max(1.02 * std::sqrt(entry_var * free), 1e-9 * tensor.data.norm());
  }
  out.cp = cpd_als(tensor.data, rank, cpd);

  const auto& cb = tensor.codebooks;
  const int num_k = tensor.ofdm.num_subcarriers;
  const double df = tensor.ofdm.subcarrier_spacing;
  const double period = 1.0 / df;

  std::vector<EstimatedPath> paths;
  std::vector<std::array<double, 4>> omegas;
  std::array<CMatrix, 5> ideal;
  for (int m = 0; m < 4; ++m) ideal[m].resize(cb.for_mode(m).beams(), rank);
  ideal[4].resize(num_k, rank);
  // CP columns arrive strongest first, so a merged duplicate folds into the
  // stronger component.
  for (int r = 0; r < rank; ++r) {
    EstimatedPath p;
    std::array<AxisEstimate, 4> axes;
    std::array<double, 4> omega{};
    for (int m = 0; m < 4; ++m) {
      const auto& codebook = cb.for_mode(m);
      if (codebook.beams() < 2) {
        // One beam cannot resolve this axis; fall back to broadside.
        axes[m] = AxisEstimate{0.0, 0.0, true};
      } else {
        axes[m] = extract_angle(out.cp.factors[m].col(r), codebook);
      }
      omega[m] = axes[m].omega;
      p.low_confidence = p.low_confidence || axes[m].low_confidence;
    }
    const auto aoa = invert_spatial_frequencies({axes[kModeRxAz].omega, axes[kModeRxEl].omega}, tensor.rx_array);
    const auto aod = invert_spatial_frequencies({axes[kModeTxAz].omega, axes[kModeTxEl].omega}, tensor.tx_array);
    p.aoa = aoa.angles;
    p.aod = aod.angles;
    p.low_confidence = p.low_confidence || !aoa.valid || !aod.valid;
    try {
      p.delay = extract_delay(out.cp.factors[kModeSubcarrier].col(r), df);
    } catch (const Error&) {
      p.delay = 0.0;
      p.low_confidence = true;
    }

    if (options.merge_unresolved) {
      bool duplicate = false;
      for (std::size_t q = 0; q < paths.size() && !duplicate; ++q) {
        bool close = true;
        for (int m = 0; m < 4 && close; ++m)
          close = std::abs(wrap_angle(omega[m] - omegas[q][m])) <= kPi / cb.for_mode(m).elements();
        double dt = std::fmod(std::abs(p.delay - paths[q].delay), period);
        dt = std::min(dt, period - dt);
        duplicate = close && dt <= 0.5 * tensor.ofdm.delay_resolution();
      }
      if (duplicate) continue;
    }
    const int col = static_cast<int>(paths.size());
    for (int m = 0; m < 4; ++m) ideal[m].col(col) = beam_response(cb.for_mode(m), omega[m]);
    ideal[4].col(col) = delay_response(num_k, df, p.delay);
    paths.push_back(p);
    omegas.push_back(omega);
  }
  const int kept = static_cast<int>(paths.size());
  for (auto& f : ideal) f.conservativeResize(Eigen::NoChange, kept);

  CMatrix gram = CMatrix::Ones(kept, kept);
  for (int m = 0; m < 5; ++m) gram = gram.cwiseProduct(ideal[m].adjoint() * ideal[m]);
  const CVector gains = hermitian_solve(gram, project_rank_one(tensor.data, ideal));
  for (int r = 0; r < kept; ++r) paths[r].gain = gains[r] / tensor.tx_amplitude;

  std::stable_sort(paths.begin(), paths.end(), [](const EstimatedPath& a, const EstimatedPath& b) {
    const double ga = std::abs(a.gain), gb = std::abs(b.gain);
    if (ga != gb) return ga > gb;
    return a.delay < b.delay;
  });
  out.paths = std::move(paths);
  return out;
}

}  // namespace disac
