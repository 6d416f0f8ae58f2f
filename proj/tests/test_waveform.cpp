#include <doctest.h>

#include "disac/cpd.hpp"
#include "disac/error.hpp"
#include "disac/waveform.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace disac;
using namespace testsupport;
using std::numbers::pi;

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST_CASE("dft codebook examples") {
  const auto one = dft_codebook(1, 1);
  REQUIRE(one.matrix.rows() == 1);
  CHECK(std::abs(one.matrix(0, 0) - cplx(1, 0)) < 1e-15);

  const auto sq = dft_codebook(4, 4);
  CHECK((sq.matrix.adjoint() * sq.matrix - 4.0 * CMatrix::Identity(4, 4)).norm() < 1e-12);

  const auto thin = dft_codebook(8, 4);
  REQUIRE(thin.matrix.rows() == 8);
  REQUIRE(thin.matrix.cols() == 4);
  const CMatrix g = thin.matrix.adjoint() * thin.matrix;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(g(i, j)) < 1e-12);
  // Beams are centred on broadside.
  CHECK(thin.beam_indices == std::vector<int>{6, 7, 0, 1});

  CHECK_THROWS_AS(dft_codebook(4, 5), Error);
}

TEST_CASE("channel matrix examples") {
  const UpaGeometry tx = half_wave_upa(2, 2), rx = half_wave_upa(2, 1);
  PathRecord p;
  p.gain = 1.0;
  const CMatrix h = channel_matrix({p}, tx, rx, 0, 1.5625e6);
  CHECK((h - CMatrix::Ones(2, 4)).norm() < 1e-14);

  p.gain = cplx(0.3, -0.2);
  p.delay = 123.4e-9;
  p.aoa = {0.3, 0.1};
  p.aod = {-0.2, 0.25};
  const double df = 1.5625e6;
  const CMatrix h0 = channel_matrix({p}, tx, rx, 0, df);
  const CMatrix h1 = channel_matrix({p}, tx, rx, 1, df);
  const cplx ratio = std::polar(1.0, -2 * pi * p.delay * df);
  CHECK((h1 - ratio * h0).norm() < 1e-13);

  PathRecord q = p;
  q.delay = 50e-9;
  q.aoa = {-0.5, 0.0};
  const CMatrix both = channel_matrix({p, q}, tx, rx, 3, df);
  CHECK((both - channel_matrix({p}, tx, rx, 3, df) - channel_matrix({q}, tx, rx, 3, df)).norm() < 1e-13);
}

TEST_CASE("noiseless tensor equals the beamformed channel") {
  const Scene s = hand_scene({Vec3(25, 3, 1.5)}, {{Vec3(50, 1, 1), Vec3(51, 2, 1.3)}});
  const auto paths = generate_ground_truth_paths(s, 0);
  OfdmConfig ofdm;
  ofdm.num_subcarriers = 8;
  ofdm.bandwidth = ofdm.subcarrier_spacing * 8;
  const UpaGeometry rx = half_wave_upa(4, 4), tx = half_wave_upa(4, 2);
  const CodebookSet cb = CodebookSet::make(rx, tx, 4, 2, 2, 2);
  SynthesisOptions so;
  so.add_noise = false;
  const MeasurementTensor t = synthesize_from_paths(paths, rx, tx, cb, ofdm, 0, so);

  // Element ordering is (horizontal, vertical), so W = W_az (x) W_el.
  const CMatrix w_rx = kron(cb.rx_az.matrix, cb.rx_el.matrix);
  const CMatrix f_tx = kron(cb.tx_az.matrix, cb.tx_el.matrix);
  for (int k = 0; k < 8; ++k) {
    const CMatrix y = ofdm.tx_amplitude() * w_rx.adjoint() * channel_matrix(paths, tx, rx, k, ofdm.subcarrier_spacing) * f_tx;
    for (int a = 0; a < 4; ++a)
      for (int e = 0; e < 2; ++e)
        for (int q = 0; q < 2; ++q)
          for (int p = 0; p < 2; ++p)
            CHECK(std::abs(t.data(e, a, p, q, k) - y(a * 2 + e, q * 2 + p)) < 1e-9 * y.norm());
  }
}

TEST_CASE("tensor synthesis trivial cases") {
  OfdmConfig ofdm;
  const UpaGeometry rx = half_wave_upa(8, 8), tx = half_wave_upa(16, 16);
  const CodebookSet cb = CodebookSet::make(rx, tx, 8, 8, 8, 4);
  SynthesisOptions quiet;
  quiet.add_noise = false;

  const MeasurementTensor zero = synthesize_from_paths({}, rx, tx, cb, ofdm, 1, quiet);
  CHECK(zero.data.norm() == 0.0);
  CHECK(zero.data.shape() == Tensor5::Shape{8, 8, 4, 8, 64});

  PathRecord p;
  p.gain = cplx(1e-5, 2e-5);
  p.delay = 77e-9;
  p.aoa = {0.2, -0.1};
  p.aod = {0.1, 0.05};
  const MeasurementTensor one = synthesize_from_paths({p}, rx, tx, cb, ofdm, 1, quiet);
  const CpFactors cp = cpd_als(one.data, 1);
  CHECK(cp.residual < 1e-10 * one.data.norm());
  CHECK(std::abs(cp.gains[0]) == doctest::Approx(one.data.norm()).epsilon(1e-9));

  const UpaGeometry wrong = half_wave_upa(4, 8);
  CHECK_THROWS_AS(synthesize_from_paths({p}, wrong, tx, cb, ofdm, 1, quiet), Error);
}

TEST_CASE("effective SNR sets the noise level") {
  const Scene s = hand_scene({Vec3(25, 3, 1.5)}, {{Vec3(50, 1, 1)}});
  const auto paths = generate_ground_truth_paths(s, 0);
  OfdmConfig ofdm;
  const UpaGeometry rx = half_wave_upa(8, 8), tx = half_wave_upa(16, 16);
  const CodebookSet cb = CodebookSet::make(rx, tx, 8, 8, 8, 4);
  SynthesisOptions quiet;
  quiet.add_noise = false;
  const MeasurementTensor clean = synthesize_from_paths(paths, rx, tx, cb, ofdm, 5, quiet);
  SynthesisOptions noisy;
  noisy.effective_snr_db = 10.0;
  const MeasurementTensor t = synthesize_from_paths(paths, rx, tx, cb, ofdm, 5, noisy);
  Tensor5 n = t.data;
  Tensor5 c = clean.data;
  c *= -1.0;
  n += c;
  const double snr = clean.data.squared_norm() / n.squared_norm();
  CHECK(10 * std::log10(snr) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("beamspace noise covariance per receive block") {
  // Pools the receive-beam block over every (tx beam, subcarrier) cell and
  // compares to sigma^2 (W_az^H W_az (x) W_el^H W_el).
  const UpaGeometry rx = half_wave_upa(4, 3), tx = half_wave_upa(2, 1);
  const CodebookSet cb = CodebookSet::make(rx, tx, 3, 2, 1, 1);
  const double var = 2.5;
  const int k = 16;
  const int d = 6;
  CMatrix s = CMatrix::Zero(d, d);
  int draws = 0;
  for (int rep = 0; rep < 500; ++rep) {
    Philox rng(100 + rep, streams::kNoise);
    const Tensor5 n = beamspace_noise(cb, k, var, rng);
    for (int kk = 0; kk < k; ++kk) {
      CVector v(d);
      for (int a = 0; a < 3; ++a)
        for (int e = 0; e < 2; ++e) v[a * 2 + e] = n(e, a, 0, 0, kk);
      s += v * v.adjoint();
      ++draws;
    }
  }
  s /= draws;
  const CMatrix expected =
      var * kron(cb.rx_az.matrix.adjoint() * cb.rx_az.matrix, cb.rx_el.matrix.adjoint() * cb.rx_el.matrix);
  CHECK((s - expected).norm() / expected.norm() < 0.05);
}
