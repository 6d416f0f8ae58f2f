#include <doctest.h>

#include "disac/cpd.hpp"
#include "disac/error.hpp"
#include "support.hpp"

#include <algorithm>
#include <numeric>

using namespace disac;
using namespace testsupport;

namespace {

CMatrix random_unit_columns(int rows, int cols, Philox& rng) {
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
    m.col(j).normalize();
  }
  return m;
}

// Best mean |<u_hat, u>| over all column permutations (brute force).
double best_matching(const std::array<CMatrix, 5>& est, const std::array<std::vector<CVector>, 5>& truth,
                     std::vector<int>* perm_out = nullptr) {
  const int l = static_cast<int>(truth[0].size());
  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double worst = 1.0;
    for (int r = 0; r < l; ++r)
      for (int m = 0; m < 5; ++m)
        worst = std::min(worst, std::abs(est[m].col(perm[r]).normalized().dot(truth[m][r])));
    if (worst > best) {
      best = worst;
      if (perm_out) *perm_out = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("rank-1 noiseless tensor is recovered exactly") {
  Philox rng(5, streams::kTest);
  std::array<CMatrix, 5> f;
  const std::array<int, 5> dims{4, 5, 3, 6, 8};
  for (int m = 0; m < 5; ++m) f[m] = random_unit_columns(dims[m], 1, rng);
  CVector g(1);
  g[0] = cplx(2.0, -1.0);
  const Tensor5 t = Tensor5::from_factors(f, g);
  const CpFactors cp = cpd_als(t, 1);
  CHECK(cp.residual < 1e-10);
  CHECK(std::abs(cp.gains[0]) == doctest::Approx(std::abs(g[0])).epsilon(1e-8));
  Tensor5 diff = cp.reconstruct();
  diff *= -1.0;
  diff += t;
  CHECK(diff.norm() < 1e-10);
  for (int m = 0; m < 5; ++m) CHECK(cp.factors[m].col(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("zero tensor gives zero gain") {
  const Tensor5 t({3, 3, 2, 2, 4});
  const CpFactors cp = cpd_als(t, 1);
  CHECK(cp.residual == 0.0);
  CHECK(std::abs(cp.gains[0]) == 0.0);
}

TEST_CASE("rank beyond the unfoldings is rejected") {
  const Tensor5 t({2, 2, 1, 1, 2});
  try {
    (void)cpd_als(t, 9);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
  CHECK_THROWS_AS(cpd_als(t, 0), Error);
}

TEST_CASE("bad initial factors are rejected") {
  const Tensor5 t({3, 3, 2, 2, 4});
  CpdOptions o;
  std::array<CMatrix, 5> init;
  for (auto& m : init) m = CMatrix::Ones(3, 1);
  o.initial_factors = init;
  try {
    (void)cpd_als(t, 1, o);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("four separated paths at 30 dB") {
  const CodebookSet cb = desk_codebooks();
  OfdmConfig ofdm;
  int good = 0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    Philox rng(1000 + s, streams::kTest);
    const auto paths = separated_paths(4, rng);
    SynthesisOptions so;
    so.effective_snr_db = 30.0;
    const MeasurementTensor t =
        synthesize_from_paths(paths, half_wave_upa(8, 8), half_wave_upa(16, 16), cb, ofdm, 50 + s, so);
    std::array<std::vector<CVector>, 5> truth;
    for (const auto& p : paths) {
      const auto f = path_factors(p, cb, ofdm);
      for (int m = 0; m < 5; ++m) truth[m].push_back(f[m]);
    }
    CpdOptions o;
    o.seed = s;
    o.algebraic_init = false;
    const CpFactors cp = cpd_als(t.data, 4, o);
    CHECK(cp.monotone);
    good += best_matching(cp.factors, truth) > 0.99;
  }
  CHECK(good == seeds);
}

TEST_CASE("residual history is non-increasing") {
  Philox rng(8, streams::kTest);
  std::array<CMatrix, 5> f;
  const std::array<int, 5> dims{4, 4, 3, 3, 6};
  for (int m = 0; m < 5; ++m) f[m] = random_unit_columns(dims[m], 3, rng);
  CVector g(3);
  g << 3.0, 2.0, 1.0;
  Tensor5 t = Tensor5::from_factors(f, g);
  Tensor5 noise(t.shape());
  for (auto& x : noise.data()) x = rng.complex_normal(1e-4);
  t += noise;
  CpdOptions o;
  o.algebraic_init = false;
  o.restarts = 2;
  o.seed = 3;
  const CpFactors cp = cpd_als(t, 3, o);
  CHECK(cp.monotone);
  for (std::size_t i = 1; i < cp.residual_history.size(); ++i)
    CHECK(cp.residual_history[i] <= cp.residual_history[i - 1] * (1 + 1e-12));
  CHECK(std::abs(cp.gains[0]) >= std::abs(cp.gains[1]));
  CHECK(std::abs(cp.gains[1]) >= std::abs(cp.gains[2]));
}

TEST_CASE("same seed, same factors") {
  Philox rng(9, streams::kTest);
  std::array<CMatrix, 5> f;
  const std::array<int, 5> dims{3, 4, 2, 3, 5};
  for (int m = 0; m < 5; ++m) f[m] = random_unit_columns(dims[m], 2, rng);
  CVector g(2);
  g << 1.0, 0.5;
  const Tensor5 t = Tensor5::from_factors(f, g);
  CpdOptions o;
  o.seed = 77;
  o.algebraic_init = false;
  const CpFactors a = cpd_als(t, 2, o), b = cpd_als(t, 2, o);
  for (int m = 0; m < 5; ++m) CHECK((a.factors[m] - b.factors[m]).norm() == 0.0);
}
