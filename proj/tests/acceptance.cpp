// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include "disac/error.hpp"
#include "disac/harness.hpp"
#include "disac/wls.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace disac;
using namespace testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Ground-truth paths through pipeline and fusion, no noise.
Outcome oracle_roundtrip() {
  ScenarioConfig c = default_config();
  c.oracle_paths = true;
  c.add_noise = false;
  // Every scatter point becomes its own cluster.
  c.dbscan.eps = 0.01;
  c.dbscan.min_points = 1;
  double ue = 0, tgt = 0, to = 0;
  int failed = 0, missed = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<TrialDetails> d;
    const auto r = run_trial(c, 1000 + i, {TrialMode::parse("disac")}, i, &d)[0];
    if (!r.ok || !d[0].estimate) {
      ++failed;
      continue;
    }
    for (const auto& u : r.ues) {
      missed += !u.estimated;
      ue = std::max(ue, u.position_error_m);
      to = std::max(to, u.timing_error_s);
    }
    // Every fused point against its nearest planted scatter point.
    const Scene& s = d[0].scene;
    for (const auto& p : d[0].estimate->target_points) {
      double best = 1e300;
      for (const auto& t : s.targets)
        for (const auto& q : t.scatter_points) best = std::min(best, (p - q).norm());
      tgt = std::max(tgt, best);
    }
    for (const auto& t : r.targets) missed += !t.detected;
  }
  return {failed == 0 && missed == 0 && ue < 1e-6 && tgt < 1e-6 && to < 1e-12,
          fmt("max UE err %.2e m (<1e-6), max target err %.2e m (<1e-6), max TO err %.2e s (<1e-12), "
              "failed %d, missed %d",
              ue, tgt, to, failed, missed)};
}

// 2. Plant four separated paths at 30 dB and recover them.
Outcome cpd_recovery() {
  const CodebookSet cb = desk_codebooks();
  const OfdmConfig ofdm;
  int good = 0;
  double worst_angle = 0, worst_delay = 0;
  for (int s = 0; s < 100; ++s) {
    Philox rng(2000 + s, streams::kTest);
    const auto paths = separated_paths(4, rng);
    SynthesisOptions so;
    so.effective_snr_db = 30.0;
    const MeasurementTensor t =
        synthesize_from_paths(paths, half_wave_upa(8, 8), half_wave_upa(16, 16), cb, ofdm, 3000 + s, so);
    EstimatorOptions o = default_config().estimator;
    o.rank = 4;
    o.cpd.seed = s;
    const auto errs = match(estimate_paths(t, o).paths, paths, ofdm.delay_period());
    bool ok = !errs.empty();
    for (const auto& e : errs) {
      const double a = std::max(e.aoa_deg, e.aod_deg);
      worst_angle = std::max(worst_angle, a);
      worst_delay = std::max(worst_delay, e.delay_s);
      ok &= a < 1.0 && e.delay_s < 1e-9;
    }
    good += ok;
  }
  return {good >= 95, fmt("%d/100 seeds with angle err < 1 deg and delay err < 1 ns (need >= 95); worst %.3f deg, "
                          "%.3f ns",
                          good, worst_angle, worst_delay * 1e9)};
}

double covariance_error(const CodebookSet& cb, int k, double var, std::uint64_t seed) {
  Philox rng(seed, streams::kNoise);
  const Tensor5 probe = beamspace_noise(cb, k, var, rng);
  const auto& sh = probe.shape();
  const int d = static_cast<int>(probe.size());
  CMatrix acc = CMatrix::Zero(d, d);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Tensor5 n = beamspace_noise(cb, k, var, rng);
    const Eigen::Map<const CVector> v(n.data().data(), d);
    acc.noalias() += v * v.adjoint();
  }
  acc /= draws;
  // Expected entry by entry from the index tuple, row-major over
  // [RxEl, RxAz, TxEl, TxAz, K].
  const CMatrix az = cb.rx_az.matrix.adjoint() * cb.rx_az.matrix;
  const CMatrix el = cb.rx_el.matrix.adjoint() * cb.rx_el.matrix;
  auto unpack = [&](int idx) {
    std::array<int, 5> t{};
    for (int m = 4; m >= 0; --m) {
      t[m] = idx % sh[m];
      idx /= sh[m];
    }
    return t;
  };
  CMatrix expect = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const auto a = unpack(i), b = unpack(j);
      if (a[2] != b[2] || a[3] != b[3] || a[4] != b[4]) continue;
      expect(i, j) = var * az(a[1], b[1]) * el(a[0], b[0]);
    }
  return (acc - expect).norm() / expect.norm();
}

// 3. Beamspace noise covariance on small configurations (the full desk
// tensor has 131072 entries per draw).
Outcome noise_covariance() {
  const CodebookSet dft = CodebookSet::make(half_wave_upa(4, 2), half_wave_upa(2, 2), 2, 2, 1, 1);
  const double e1 = covariance_error(dft, 2, 0.7, 31);

  // Non-orthogonal receive beams make the Kronecker structure visible.
  CodebookSet skew = dft;
  Philox rng(32, streams::kTest);
  for (auto* b : {&skew.rx_az, &skew.rx_el})
    for (auto& x : b->matrix.reshaped()) x = rng.complex_normal();
  const double e2 = covariance_error(skew, 2, 1.3, 33);
  return {e1 < 0.05 && e2 < 0.05,
          fmt("relative Frobenius err %.4f (DFT beams), %.4f (random beams), tol 0.05, d = 8", e1, e2)};
}

// 4. DBSCAN against the transitive-closure reference.
Outcome dbscan_equivalence() {
  Philox rng(4, streams::kTest);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool grid = i % 2 == 0;
    const auto pts = random_cloud(rng, grid);
    const double eps = grid ? 1.0 + std::floor(rng.uniform(0, 2)) : rng.uniform(0.5, 4.0);
    const int min_points = 1 + static_cast<int>(rng.uniform() * 4);
    mismatches += dbscan(pts, eps, min_points).labels != reference_dbscan(pts, eps, min_points);
  }
  return {mismatches == 0, fmt("%d/1000 inputs differ from the reference (need 0)", mismatches)};
}

// 5. WLS against the explicit normal equations.
Outcome wls_oracle() {
  Philox rng(5, streams::kTest);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const int cols = 2 + static_cast<int>(rng.uniform() * 20);
    const int rows = cols + 1 + static_cast<int>(rng.uniform() * 30);
    LinearSystem s;
    s.coefficients.resize(rows, cols);
    s.rhs.resize(rows);
    s.weights.resize(rows);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) s.coefficients(r, c) = rng.normal();
      s.rhs[r] = rng.normal();
      s.weights[r] = rng.uniform(0.1, 3.0);
    }
    const Eigen::MatrixXd atw = s.coefficients.transpose() * s.weights.asDiagonal();
    const Eigen::VectorXd ref = (atw * s.coefficients).inverse() * (atw * s.rhs);
    worst = std::max(worst, (solve_wls(s).x - ref).norm() / ref.norm());
  }
  return {worst < 1e-9, fmt("max relative err %.2e (tol 1e-9) over 100 systems", worst)};
}

// 6. DISAC vs ISAC and WLS vs LS over 50 noisy trials.
Outcome disac_vs_isac() {
  const ScenarioConfig c = default_config();
  const int n = 50;
  const std::vector<TrialMode> modes{TrialMode::parse("disac"), TrialMode::parse("isac:0"),
                                     TrialMode::parse("isac:1"), TrialMode::parse("disac,ls")};
  const auto start = std::chrono::steady_clock::now();
  const MonteCarloResult r = run_montecarlo(c, n, modes);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<double> fused, single;
  int violations = 0;
  for (int t = 0; t < n; ++t) {
    const TrialResult& d = r.trials[4 * t];
    for (int m = 1; m <= 2; ++m) {
      const TrialResult& s = r.trials[4 * t + m];
      violations += s.detections() > d.detections();
      for (std::size_t k = 0; k < d.targets.size() && k < s.targets.size(); ++k)
        if (d.targets[k].detected && s.targets[k].detected) {
          fused.push_back(d.targets[k].error_m);
          single.push_back(s.targets[k].error_m);
        }
    }
  }
  const bool have = !fused.empty() && !r.summaries[0].target_errors.empty() && !r.summaries[3].target_errors.empty();
  const double a_d = have ? median(fused) : 0, a_i = have ? median(single) : 0;
  const double wls = have ? median(r.summaries[0].target_errors) : 0;
  const double ls = have ? median(r.summaries[3].target_errors) : 0;
  const bool a = have && a_d <= a_i, b = violations == 0, cc = have && wls <= ls;
  return {a && b && cc && secs < 600,
          fmt("(a) %s median disac %.3f m <= isac %.3f m on %zu common detections; (b) %s %d trials with isac > "
              "disac detections; (c) %s median wls %.3f m <= ls %.3f m; %.0f s (< 600 s)",
              a ? "ok" : "FAIL", a_d, a_i, fused.size(), b ? "ok" : "FAIL", violations, cc ? "ok" : "FAIL", wls, ls,
              secs)};
}

// 7. Desk-scale accuracy at 20 dB effective SNR.
Outcome desk_sanity() {
  ScenarioConfig c = default_config();
  c.add_noise = true;
  c.effective_snr_db = 20.0;
  const MonteCarloResult r = run_montecarlo(c, 50, {TrialMode::parse("disac")});
  const ModeSummary& s = r.summaries[0];
  const double tgt = s.target_errors.empty() ? 1e300 : median(s.target_errors);
  const double ue = s.ue_errors.empty() ? 1e300 : median(s.ue_errors);
  return {tgt < 0.5 && ue < 0.5,
          fmt("median target err %.3f m (< 0.5), median UE err %.3f m (< 0.5), detected %d/%d, failed trials %d",
              tgt, ue, s.targets_detected, s.targets_total, s.failed)};
}

bool same(const std::vector<EstimatedPath>& a, const std::vector<EstimatedPath>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].aoa.azimuth != b[i].aoa.azimuth || a[i].aoa.elevation != b[i].aoa.elevation ||
        a[i].delay != b[i].delay || a[i].is_los != b[i].is_los)
      return false;
  return true;
}

// 8. Clutter filter bounds and idempotence on random path lists, with
// angles drawn on the bounds now and then.
Outcome clutter_filter_property() {
  const FieldOfInterest foi = default_config().foi;
  Philox rng(8, streams::kTest);
  int out_of_bounds = 0, wrongly_dropped = 0, not_idempotent = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<EstimatedPath> paths(static_cast<std::size_t>(rng.uniform() * 12));
    for (auto& p : paths) {
      const double u = rng.uniform();
      p.aoa.azimuth = u < 0.1 ? foi.azimuth_bound : u < 0.2 ? -foi.azimuth_bound : rng.uniform(-3.14, 3.14);
      p.aoa.elevation = u < 0.15 ? -foi.elevation_bound : rng.uniform(-1.5, 1.5);
      p.delay = rng.uniform(0, 640e-9);
    }
    if (!paths.empty()) paths[static_cast<std::size_t>(rng.uniform() * paths.size())].is_los = true;
    const auto kept = clutter_filter(paths, foi);
    for (const auto& p : kept)
      if (!p.is_los)
        out_of_bounds +=
            std::abs(p.aoa.azimuth) > foi.azimuth_bound || std::abs(p.aoa.elevation) > foi.elevation_bound;
    std::size_t inside = 0;
    for (const auto& p : paths)
      inside += p.is_los ||
                (std::abs(p.aoa.azimuth) <= foi.azimuth_bound && std::abs(p.aoa.elevation) <= foi.elevation_bound);
    wrongly_dropped += kept.size() != inside;
    not_idempotent += !same(clutter_filter(kept, foi), kept);
  }
  return {out_of_bounds == 0 && wrongly_dropped == 0 && not_idempotent == 0,
          fmt("1000 lists: %d retained out of bounds, %d in-bound drops, %d not idempotent (need 0)", out_of_bounds,
              wrongly_dropped, not_idempotent)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle round-trip (noiseless)", oracle_roundtrip},
      {"CPD recovery", cpd_recovery},
      {"noise covariance", noise_covariance},
      {"DBSCAN vs reference", dbscan_equivalence},
      {"WLS vs normal equations", wls_oracle},
      {"DISAC vs ISAC, WLS vs LS", disac_vs_isac},
      {"desk-scale accuracy at 20 dB", desk_sanity},
      {"clutter filter", clutter_filter_property},
  };
  // Runtime limits that apply to the whole criterion.
  const std::vector<double> limits{10, 0, 0, 0, 0, 600, 0, 0};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limits[i] > 0 && secs >= limits[i]) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", limits[i]);
    }
    failures += !o.pass;
    std::printf("criterion %zu %s: %s -- %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
