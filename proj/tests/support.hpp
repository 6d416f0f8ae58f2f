#pragma once

#include "disac/config.hpp"
#include "disac/rng.hpp"
#include "disac/scene.hpp"
#include "disac/waveform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace testsupport {

using namespace disac;

inline UpaGeometry half_wave_upa(int nx, int ny, double carrier = 15e9) {
  const double lambda = kSpeedOfLight / carrier;
  return {nx, ny, lambda / 2, lambda};
}

// BS at (0,0,14) tilted down 22 deg, UEs on the ground facing +x.
inline Scene hand_scene(const std::vector<Vec3>& ues, const std::vector<std::vector<Vec3>>& targets,
                        const std::vector<double>& offsets = {}) {
  Scene s;
  s.tx.position = Vec3(0, 0, 14);
  s.tx.orientation = orientation_from_yaw_downtilt(0.0, 22.0 * std::numbers::pi / 180.0);
  s.tx.array = half_wave_upa(16, 16);
  for (std::size_t i = 0; i < ues.size(); ++i) {
    ReceiverNode rx;
    rx.id = static_cast<int>(i);
    rx.position = ues[i];
    rx.timing_offset = i < offsets.size() ? offsets[i] : 0.0;
    rx.array = half_wave_upa(8, 8);
    s.receivers.push_back(rx);
  }
  for (std::size_t m = 0; m < targets.size(); ++m) {
    ExtendedTarget t;
    t.id = static_cast<int>(m);
    t.scatter_points = targets[m];
    t.reflectivities.assign(targets[m].size(), 1.0);
    s.targets.push_back(t);
  }
  s.phase_seed = 11;
  return s;
}

// Smallest angular distance between two directions, in radians.
inline double angle_between(const AnglePair& a, const AnglePair& b) {
  const double c = direction_from_angles(a).dot(direction_from_angles(b));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace testsupport

namespace testsupport {

// Desk-scale codebooks: UE 8x8 with 8x8 beams, BS 16x16 with 8x4 beams.
inline CodebookSet desk_codebooks() {
  return CodebookSet::make(half_wave_upa(8, 8), half_wave_upa(16, 16), 8, 8, 8, 4);
}

// Unit-norm beamspace factors of one path, in tensor mode order.
inline std::array<CVector, 5> path_factors(const PathRecord& p, const CodebookSet& cb, const OfdmConfig& ofdm) {
  const auto rx = spatial_frequencies(p.aoa, half_wave_upa(cb.rx_az.elements(), cb.rx_el.elements()));
  const auto tx = spatial_frequencies(p.aod, half_wave_upa(cb.tx_az.elements(), cb.tx_el.elements()));
  std::array<CVector, 5> f{beam_response(cb.rx_el, rx.vertical), beam_response(cb.rx_az, rx.horizontal),
                           beam_response(cb.tx_el, tx.vertical), beam_response(cb.tx_az, tx.horizontal),
                           delay_response(ofdm.num_subcarriers, ofdm.subcarrier_spacing, p.delay)};
  for (auto& v : f) v.normalize();
  return f;
}

// L paths spread over the field of view: azimuths and delays on distinct
// grid cells with a random jitter, so every pair is well separated.
inline std::vector<PathRecord> separated_paths(int count, Philox& rng) {
  std::vector<PathRecord> out;
  const double az0 = rng.uniform(-0.2, 0.2);
  for (int l = 0; l < count; ++l) {
    PathRecord p;
    p.gain = std::polar(rng.uniform(0.5, 1.0) * 1e-5, rng.uniform(0.0, 2 * std::numbers::pi));
    p.aoa = {az0 + 0.4 * (l - count / 2.0) + rng.uniform(-0.03, 0.03), rng.uniform(-0.3, 0.3)};
    p.aod = {-az0 / 2 + 0.15 * (l - count / 2.0) + rng.uniform(-0.02, 0.02), rng.uniform(-0.15, 0.1)};
    p.delay = 60e-9 + 120e-9 * l + rng.uniform(-10e-9, 10e-9);
    out.push_back(p);
  }
  return out;
}

}  // namespace testsupport

namespace testsupport {

// Reference DBSCAN: reachability by transitive closure of the core
// adjacency matrix, border points to the nearest core point (ties to the
// lexicographically smallest core), labels numbered by first appearance.
inline std::vector<int> reference_dbscan(const std::vector<Vec3>& pts, double eps, int min_points) {
  const int n = static_cast<int>(pts.size());
  auto near = [&](int i, int j) {
    const Vec3 d = pts[i] - pts[j];
    return d.x() * d.x() + d.y() * d.y() + d.z() * d.z() <= eps * eps;
  };
  std::vector<bool> core(n);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (int j = 0; j < n; ++j) c += near(i, j);
    core[i] = c >= min_points;
  }
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) reach[i][j] = core[i] && core[j] && near(i, j);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  // Representative of each core point: its smallest reachable index.
  std::vector<int> rep(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (int j = 0; j < n && rep[i] < 0; ++j)
      if (reach[i][j]) rep[i] = j;
  }
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (!core[j] || !near(i, j)) continue;
      if (best < 0) {
        best = j;
        continue;
      }
      const double dj = (pts[i] - pts[j]).squaredNorm(), db = (pts[i] - pts[best]).squaredNorm();
      const bool lex = std::lexicographical_compare(pts[j].data(), pts[j].data() + 3, pts[best].data(),
                                                    pts[best].data() + 3);
      if (dj < db || (dj == db && lex)) best = j;
    }
    if (best >= 0) rep[i] = rep[best];
  }
  std::vector<int> labels(n, -1), id_of(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (rep[i] < 0) continue;
    if (id_of[rep[i]] < 0) id_of[rep[i]] = next++;
    labels[i] = id_of[rep[i]];
  }
  return labels;
}

// Small random point sets; integer-grid draws force exact eps boundaries
// and distance ties.
inline std::vector<Vec3> random_cloud(Philox& rng, bool grid) {
  const int n = 1 + static_cast<int>(rng.uniform() * 20);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    if (grid)
      pts.emplace_back(std::floor(rng.uniform(0, 5)), std::floor(rng.uniform(0, 5)), std::floor(rng.uniform(0, 2)));
    else
      pts.emplace_back(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 3));
  }
  return pts;
}

// The UPA cannot tell front from back; compare arrivals on the front side.
inline Vec3 front(const AnglePair& a) {
  Vec3 d = direction_from_angles(a);
  d.x() = std::abs(d.x());
  return d;
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

struct PathError {
  double aoa_deg, aod_deg, delay_s;
};

// Assignment minimizing total normalized error, by exhaustive search.
// Empty when there are fewer estimates than true paths.
inline std::vector<PathError> match(const std::vector<EstimatedPath>& est, const std::vector<PathRecord>& truth, double period) {
  const int n = static_cast<int>(truth.size());
  if (est.size() < truth.size()) return {};
  std::vector<int> perm(est.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto err = [&](int e, int t) {
    double dt = std::fmod(std::abs(est[e].delay - std::fmod(truth[t].delay, period)), period);
    dt = std::min(dt, period - dt);
    return PathError{angle_deg(front(est[e].aoa), front(truth[t].aoa)),
                     angle_deg(direction_from_angles(est[e].aod), direction_from_angles(truth[t].aod)), dt};
  };
  double best = 1e300;
  std::vector<PathError> out;
  do {
    double cost = 0;
    std::vector<PathError> cur;
    for (int t = 0; t < n; ++t) {
      const auto e = err(perm[t], t);
      cost += e.aoa_deg + e.aod_deg + e.delay_s * 1e9;
      cur.push_back(e);
    }
    if (cost < best) {
      best = cost;
      out = cur;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace testsupport
