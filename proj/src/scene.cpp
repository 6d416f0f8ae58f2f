#include "disac/scene.hpp"

#include "disac/error.hpp"
#include "disac/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace disac {

namespace {

constexpr std::uint64_t kPhaseLos = 0;
constexpr std::uint64_t kPhaseTarget = 1;
constexpr std::uint64_t kPhaseClutter = 2;

cplx random_phasor(const Scene& scene, int rx_id, std::uint64_t kind, std::uint64_t index) {
  const double u = hashed_uniform(scene.phase_seed, static_cast<std::uint64_t>(rx_id), kind, index);
  return std::polar(1.0, 2.0 * std::numbers::pi * u);
}

PathRecord bounce_path(const Scene& scene, const ReceiverNode& rx, const Vec3& point, double reflectivity,
                       cplx phasor, PathLabel label) {
  const Vec3 to_point = point - scene.tx.position;
  const Vec3 point_to_rx = rx.position - point;
  const double r = to_point.norm();
  const double d = point_to_rx.norm();
  PathRecord p;
  p.gain = reflectivity * scene.wavelength() / (4.0 * std::numbers::pi * (r + d)) * phasor;
  p.delay = (r + d) / scene.speed_of_light + rx.timing_offset;
  p.aod = local_angles(scene.tx.orientation, to_point);
  // Arrival direction points from the receiver back towards the scatterer.
  p.aoa = local_angles(rx.orientation, -point_to_rx);
  p.label = label;
  return p;
}

Vec3 sample_in(const Box& box, Philox& rng) {
  return {rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
          rng.uniform(box.lo.z(), box.hi.z())};
}

void validate_box(const Box& box, const char* name) {
  const Vec3 e = box.extent();
  if (!is_finite(box.lo) || !is_finite(box.hi) || e.minCoeff() < 0.0 || e.x() <= 0.0 || e.y() <= 0.0)
    throw Error(ErrorKind::InvalidArgument, std::string("degenerate sampling box: ") + name);
}

bool far_from_all(const Vec3& p, const std::vector<Vec3>& others, double min_sep) {
  for (const auto& o : others)
    if ((p - o).norm() < min_sep) return false;
  return true;
}

bool inside_sector(const AnglePair& a, double az_bound, double el_bound) {
  return std::abs(a.azimuth) <= az_bound && std::abs(a.elevation) <= el_bound;
}

}  // namespace

AnglePair local_angles(const Rotation& orientation, const Vec3& global_dir) {
  return angles_from_direction(orientation.transpose() * global_dir);
}

Vec3 global_direction(const Rotation& orientation, const AnglePair& local) {
  return orientation * direction_from_angles(local);
}

const ReceiverNode& Scene::receiver(int rx_id) const {
  for (const auto& rx : receivers)
    if (rx.id == rx_id) return rx;
  throw Error(ErrorKind::InvalidArgument, "unknown receiver id " + std::to_string(rx_id));
}

void Scene::validate() const {
  tx.array.validate();
  if (!is_finite(tx.position) || !is_rotation(tx.orientation))
    throw Error(ErrorKind::InvalidArgument, "transmitter pose is invalid");
  std::vector<Vec3> positions{tx.position};
  for (const auto& rx : receivers) {
    rx.array.validate();
    if (!is_finite(rx.position) || rx.position.z() <= 0.0)
      throw Error(ErrorKind::InvalidArgument, "receiver " + std::to_string(rx.id) + " must be above ground");
    if (!is_rotation(rx.orientation))
      throw Error(ErrorKind::InvalidArgument, "receiver " + std::to_string(rx.id) + " orientation is not a rotation");
    if (!std::isfinite(rx.timing_offset))
      throw Error(ErrorKind::InvalidArgument, "receiver timing offset must be finite");
    positions.push_back(rx.position);
  }
  for (const auto& t : targets) {
    if (t.scatter_points.empty() || t.scatter_points.size() != t.reflectivities.size())
      throw Error(ErrorKind::InvalidArgument, "target " + std::to_string(t.id) + " needs matching points/reflectivities");
    for (std::size_t i = 0; i < t.scatter_points.size(); ++i) {
      if (!is_finite(t.scatter_points[i]) || t.reflectivities[i] < 0.0)
        throw Error(ErrorKind::InvalidArgument, "target " + std::to_string(t.id) + " has an invalid scatter point");
      for (std::size_t j = 0; j < i; ++j)
        if ((t.scatter_points[i] - t.scatter_points[j]).norm() > 6.0)
          throw Error(ErrorKind::InvalidArgument, "target " + std::to_string(t.id) + " exceeds 6 m extent");
    }
    positions.push_back(t.scatter_points.front());
  }
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if ((positions[i] - positions[j]).norm() == 0.0)
        throw Error(ErrorKind::InvalidArgument, "scene positions must be distinct");
  if (!(speed_of_light > 0.0)) throw Error(ErrorKind::InvalidArgument, "speed of light must be positive");
}

double path_delay(const Scene& scene, int rx_id, const Vec3& scatter_point) {
  const auto& rx = scene.receiver(rx_id);
  const double geometric = (scatter_point - scene.tx.position).norm() + (rx.position - scatter_point).norm();
  return geometric / scene.speed_of_light + rx.timing_offset;
}

std::vector<PathRecord> generate_ground_truth_paths(const Scene& scene, int rx_id) {
  const auto& rx = scene.receiver(rx_id);
  std::vector<PathRecord> paths;
  if (!rx.los_blocked) {
    const Vec3 bs_to_rx = rx.position - scene.tx.position;
    const double r = bs_to_rx.norm();
    PathRecord los;
    los.gain = scene.wavelength() / (4.0 * std::numbers::pi * r) * random_phasor(scene, rx_id, kPhaseLos, 0);
    los.delay = r / scene.speed_of_light + rx.timing_offset;
    los.aod = local_angles(scene.tx.orientation, bs_to_rx);
    los.aoa = local_angles(rx.orientation, -bs_to_rx);
    los.label = PathLabel::los();
    paths.push_back(los);
  }
  for (const auto& target : scene.targets) {
    for (std::size_t i = 0; i < target.scatter_points.size(); ++i) {
      if (!(target.reflectivities[i] > 0.0)) continue;
      const std::uint64_t key = (static_cast<std::uint64_t>(target.id) << 20) | i;
      paths.push_back(bounce_path(scene, rx, target.scatter_points[i], target.reflectivities[i],
                                  random_phasor(scene, rx_id, kPhaseTarget, key),
                                  PathLabel::target(target.id, static_cast<int>(i))));
    }
  }
  for (std::size_t c = 0; c < scene.clutter.size(); ++c) {
    const auto& sc = scene.clutter[c];
    if (!(sc.reflectivity > 0.0)) continue;
    paths.push_back(bounce_path(scene, rx, sc.position, sc.reflectivity, random_phasor(scene, rx_id, kPhaseClutter, c),
                                PathLabel::clutter(static_cast<int>(c))));
  }
  return paths;
}

bool Box::contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

void SceneSampling::validate() const {
  tx_array.validate();
  ue_array.validate();
  if (num_ues < 0 || num_targets < 0 || num_clutter < 0 || points_per_target < 0)
    throw Error(ErrorKind::InvalidArgument, "scene counts must be non-negative");
  if (num_targets > 0 && points_per_target < 1)
    throw Error(ErrorKind::InvalidArgument, "targets need at least one scatter point");
  if (2.0 * target_half_extent.norm() > 6.0 + 1e-12)
    throw Error(ErrorKind::InvalidArgument, "target extent exceeds 6 m diameter");
  if (min_separation < 0.0 || min_point_separation < 0.0 || max_timing_offset < 0.0)
    throw Error(ErrorKind::InvalidArgument, "separations and timing offset range must be non-negative");
  if (max_attempts < 1) throw Error(ErrorKind::InvalidArgument, "max_attempts must be >= 1");
  if (num_ues > 0) validate_box(ue_box, "ue_box");
  if (num_targets > 0) validate_box(target_box, "target_box");
  if (num_clutter > 0) validate_box(clutter_box, "clutter_box");
  if (ue_box.lo.z() <= 0.0 && num_ues > 0)
    throw Error(ErrorKind::InvalidArgument, "ue_box must lie above ground");
}

Scene random_scene(const SceneSampling& s, std::uint64_t seed) {
  s.validate();
  Philox rng(seed, streams::kScene);

  Scene scene;
  scene.phase_seed = seed;
  scene.tx.position = s.tx_position;
  scene.tx.orientation = orientation_from_yaw_downtilt(s.tx_yaw, s.tx_downtilt);
  scene.tx.array = s.tx_array;

  std::vector<Vec3> occupied{s.tx_position};
  auto place = [&](const Box& box, double min_sep, const std::vector<Vec3>& avoid, const char* what) {
    for (int attempt = 0; attempt < s.max_attempts; ++attempt) {
      const Vec3 p = sample_in(box, rng);
      if (far_from_all(p, avoid, min_sep)) return p;
    }
    throw Error(ErrorKind::Infeasible, std::string("could not place ") + what + " after max_attempts draws");
  };

  // Pigeonhole: two objects never fit in a box whose diagonal is below the separation.
  if (s.num_ues >= 2 && s.ue_box.extent().norm() < s.min_separation)
    throw Error(ErrorKind::Infeasible, "ue_box is smaller than the minimum separation");
  if (s.num_targets >= 2 && s.target_box.extent().norm() < s.min_separation)
    throw Error(ErrorKind::Infeasible, "target_box is smaller than the minimum separation");

  const Rotation ue_rot = orientation_from_yaw_downtilt(s.ue_yaw, 0.0);
  for (int n = 0; n < s.num_ues; ++n) {
    ReceiverNode rx;
    rx.id = n;
    rx.position = place(s.ue_box, s.min_separation, occupied, "receiver");
    rx.orientation = ue_rot;
    rx.timing_offset = rng.uniform(-s.max_timing_offset, s.max_timing_offset);
    rx.array = s.ue_array;
    occupied.push_back(rx.position);
    scene.receivers.push_back(rx);
  }

  std::vector<Vec3> centres;
  for (int m = 0; m < s.num_targets; ++m) {
    std::vector<Vec3> avoid = occupied;
    avoid.insert(avoid.end(), centres.begin(), centres.end());
    const Vec3 centre = place(s.target_box, s.min_separation, avoid, "target");
    centres.push_back(centre);
    ExtendedTarget t;
    t.id = m;
    const Box body{centre - s.target_half_extent, centre + s.target_half_extent};
    for (int q = 0; q < s.points_per_target; ++q) {
      Vec3 p = centre;
      int attempt = 0;
      for (; attempt < s.max_attempts; ++attempt) {
        p = sample_in(body, rng);
        if (far_from_all(p, t.scatter_points, s.min_point_separation)) break;
      }
      if (attempt == s.max_attempts)
        throw Error(ErrorKind::Infeasible, "could not place scatter points with the requested separation");
      t.scatter_points.push_back(p);
      t.reflectivities.push_back(rng.uniform(s.target_reflectivity_min, s.target_reflectivity_max));
    }
    scene.targets.push_back(std::move(t));
  }
  for (const auto& t : scene.targets) occupied.insert(occupied.end(), t.scatter_points.begin(), t.scatter_points.end());

  for (int c = 0; c < s.num_clutter; ++c) {
    const bool want_inside = rng.uniform() < s.clutter_in_foi_fraction;
    bool placed = false;
    for (int attempt = 0; attempt < s.max_attempts && !placed; ++attempt) {
      const Vec3 p = sample_in(s.clutter_box, rng);
      if (!far_from_all(p, occupied, s.min_point_separation)) continue;
      bool ok = true;
      for (const auto& rx : scene.receivers) {
        const Vec3 local = rx.orientation.transpose() * (p - rx.position);
        const AnglePair a = angles_from_direction(local);
        const bool in_front = local.x() > 0.0;
        const bool inside = inside_sector(a, s.foi_azimuth, s.foi_elevation);
        const bool outside_margin =
            !inside_sector(a, s.foi_azimuth + s.foi_margin, s.foi_elevation + s.foi_margin);
        if (want_inside ? !(in_front && inside) : !(in_front && outside_margin)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      scene.clutter.push_back({p, rng.uniform(s.clutter_reflectivity_min, s.clutter_reflectivity_max)});
      occupied.push_back(p);
      placed = true;
    }
    if (!placed) throw Error(ErrorKind::Infeasible, "could not place clutter scatterer");
  }
  return scene;
}

}  // namespace disac
