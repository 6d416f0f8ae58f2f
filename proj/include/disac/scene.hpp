#pragma once

#include "disac/geometry.hpp"

#include <cstdint>
#include <vector>

namespace disac {

struct TransmitterNode {
  Vec3 position = Vec3::Zero();
  Rotation orientation = Rotation::Identity();
  UpaGeometry array;
};

struct ReceiverNode {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Rotation orientation = Rotation::Identity();
  // Measured delays are geometric delay + timing_offset.
  double timing_offset = 0.0;
  UpaGeometry array;
  bool los_blocked = false;
};

struct ExtendedTarget {
  int id = 0;
  std::vector<Vec3> scatter_points;
  std::vector<double> reflectivities;
};

struct ClutterScatterer {
  Vec3 position = Vec3::Zero();
  double reflectivity = 0.0;
};

struct Scene {
  TransmitterNode tx;
  std::vector<ReceiverNode> receivers;
  std::vector<ExtendedTarget> targets;
  std::vector<ClutterScatterer> clutter;
  double speed_of_light = kSpeedOfLight;
  // Keys the per-path random phases.
  std::uint64_t phase_seed = 0;

  const ReceiverNode& receiver(int rx_id) const;
  double wavelength() const { return tx.array.wavelength; }
  void validate() const;
};

enum class PathKind { LoS, Target, Clutter };

struct PathLabel {
  PathKind kind = PathKind::LoS;
  int target_id = -1;
  int point_index = -1;
  int clutter_index = -1;

  static PathLabel los() { return {}; }
  static PathLabel target(int id, int point) { return {PathKind::Target, id, point, -1}; }
  static PathLabel clutter(int index) { return {PathKind::Clutter, -1, -1, index}; }
};

struct PathRecord {
  cplx gain;
  double delay = 0.0;
  AnglePair aoa;
  AnglePair aod;
  PathLabel label;
};

// Bistatic delay through `scatter_point`, including the receiver's offset.
double path_delay(const Scene& scene, int rx_id, const Vec3& scatter_point);

// LoS (unless blocked), one path per target scatter point with positive
// reflectivity, one path per clutter scatterer. Gains follow a free-space
// amplitude model |g| = rho * lambda / (4 pi (r + d)) with a random phase
// derived from the scene's phase seed.
std::vector<PathRecord> generate_ground_truth_paths(const Scene& scene, int rx_id);

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p) const;
};

// Sampling regions and counts for Monte Carlo scenes.
struct SceneSampling {
  Vec3 tx_position{0.0, 0.0, 14.0};
  double tx_yaw = 0.0;
  double tx_downtilt = 0.0;
  UpaGeometry tx_array;
  UpaGeometry ue_array;

  int num_ues = 2;
  Box ue_box;
  double ue_yaw = 0.0;

  int num_targets = 2;
  int points_per_target = 3;
  Box target_box;
  // Scatter points are placed within +-target_half_extent of the centre.
  Vec3 target_half_extent{2.0, 0.8, 0.4};
  double min_point_separation = 0.5;
  double target_reflectivity_min = 0.5;
  double target_reflectivity_max = 1.0;

  int num_clutter = 4;
  Box clutter_box;
  double clutter_reflectivity_min = 0.3;
  double clutter_reflectivity_max = 1.0;
  // Clutter is kept out of every UE's forward sector (plus margin) and in
  // front of every UE, except for this fraction which lands inside it.
  double clutter_in_foi_fraction = 0.0;
  double foi_azimuth = 0.0;
  double foi_elevation = 0.0;
  double foi_margin = 0.0;

  double min_separation = 5.0;
  double max_timing_offset = 200e-9;
  int max_attempts = 10000;

  void validate() const;
};

// Deterministic in `seed`. Throws Error(Infeasible) when rejection sampling
// cannot satisfy the separation constraints.
Scene random_scene(const SceneSampling& sampling, std::uint64_t seed);

// Local-frame angles of a global direction for a node with `orientation`.
AnglePair local_angles(const Rotation& orientation, const Vec3& global_direction);
Vec3 global_direction(const Rotation& orientation, const AnglePair& local);

}  // namespace disac
