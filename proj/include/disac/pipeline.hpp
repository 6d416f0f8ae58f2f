#pragma once

#include "disac/estimator.hpp"
#include "disac/geometry.hpp"

#include <map>
#include <vector>

namespace disac {

struct FieldOfInterest {
  double azimuth_bound = 0.0;
  double elevation_bound = 0.0;

  void validate() const;
};

// Closed box |az| <= azimuth_bound, |el| <= elevation_bound.
bool in_field_of_interest(const AnglePair& aoa, const FieldOfInterest& foi);

// Keeps the paths whose AoA lies inside the FoI, plus any path marked is_los.
std::vector<EstimatedPath> clutter_filter(const std::vector<EstimatedPath>& paths, const FieldOfInterest& foi);

struct LosDecision {
  int index = -1;
  // Another candidate sits within one delay-resolution cell of the winner.
  bool ambiguous = false;
};

// Among the ceil(n/4) strongest paths, picks the one with the smallest delay.
// Delays live on a circle of length 1/df; they are unrolled starting after
// the largest gap between neighbouring delays before comparing.
// Throws Error(InvalidArgument) on empty input.
LosDecision identify_los(const std::vector<EstimatedPath>& paths, const OfdmConfig& ofdm);

// Returns a copy with every delay re-expressed as delay[los] + ((delay -
// delay[los]) mod period), so reflected paths trail the LoS.
std::vector<EstimatedPath> unwrap_delays(const std::vector<EstimatedPath>& paths, int los_index, double period);

// Shifts a timing offset by whole periods into [window_start, window_start + period).
double fold_timing_offset(double offset, double period, double window_start);

enum class Weighting { Wls, Ls };
const char* to_string(Weighting w);

// Geometry of one path expressed in the global frame.
struct PathMeasurement {
  // Unit vector BS -> scatterer.
  Vec3 u_bs = Vec3::Zero();
  // Unit vector scatterer -> UE (the propagation direction at the UE).
  Vec3 u_v = Vec3::Zero();
  double delay = 0.0;
  double weight = 1.0;
  // Index into the estimator's (filtered) path list.
  int source_index = -1;
};

struct LosMeasurement {
  // Unit vector BS -> UE.
  Vec3 u_bs = Vec3::Zero();
  double delay = 0.0;
  double weight = 1.0;
};

struct UeMeasurements {
  int ue_id = 0;
  LosMeasurement los;
  std::vector<PathMeasurement> paths;
};

struct LocalizedPoint {
  Vec3 position = Vec3::Zero();
  int ue_id = 0;
  // Index into UeMeasurements::paths of the same UE.
  int path_index = -1;
  double weight = 0.0;
};

struct LocalizationOptions {
  Weighting weighting = Weighting::Wls;
  double speed_of_light = kSpeedOfLight;
  // Delay period 1/df; the offset estimate is folded into
  // [offset_window_start, offset_window_start + period). Ignored if <= 0.
  double delay_period = 0.0;
  double offset_window_start = 0.0;
};

struct PerUeResult {
  UeMeasurements measurements;
  // One entry per path with non-negative ranges.
  std::vector<LocalizedPoint> points;
  // Paths whose estimated r or d came out negative.
  std::vector<int> discarded;
  Vec3 ue_position = Vec3::Zero();
  double timing_offset = 0.0;
  double residual = 0.0;
};

// Turns LoS-tagged, unwrapped, filtered paths into global-frame measurements.
UeMeasurements make_measurements(const std::vector<EstimatedPath>& paths, int los_index, const Rotation& bs_orientation,
                                 const Rotation& ue_orientation, int ue_id, Weighting weighting);

// Per-UE linear system over [r_1..r_P, d_1..d_P, dt, p_v, r_LoS], solved by
// WLS. Throws Error(Underdetermined) with no reflected paths and
// Error(IllConditioned) when the solve fails its conditioning check.
PerUeResult per_ue_localize(const UeMeasurements& meas, const Vec3& p_bs, const LocalizationOptions& options);

struct ClusterLabeling {
  // Cluster id per input point, -1 for noise.
  std::vector<int> labels;
  int cluster_count = 0;
};

// DBSCAN with inclusive radius; a point's neighbourhood includes itself.
// Core points within eps of each other share a cluster. Each border point
// joins the cluster of its nearest core point (ties: the core point that
// is lexicographically smallest by coordinates). Cluster ids are numbered
// by the smallest input index they contain.
ClusterLabeling dbscan(const std::vector<Vec3>& points, double eps, int min_points);
ClusterLabeling dbscan(const std::vector<LocalizedPoint>& points, double eps, int min_points);

// cluster id -> ue id -> path indices (UeMeasurements::paths), noise omitted.
using Associations = std::map<int, std::map<int, std::vector<int>>>;
Associations build_associations(const ClusterLabeling& labeling, const std::vector<LocalizedPoint>& points);

}  // namespace disac
