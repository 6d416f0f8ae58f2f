#pragma once

#include "disac/pipeline.hpp"
#include "disac/wls.hpp"

#include <vector>

namespace disac {

// Column layout of the joint system: [r_1..r_M, d_(m,n) for every observed
// (target, UE) pair in target-major order, dt_1..dt_N, p_1..p_N (3 each),
// rLoS_1..rLoS_N].
struct JointLayout {
  std::vector<int> cluster_ids;
  std::vector<int> ue_ids;
  // pair_column[m][n] is the column of d_(m,n), or -1 when UE n never saw target m.
  std::vector<std::vector<int>> pair_column;
  int num_pairs = 0;

  int targets() const { return static_cast<int>(cluster_ids.size()); }
  int ues() const { return static_cast<int>(ue_ids.size()); }
  int range_column(int m) const { return m; }
  int offset_column(int n) const { return targets() + num_pairs + n; }
  int position_column(int n) const { return targets() + num_pairs + ues() + 3 * n; }
  int los_column(int n) const { return targets() + num_pairs + 4 * ues() + n; }
  int unknowns() const { return targets() + num_pairs + 5 * ues(); }
};

struct JointSystem {
  LinearSystem system;
  JointLayout layout;
};

// Stacks 4 rows per associated path and 4 LoS rows per UE. Throws
// Error(InvalidArgument) for unknown UEs or path indices, and
// Error(Underdetermined) when rows < unknowns.
JointSystem build_joint_system(const Associations& associations, const std::vector<UeMeasurements>& ues,
                               const Vec3& p_bs, double speed_of_light);

struct SceneEstimate {
  std::vector<int> ue_ids;
  std::vector<Vec3> ue_positions;
  std::vector<double> ue_timing_offsets;
  std::vector<double> los_ranges;
  // Valid targets only (non-negative BS range).
  std::vector<int> target_cluster_ids;
  std::vector<Vec3> target_points;
  std::vector<double> bs_target_ranges;
  // Clusters dropped for a negative BS range.
  std::vector<int> invalid_clusters;
  double residual = 0.0;
  double condition = 0.0;
  Eigen::VectorXd solution;
  std::vector<std::string> unknown_labels;
};

struct FusionOptions {
  double speed_of_light = kSpeedOfLight;
  // See LocalizationOptions.
  double delay_period = 0.0;
  double offset_window_start = 0.0;
};

// Reads positions, offsets and ranges out of the solution; each target point
// is p_BS + u r_m with u the |gain|-weighted, renormalized mean of the
// cluster's BS-side directions.
SceneEstimate extract_estimate(const WlsSolution& solution, const JointSystem& joint, const Vec3& p_bs,
                               const Associations& associations, const std::vector<UeMeasurements>& ues,
                               const FusionOptions& options);

// build_joint_system + solve_wls + extract_estimate. Throws
// Error(InvalidArgument) when no UE is given.
SceneEstimate run_fusion(const std::vector<UeMeasurements>& ues, const Associations& associations, const Vec3& p_bs,
                         const FusionOptions& options);

}  // namespace disac
