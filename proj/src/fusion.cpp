#include "disac/fusion.hpp"

#include "disac/error.hpp"

#include <string>

namespace disac {

namespace {

int ue_slot(const std::vector<UeMeasurements>& ues, int ue_id) {
  for (int n = 0; n < static_cast<int>(ues.size()); ++n)
    if (ues[n].ue_id == ue_id) return n;
  return -1;
}

}  // namespace

JointSystem build_joint_system(const Associations& associations, const std::vector<UeMeasurements>& ues,
                               const Vec3& p_bs, double speed_of_light) {
  if (ues.empty()) throw Error(ErrorKind::InvalidArgument, "joint system needs at least one UE");
  JointSystem out;
  JointLayout& lay = out.layout;
  for (const auto& u : ues) lay.ue_ids.push_back(u.ue_id);
  const int num_ues = lay.ues();

  std::vector<int> path_rows(num_ues, 0);
  for (const auto& [cluster, members] : associations) {
    if (members.empty()) throw Error(ErrorKind::InvalidArgument, "cluster " + std::to_string(cluster) + " is empty");
    lay.cluster_ids.push_back(cluster);
    for (const auto& [ue_id, paths] : members) {
      const int n = ue_slot(ues, ue_id);
      if (n < 0)
        throw Error(ErrorKind::InvalidArgument,
                    "cluster " + std::to_string(cluster) + " references unknown UE " + std::to_string(ue_id));
      if (paths.empty())
        throw Error(ErrorKind::InvalidArgument, "cluster " + std::to_string(cluster) + " lists no paths for UE " +
                                                    std::to_string(ue_id));
      for (int idx : paths)
        if (idx < 0 || idx >= static_cast<int>(ues[n].paths.size()))
          throw Error(ErrorKind::InvalidArgument,
                      "path index " + std::to_string(idx) + " out of range for UE " + std::to_string(ue_id));
      path_rows[n] += 4 * static_cast<int>(paths.size());
    }
  }
  const int num_targets = lay.targets();
  lay.pair_column.assign(num_targets, std::vector<int>(num_ues, -1));
  {
    int m = 0;
    for (const auto& [cluster, members] : associations) {
      for (int n = 0; n < num_ues; ++n)
        if (members.count(lay.ue_ids[n])) lay.pair_column[m][n] = num_targets + lay.num_pairs++;
      ++m;
    }
  }

  // Each UE block carries 5 own unknowns plus one d per target it sees.
  for (int n = 0; n < num_ues; ++n) {
    int pairs = 0;
    for (int m = 0; m < num_targets; ++m) pairs += lay.pair_column[m][n] >= 0;
    if (4 + path_rows[n] < 5 + pairs)
      throw Error(ErrorKind::Underdetermined, "UE " + std::to_string(lay.ue_ids[n]) + " block has " +
                                                  std::to_string(4 + path_rows[n]) + " rows for " +
                                                  std::to_string(5 + pairs) + " unknowns");
  }

  int total_rows = 4 * num_ues;
  for (int r : path_rows) total_rows += r;
  const int unknowns = lay.unknowns();
  if (total_rows < unknowns)
    throw Error(ErrorKind::Underdetermined,
                std::to_string(total_rows) + " rows for " + std::to_string(unknowns) + " unknowns");

  LinearSystem& sys = out.system;
  sys.coefficients = Eigen::MatrixXd::Zero(total_rows, unknowns);
  sys.rhs = Eigen::VectorXd::Zero(total_rows);
  sys.weights = Eigen::VectorXd::Zero(total_rows);
  const double c = speed_of_light;

  int row = 0;
  int m = 0;
  for (const auto& [cluster, members] : associations) {
    for (const auto& [ue_id, paths] : members) {
      const int n = ue_slot(ues, ue_id);
      const int col_d = lay.pair_column[m][n];
      for (int idx : paths) {
        const auto& p = ues[n].paths[idx];
        for (int a = 0; a < 3; ++a) {
          sys.coefficients(row + a, lay.range_column(m)) = p.u_bs[a];
          sys.coefficients(row + a, col_d) = p.u_v[a];
          sys.coefficients(row + a, lay.position_column(n) + a) = -1.0;
          sys.rhs[row + a] = -p_bs[a];
        }
        sys.coefficients(row + 3, lay.range_column(m)) = 1.0;
        sys.coefficients(row + 3, col_d) = 1.0;
        sys.coefficients(row + 3, lay.offset_column(n)) = c;
        sys.rhs[row + 3] = c * p.delay;
        sys.weights.segment(row, 4).setConstant(p.weight);
        row += 4;
      }
    }
    ++m;
  }
  for (int n = 0; n < num_ues; ++n) {
    const auto& los = ues[n].los;
    for (int a = 0; a < 3; ++a) {
      sys.coefficients(row + a, lay.position_column(n) + a) = 1.0;
      sys.coefficients(row + a, lay.los_column(n)) = -los.u_bs[a];
      sys.rhs[row + a] = p_bs[a];
    }
    sys.coefficients(row + 3, lay.los_column(n)) = 1.0;
    sys.coefficients(row + 3, lay.offset_column(n)) = c;
    sys.rhs[row + 3] = c * los.delay;
    sys.weights.segment(row, 4).setConstant(los.weight);
    row += 4;
  }

  auto& labels = sys.unknown_labels;
  labels.resize(unknowns);
  for (int t = 0; t < num_targets; ++t) {
    labels[lay.range_column(t)] = "r[" + std::to_string(lay.cluster_ids[t]) + "]";
    for (int n = 0; n < num_ues; ++n)
      if (lay.pair_column[t][n] >= 0)
        labels[lay.pair_column[t][n]] =
            "d[" + std::to_string(lay.cluster_ids[t]) + "," + std::to_string(lay.ue_ids[n]) + "]";
  }
  for (int n = 0; n < num_ues; ++n) {
    const std::string id = std::to_string(lay.ue_ids[n]);
    labels[lay.offset_column(n)] = "dt[" + id + "]";
    labels[lay.position_column(n)] = "px[" + id + "]";
    labels[lay.position_column(n) + 1] = "py[" + id + "]";
    labels[lay.position_column(n) + 2] = "pz[" + id + "]";
    labels[lay.los_column(n)] = "rlos[" + id + "]";
  }
  return out;
}

SceneEstimate extract_estimate(const WlsSolution& solution, const JointSystem& joint, const Vec3& p_bs,
                               const Associations& associations, const std::vector<UeMeasurements>& ues,
                               const FusionOptions& options) {
  const JointLayout& lay = joint.layout;
  if (solution.x.size() != lay.unknowns())
    throw Error(ErrorKind::DimensionMismatch, "solution length does not match the joint layout");
  SceneEstimate est;
  est.residual = solution.residual;
  est.condition = solution.condition;
  est.solution = solution.x;
  est.unknown_labels = joint.system.unknown_labels;
  for (int n = 0; n < lay.ues(); ++n) {
    est.ue_ids.push_back(lay.ue_ids[n]);
    est.ue_positions.push_back(solution.x.segment<3>(lay.position_column(n)));
    est.ue_timing_offsets.push_back(
        fold_timing_offset(solution.x[lay.offset_column(n)], options.delay_period, options.offset_window_start));
    est.los_ranges.push_back(solution.x[lay.los_column(n)]);
  }
  int m = 0;
  for (const auto& [cluster, members] : associations) {
    const double r = solution.x[lay.range_column(m)];
    ++m;
    if (r < 0.0) {
      est.invalid_clusters.push_back(cluster);
      continue;
    }
    Vec3 u = Vec3::Zero();
    for (const auto& [ue_id, paths] : members) {
      const int n = ue_slot(ues, ue_id);
      for (int idx : paths) u += ues[n].paths[idx].weight * ues[n].paths[idx].u_bs;
    }
    const double norm = u.norm();
    if (!(norm > 0.0)) {
      est.invalid_clusters.push_back(cluster);
      continue;
    }
    est.target_cluster_ids.push_back(cluster);
    est.target_points.push_back(p_bs + u / norm * r);
    est.bs_target_ranges.push_back(r);
  }
  return est;
}

SceneEstimate run_fusion(const std::vector<UeMeasurements>& ues, const Associations& associations, const Vec3& p_bs,
                         const FusionOptions& options) {
  if (ues.empty()) throw Error(ErrorKind::InvalidArgument, "fusion needs at least one UE");
  const JointSystem joint = build_joint_system(associations, ues, p_bs, options.speed_of_light);
  const WlsSolution sol = solve_wls(joint.system);
  return extract_estimate(sol, joint, p_bs, associations, ues, options);
}

}  // namespace disac
