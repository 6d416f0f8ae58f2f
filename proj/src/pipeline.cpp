#include "disac/pipeline.hpp"

#include "disac/error.hpp"
#include "disac/wls.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace disac {

namespace {

double positive_mod(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

}  // namespace

void FieldOfInterest::validate() const {
  const double half_pi = std::numbers::pi / 2.0;
  if (!(azimuth_bound > 0.0 && azimuth_bound <= half_pi) || !(elevation_bound > 0.0 && elevation_bound <= half_pi))
    throw Error(ErrorKind::InvalidArgument, "field-of-interest bounds must lie in (0, pi/2]");
}

bool in_field_of_interest(const AnglePair& aoa, const FieldOfInterest& foi) {
  return std::abs(aoa.azimuth) <= foi.azimuth_bound && std::abs(aoa.elevation) <= foi.elevation_bound;
}

std::vector<EstimatedPath> clutter_filter(const std::vector<EstimatedPath>& paths, const FieldOfInterest& foi) {
  std::vector<EstimatedPath> out;
  for (const auto& p : paths)
    if (p.is_los || in_field_of_interest(p.aoa, foi)) out.push_back(p);
  return out;
}

LosDecision identify_los(const std::vector<EstimatedPath>& paths, const OfdmConfig& ofdm) {
  if (paths.empty()) throw Error(ErrorKind::InvalidArgument, "cannot identify the LoS path among zero paths");
  const double period = ofdm.delay_period();
  const int n = static_cast<int>(paths.size());

  std::vector<double> folded(n);
  for (int i = 0; i < n; ++i) folded[i] = positive_mod(paths[i].delay, period);
  std::vector<double> sorted = folded;
  std::sort(sorted.begin(), sorted.end());
  // Start of the unrolled axis: the delay right after the widest gap.
  double origin = sorted.front();
  double widest = sorted.front() + period - sorted.back();
  for (int i = 1; i < n; ++i) {
    const double gap = sorted[i] - sorted[i - 1];
    if (gap > widest) {
      widest = gap;
      origin = sorted[i];
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(paths[a].gain) > std::abs(paths[b].gain); });
  const int candidates = (n + 3) / 4;

  LosDecision out;
  double best = 0.0;
  for (int c = 0; c < candidates; ++c) {
    const int i = order[c];
    const double t = positive_mod(folded[i] - origin, period);
    if (out.index < 0 || t < best || (t == best && i < out.index)) {
      out.index = i;
      best = t;
    }
  }
  const double cell = ofdm.delay_resolution();
  for (int c = 0; c < candidates; ++c) {
    const int i = order[c];
    if (i == out.index) continue;
    const double diff = positive_mod(folded[i] - folded[out.index], period);
    if (std::min(diff, period - diff) < cell) out.ambiguous = true;
  }
  return out;
}

std::vector<EstimatedPath> unwrap_delays(const std::vector<EstimatedPath>& paths, int los_index, double period) {
  if (los_index < 0 || los_index >= static_cast<int>(paths.size()))
    throw Error(ErrorKind::InvalidArgument, "LoS index out of range");
  if (!(period > 0.0)) throw Error(ErrorKind::InvalidArgument, "delay period must be positive");
  std::vector<EstimatedPath> out = paths;
  const double ref = paths[los_index].delay;
  for (auto& p : out) p.delay = ref + positive_mod(p.delay - ref, period);
  out[los_index].delay = ref;
  return out;
}

double fold_timing_offset(double offset, double period, double window_start) {
  if (!(period > 0.0)) return offset;
  return offset - period * std::floor((offset - window_start) / period);
}

const char* to_string(Weighting w) { return w == Weighting::Wls ? "wls" : "ls"; }

UeMeasurements make_measurements(const std::vector<EstimatedPath>& paths, int los_index, const Rotation& bs_orientation,
                                 const Rotation& ue_orientation, int ue_id, Weighting weighting) {
  if (los_index < 0 || los_index >= static_cast<int>(paths.size()))
    throw Error(ErrorKind::InvalidArgument, "LoS index out of range");
  auto weight_of = [&](const EstimatedPath& p) { return weighting == Weighting::Wls ? std::abs(p.gain) : 1.0; };
  UeMeasurements m;
  m.ue_id = ue_id;
  const auto& los = paths[los_index];
  m.los.u_bs = global_direction(bs_orientation, los.aod);
  m.los.delay = los.delay;
  m.los.weight = weight_of(los);
  for (int i = 0; i < static_cast<int>(paths.size()); ++i) {
    if (i == los_index) continue;
    const auto& p = paths[i];
    PathMeasurement pm;
    pm.u_bs = global_direction(bs_orientation, p.aod);
    // The AoA points from the UE towards the scatterer; propagation runs the other way.
    pm.u_v = -global_direction(ue_orientation, p.aoa);
    pm.delay = p.delay;
    pm.weight = weight_of(p);
    pm.source_index = i;
    m.paths.push_back(pm);
  }
  return m;
}

PerUeResult per_ue_localize(const UeMeasurements& meas, const Vec3& p_bs, const LocalizationOptions& options) {
  const int np = static_cast<int>(meas.paths.size());
  if (np == 0)
    throw Error(ErrorKind::Underdetermined,
                "UE " + std::to_string(meas.ue_id) + " has no reflected paths left to localize");
  const double c = options.speed_of_light;
  const int col_dt = 2 * np;
  const int col_pv = 2 * np + 1;
  const int col_los = 2 * np + 4;
  const int unknowns = 2 * np + 5;
  const int rows = 4 * np + 4;

  LinearSystem sys;
  sys.coefficients = Eigen::MatrixXd::Zero(rows, unknowns);
  sys.rhs = Eigen::VectorXd::Zero(rows);
  sys.weights = Eigen::VectorXd::Zero(rows);
  for (int m = 0; m < np; ++m) {
    const auto& p = meas.paths[m];
    const int r0 = 4 * m;
    for (int a = 0; a < 3; ++a) {
      sys.coefficients(r0 + a, m) = p.u_bs[a];
      sys.coefficients(r0 + a, np + m) = p.u_v[a];
      sys.coefficients(r0 + a, col_pv + a) = -1.0;
      sys.rhs[r0 + a] = -p_bs[a];
    }
    sys.coefficients(r0 + 3, m) = 1.0;
    sys.coefficients(r0 + 3, np + m) = 1.0;
    sys.coefficients(r0 + 3, col_dt) = c;
    sys.rhs[r0 + 3] = c * p.delay;
    sys.weights.segment(r0, 4).setConstant(p.weight);
  }
  const int r0 = 4 * np;
  for (int a = 0; a < 3; ++a) {
    sys.coefficients(r0 + a, col_pv + a) = 1.0;
    sys.coefficients(r0 + a, col_los) = -meas.los.u_bs[a];
    sys.rhs[r0 + a] = p_bs[a];
  }
  sys.coefficients(r0 + 3, col_los) = 1.0;
  sys.coefficients(r0 + 3, col_dt) = c;
  sys.rhs[r0 + 3] = c * meas.los.delay;
  sys.weights.segment(r0, 4).setConstant(meas.los.weight);

  for (int m = 0; m < np; ++m) sys.unknown_labels.push_back("r_" + std::to_string(m));
  for (int m = 0; m < np; ++m) sys.unknown_labels.push_back("d_" + std::to_string(m));
  sys.unknown_labels.insert(sys.unknown_labels.end(), {"dt", "p_x", "p_y", "p_z", "r_los"});

  const WlsSolution sol = solve_wls(sys);
  PerUeResult out;
  out.measurements = meas;
  out.residual = sol.residual;
  out.ue_position = sol.x.segment<3>(col_pv);
  out.timing_offset = fold_timing_offset(sol.x[col_dt], options.delay_period, options.offset_window_start);
  for (int m = 0; m < np; ++m) {
    const double r = sol.x[m];
    const double d = sol.x[np + m];
    if (r < 0.0 || d < 0.0) {
      out.discarded.push_back(m);
      continue;
    }
    LocalizedPoint pt;
    pt.position = p_bs + meas.paths[m].u_bs * r;
    pt.ue_id = meas.ue_id;
    pt.path_index = m;
    pt.weight = meas.paths[m].weight;
    out.points.push_back(pt);
  }
  return out;
}

Associations build_associations(const ClusterLabeling& labeling, const std::vector<LocalizedPoint>& points) {
  if (labeling.labels.size() != points.size())
    throw Error(ErrorKind::DimensionMismatch, "labeling and point list differ in length");
  Associations out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int label = labeling.labels[i];
    if (label < 0) continue;
    out[label][points[i].ue_id].push_back(points[i].path_index);
  }
  return out;
}

}  // namespace disac
