#pragma once

#include "disac/cpd.hpp"
#include "disac/geometry.hpp"
#include "disac/waveform.hpp"

#include <optional>
#include <vector>

namespace disac {

struct AxisEstimate {
  // Electrical phase step between adjacent elements (rad).
  double omega = 0.0;
  // Normalized correlation |u^H b(omega)| / (||u|| ||b(omega)||) at the peak.
  double correlation = 0.0;
  bool low_confidence = false;
};

// Maximizes the normalized correlation between `factor` and the beamspace
// response of one array axis over a dense omega grid on [-pi, pi], then
// refines by golden-section search to 1e-6 rad. Grid points where the
// codebook gain is more than 20 dB below its peak are skipped.
// Throws Error(Unidentifiable) for factors of length < 2.
AxisEstimate extract_angle(const CVector& factor, const BeamCodebook& codebook);

// Inverts the per-axis direction cosines (horizontal = cos el sin az,
// vertical = sin el) into a front-hemisphere AnglePair. `valid` is false when
// the point lies outside the unit disc (beyond a 1e-9 tolerance).
struct AngleInversion {
  AnglePair angles;
  bool valid = true;
};
AngleInversion invert_spatial_frequencies(const SpatialFrequencies& f, const UpaGeometry& geom);

// Shift-invariance delay estimate -angle(sum u_{k+1} u_k^*) / (2 pi df),
// folded into [0, 1/df). Throws Error(Unidentifiable) when the lag-one
// product is below 1e-9 ||u||^2.
double extract_delay(const CVector& factor, double subcarrier_spacing);

struct EstimatedPath {
  cplx gain;
  double delay = 0.0;
  AnglePair aoa;
  AnglePair aod;
  bool low_confidence = false;
  // Set by the pipeline once the LoS path has been identified.
  bool is_los = false;
};

// Smallest L such that, for every unfolding considered (single modes and
// the contiguous splits modes 0..k-1 | k..4), singular values beyond index
// L fall below the noise floor 1.1 sigma_e (sqrt(rows) + sqrt(cols)), where
// sigma_e^2 is the beamspace noise variance per entry. The floor never
// drops below 1e-6 of the largest singular value. Capped at max_rank.
int select_model_order(const MeasurementTensor& tensor, int max_rank);

// Initial CP factors from multidimensional shift invariance: the subcarrier
// mode always, plus each receive axis whose codebook is square (and so can
// be mapped back to element space). Empty when the rank exceeds the number
// of transmit beams or the subspace is degenerate.
std::optional<std::array<CMatrix, 5>> shift_invariance_init(const MeasurementTensor& tensor, int rank);

struct EstimatorOptions {
  // Fixed rank; when empty the rank comes from select_model_order.
  std::optional<int> rank;
  int max_rank = 16;
  // Start CPD restart 0 from shift_invariance_init when it succeeds.
  bool shift_init = true;
  // Drop a component that sits within half a DFT beam spacing on every
  // spatial axis and half a delay-resolution cell of a stronger one. Such
  // pairs are CP degeneracies rather than separate paths.
  bool merge_unresolved = true;
  CpdOptions cpd;
};

struct PathEstimates {
  std::vector<EstimatedPath> paths;
  CpFactors cp;
  int rank = 0;
};

// CPD, per-factor parameter extraction, then a joint least-squares re-fit of
// all gains on the ideal rank-1 components. Gains are divided by the
// transmit amplitude so they compare directly to PathRecord gains. Output is
// sorted by |gain| descending, ties by delay, and holds at most `rank` paths
// (fewer when unresolved duplicates are merged).
PathEstimates estimate_paths(const MeasurementTensor& tensor, const EstimatorOptions& options = {});

}  // namespace disac
