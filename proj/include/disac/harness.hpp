#pragma once

#include "disac/config.hpp"
#include "disac/fusion.hpp"
#include "disac/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace disac {

struct TrialMode {
  enum class Kind { Disac, Isac };
  Kind kind = Kind::Disac;
  // UE used on its own in Isac mode.
  int ue_id = 0;
  Weighting weighting = Weighting::Wls;

  // "disac", "isac:<id>", with an optional ",ls" / ",wls" suffix.
  static TrialMode parse(const std::string& text);
  std::string name() const;
};

struct UeError {
  int ue_id = 0;
  bool estimated = false;
  double position_error_m = 0.0;
  double timing_error_s = 0.0;
};

struct TargetError {
  int target_id = 0;
  bool detected = false;
  // Distance from the best matching estimated point to the nearest scatter
  // point of this target.
  double error_m = 0.0;
};

struct StageTimes {
  double synthesis_s = 0.0;
  double estimation_s = 0.0;
  double pipeline_s = 0.0;
  double fusion_s = 0.0;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string mode;
  bool ok = true;
  std::string failed_stage;
  std::string message;
  std::vector<UeError> ues;
  std::vector<TargetError> targets;
  // Estimated target points that matched no true target within the gate.
  int false_alarms = 0;
  StageTimes times;

  int detections() const;
};

// Everything one trial produces, for inspection and the e2e dump.
struct TrialDetails {
  Scene scene;
  std::vector<std::vector<PathRecord>> truth;
  std::vector<std::vector<EstimatedPath>> estimated;
  // Per UE, after LoS tagging, delay unwrapping and the FoI filter.
  std::vector<std::vector<EstimatedPath>> filtered;
  std::vector<LosDecision> los;
  std::vector<PerUeResult> per_ue;
  std::vector<LocalizedPoint> points;
  ClusterLabeling labeling;
  Associations associations;
  std::optional<SceneEstimate> estimate;
};

// The noisy tensor of receiver `rx_index` exactly as run_trial synthesizes it.
MeasurementTensor trial_tensor(const ScenarioConfig& config, const Scene& scene, int rx_index, std::uint64_t seed,
                               const std::vector<PathRecord>& truth, const CodebookSet& codebooks);
// Estimator options (with the CPD seed) run_trial uses for one UE.
EstimatorOptions trial_estimator_options(const ScenarioConfig& config, std::uint64_t seed, int ue_id);

// Runs one trial and scores it under every mode. Scene synthesis and path
// estimation are shared across modes; everything after is per mode. Stage
// failures are recorded in the result instead of thrown. Deterministic in
// (config, seed).
std::vector<TrialResult> run_trial(const ScenarioConfig& config, std::uint64_t seed,
                                   const std::vector<TrialMode>& modes, int trial_index = 0,
                                   std::vector<TrialDetails>* details = nullptr);
TrialResult run_trial(const ScenarioConfig& config, std::uint64_t seed, const TrialMode& mode);

// Fraction of samples <= query. Throws Error(InvalidArgument) when empty.
double empirical_cdf(const std::vector<double>& samples, double query);
// Inverse of the empirical CDF by linear interpolation between the points
// (x_(i), i/n), i = 1..n, clamped to [x_(1), x_(n)]. p in [0, 1].
double percentile(const std::vector<double>& samples, double p);
// Ordinary sample median (mean of the middle two for even sizes).
double median(const std::vector<double>& samples);

struct ModeSummary {
  std::string mode;
  int trials = 0;
  int failed = 0;
  std::vector<double> ue_errors;
  std::vector<double> to_errors;
  std::vector<double> target_errors;
  int targets_total = 0;
  int targets_detected = 0;
  int false_alarms = 0;
  // (p, ue error, target error) for p in {0.1, 0.25, 0.5, 0.8, 0.9}.
  std::vector<std::array<double, 3>> percentiles;
};

struct MonteCarloResult {
  std::vector<TrialResult> trials;  // ordered by (trial, mode)
  std::vector<ModeSummary> summaries;
};

// Trials use seeds config.seed + i for i in [0, num_trials).
MonteCarloResult run_montecarlo(const ScenarioConfig& config, int num_trials, const std::vector<TrialMode>& modes);
ModeSummary summarize(const std::string& mode, const std::vector<TrialResult>& trials);

}  // namespace disac
