#pragma once

#include "disac/estimator.hpp"
#include "disac/pipeline.hpp"
#include "disac/scene.hpp"
#include "disac/waveform.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace disac {

inline constexpr const char* kConfigSchema = "disac-config/1";

struct BeamCounts {
  int tx_az = 8;
  int tx_el = 4;
  int rx_az = 8;
  int rx_el = 8;
};

struct DbscanParams {
  double eps = 2.0;
  int min_points = 2;
};

struct ScenarioConfig {
  SceneSampling sampling;
  OfdmConfig ofdm;
  BeamCounts beams;
  FieldOfInterest foi;
  DbscanParams dbscan;
  EstimatorOptions estimator;
  bool add_noise = true;
  // When set, the noise level is chosen to hit this effective SNR instead of
  // the OFDM noise variance.
  std::optional<double> effective_snr_db;
  // Feed the ground-truth paths to the pipeline instead of estimating them.
  bool oracle_paths = false;
  // An estimated target point counts as a detection of the nearest true
  // target only within this distance (m) of one of its scatter points.
  double detection_gate = 5.0;
  std::uint64_t seed = 1;

  CodebookSet codebooks() const;
  void validate() const;
};

// Desk-scale defaults: K = 64, BS 16x16 with 8x4 beams, UE 8x8 with 8x8
// beams, 2 UEs, 2 targets of 3 scatter points, 4 clutter scatterers,
// offsets in +-200 ns.
ScenarioConfig default_config();

// JSON object with a mandatory "schema" field. Unspecified fields keep their
// defaults; unknown fields are rejected. Errors are Error(Config) with the
// offending field path or the parser's line/column.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
std::string dump_config(const ScenarioConfig& config);

}  // namespace disac
