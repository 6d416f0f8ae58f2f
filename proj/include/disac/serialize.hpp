#pragma once

#include "disac/harness.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace disac {

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

nlohmann::json to_json(const std::vector<PathRecord>& paths);
// Fields: gain_re, gain_im, delay_s, aoa_az, aoa_el, aod_az, aod_el (rad),
// low_confidence, is_los.
nlohmann::json to_json(const std::vector<EstimatedPath>& paths);
std::vector<EstimatedPath> estimated_paths_from_json(const nlohmann::json& j);

nlohmann::json to_json(const std::vector<LocalizedPoint>& points);
nlohmann::json to_json(const ClusterLabeling& labeling);
nlohmann::json to_json(const Associations& associations);
// Includes the full unknown vector with its labels.
nlohmann::json to_json(const SceneEstimate& estimate);
// Stage timings are left out by default so that equal (config, seed, mode)
// serialize to equal bytes.
nlohmann::json to_json(const TrialResult& result, bool include_times = false);
nlohmann::json to_json(const ModeSummary& summary);

// Tensor files: <stem>.bin holds the data row-major as interleaved
// (re, im) little-endian float64; <stem>.json holds the shape, the OFDM
// parameters, array geometries, noise variance and codebook beam indices.
void write_tensor(const MeasurementTensor& tensor, const std::string& stem);
MeasurementTensor read_tensor(const std::string& stem);

// trial,mode,entity_kind,entity_id,error_m,to_error_s,detected
void write_csv_header(std::ostream& out);
void write_csv_rows(std::ostream& out, const TrialResult& result);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace disac
