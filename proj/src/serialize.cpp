#include "disac/serialize.hpp"

#include "disac/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace disac {

using nlohmann::json;

namespace {

json vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Io, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json rotation(const Rotation& r) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({r(i, 0), r(i, 1), r(i, 2)}));
  return rows;
}

Rotation rotation_from(const json& j) {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r(i, k) = j.at(i).at(k).get<double>();
  return r;
}

json upa(const UpaGeometry& g) {
  return {{"n_x", g.n_x}, {"n_y", g.n_y}, {"spacing", g.spacing}, {"wavelength", g.wavelength}};
}

UpaGeometry upa_from(const json& j) {
  return {j.at("n_x").get<int>(), j.at("n_y").get<int>(), j.at("spacing").get<double>(),
          j.at("wavelength").get<double>()};
}

json angles(const AnglePair& a) { return {{"azimuth", a.azimuth}, {"elevation", a.elevation}}; }

const char* kind_name(PathKind k) {
  switch (k) {
    case PathKind::LoS: return "los";
    case PathKind::Target: return "target";
    case PathKind::Clutter: return "clutter";
  }
  return "unknown";
}

// JSON has no NaN; write null instead.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.write(buf, 8);
}

double get_f64(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw Error(ErrorKind::Io, "tensor data file is truncated");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

json to_json(const Scene& scene) {
  json j;
  j["speed_of_light"] = scene.speed_of_light;
  j["phase_seed"] = scene.phase_seed;
  j["tx"] = {{"position", vec3(scene.tx.position)},
             {"orientation", rotation(scene.tx.orientation)},
             {"array", upa(scene.tx.array)}};
  j["receivers"] = json::array();
  for (const auto& rx : scene.receivers) {
    j["receivers"].push_back({{"id", rx.id},
                              {"position", vec3(rx.position)},
                              {"orientation", rotation(rx.orientation)},
                              {"timing_offset", rx.timing_offset},
                              {"array", upa(rx.array)},
                              {"los_blocked", rx.los_blocked}});
  }
  j["targets"] = json::array();
  for (const auto& t : scene.targets) {
    json pts = json::array();
    for (const auto& p : t.scatter_points) pts.push_back(vec3(p));
    j["targets"].push_back({{"id", t.id}, {"scatter_points", pts}, {"reflectivities", t.reflectivities}});
  }
  j["clutter"] = json::array();
  for (const auto& c : scene.clutter)
    j["clutter"].push_back({{"position", vec3(c.position)}, {"reflectivity", c.reflectivity}});
  return j;
}

Scene scene_from_json(const json& j) {
  try {
    Scene s;
    s.speed_of_light = j.at("speed_of_light").get<double>();
    s.phase_seed = j.at("phase_seed").get<std::uint64_t>();
    s.tx.position = vec3_from(j.at("tx").at("position"));
    s.tx.orientation = rotation_from(j.at("tx").at("orientation"));
    s.tx.array = upa_from(j.at("tx").at("array"));
    for (const auto& r : j.at("receivers")) {
      ReceiverNode rx;
      rx.id = r.at("id").get<int>();
      rx.position = vec3_from(r.at("position"));
      rx.orientation = rotation_from(r.at("orientation"));
      rx.timing_offset = r.at("timing_offset").get<double>();
      rx.array = upa_from(r.at("array"));
      rx.los_blocked = r.value("los_blocked", false);
      s.receivers.push_back(rx);
    }
    for (const auto& t : j.at("targets")) {
      ExtendedTarget et;
      et.id = t.at("id").get<int>();
      for (const auto& p : t.at("scatter_points")) et.scatter_points.push_back(vec3_from(p));
      et.reflectivities = t.at("reflectivities").get<std::vector<double>>();
      s.targets.push_back(et);
    }
    for (const auto& c : j.at("clutter"))
      s.clutter.push_back({vec3_from(c.at("position")), c.at("reflectivity").get<double>()});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed scene document: ") + e.what());
  }
}

json to_json(const std::vector<PathRecord>& paths) {
  json arr = json::array();
  for (const auto& p : paths) {
    json label = {{"kind", kind_name(p.label.kind)}};
    if (p.label.kind == PathKind::Target) {
      label["target_id"] = p.label.target_id;
      label["point_index"] = p.label.point_index;
    } else if (p.label.kind == PathKind::Clutter) {
      label["clutter_index"] = p.label.clutter_index;
    }
    arr.push_back({{"gain_re", p.gain.real()},
                   {"gain_im", p.gain.imag()},
                   {"delay_s", p.delay},
                   {"aoa", angles(p.aoa)},
                   {"aod", angles(p.aod)},
                   {"label", label}});
  }
  return arr;
}

json to_json(const std::vector<EstimatedPath>& paths) {
  json arr = json::array();
  for (const auto& p : paths) {
    arr.push_back({{"gain_re", p.gain.real()},
                   {"gain_im", p.gain.imag()},
                   {"delay_s", p.delay},
                   {"aoa_az", p.aoa.azimuth},
                   {"aoa_el", p.aoa.elevation},
                   {"aod_az", p.aod.azimuth},
                   {"aod_el", p.aod.elevation},
                   {"low_confidence", p.low_confidence},
                   {"is_los", p.is_los}});
  }
  return arr;
}

std::vector<EstimatedPath> estimated_paths_from_json(const json& j) {
  std::vector<EstimatedPath> out;
  try {
    for (const auto& p : j) {
      EstimatedPath e;
      e.gain = {p.at("gain_re").get<double>(), p.at("gain_im").get<double>()};
      e.delay = p.at("delay_s").get<double>();
      e.aoa = {p.at("aoa_az").get<double>(), p.at("aoa_el").get<double>()};
      e.aod = {p.at("aod_az").get<double>(), p.at("aod_el").get<double>()};
      e.low_confidence = p.value("low_confidence", false);
      e.is_los = p.value("is_los", false);
      out.push_back(e);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed path list: ") + e.what());
  }
  return out;
}

json to_json(const std::vector<LocalizedPoint>& points) {
  json arr = json::array();
  for (const auto& p : points)
    arr.push_back(
        {{"position", vec3(p.position)}, {"ue_id", p.ue_id}, {"path_index", p.path_index}, {"weight", p.weight}});
  return arr;
}

json to_json(const ClusterLabeling& labeling) {
  return {{"labels", labeling.labels}, {"cluster_count", labeling.cluster_count}};
}

json to_json(const Associations& associations) {
  json arr = json::array();
  for (const auto& [cluster, members] : associations) {
    json ues = json::array();
    for (const auto& [ue, paths] : members) ues.push_back({{"ue_id", ue}, {"paths", paths}});
    arr.push_back({{"cluster", cluster}, {"members", ues}});
  }
  return arr;
}

json to_json(const SceneEstimate& e) {
  json j;
  j["ues"] = json::array();
  for (std::size_t n = 0; n < e.ue_ids.size(); ++n) {
    j["ues"].push_back({{"id", e.ue_ids[n]},
                        {"position", vec3(e.ue_positions[n])},
                        {"timing_offset_s", e.ue_timing_offsets[n]},
                        {"los_range_m", e.los_ranges[n]}});
  }
  j["targets"] = json::array();
  for (std::size_t m = 0; m < e.target_points.size(); ++m) {
    j["targets"].push_back({{"cluster", e.target_cluster_ids[m]},
                            {"point", vec3(e.target_points[m])},
                            {"bs_range_m", e.bs_target_ranges[m]}});
  }
  j["invalid_clusters"] = e.invalid_clusters;
  j["residual"] = e.residual;
  j["condition"] = number(e.condition);
  json unknowns = json::array();
  for (Eigen::Index i = 0; i < e.solution.size(); ++i) {
    const std::string label = i < static_cast<Eigen::Index>(e.unknown_labels.size()) ? e.unknown_labels[i] : "";
    unknowns.push_back({{"name", label}, {"value", e.solution[i]}});
  }
  j["unknowns"] = unknowns;
  return j;
}

json to_json(const TrialResult& r, bool include_times) {
  json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["mode"] = r.mode;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["failed_stage"] = r.failed_stage;
    j["message"] = r.message;
  }
  j["ues"] = json::array();
  for (const auto& u : r.ues)
    j["ues"].push_back({{"id", u.ue_id},
                        {"estimated", u.estimated},
                        {"position_error_m", u.position_error_m},
                        {"timing_error_s", u.timing_error_s}});
  j["targets"] = json::array();
  for (const auto& t : r.targets)
    j["targets"].push_back({{"id", t.target_id}, {"detected", t.detected}, {"error_m", number(t.error_m)}});
  j["false_alarms"] = r.false_alarms;
  if (include_times)
    j["times_s"] = {{"synthesis", r.times.synthesis_s},
                    {"estimation", r.times.estimation_s},
                    {"pipeline", r.times.pipeline_s},
                    {"fusion", r.times.fusion_s}};
  return j;
}

json to_json(const ModeSummary& s) {
  json j;
  j["mode"] = s.mode;
  j["trials"] = s.trials;
  j["failed"] = s.failed;
  j["ue_samples"] = s.ue_errors.size();
  j["target_samples"] = s.target_errors.size();
  j["targets_total"] = s.targets_total;
  j["targets_detected"] = s.targets_detected;
  j["false_alarms"] = s.false_alarms;
  json table = json::array();
  for (const auto& row : s.percentiles)
    table.push_back({{"p", row[0]}, {"ue_error_m", number(row[1])}, {"target_error_m", number(row[2])}});
  j["percentiles"] = table;
  return j;
}

void write_tensor(const MeasurementTensor& t, const std::string& stem) {
  json h;
  h["format"] = "disac-tensor/1";
  h["layout"] = "row-major, interleaved re/im float64 little-endian";
  h["shape"] = t.data.shape();
  h["modes"] = {"rx_el", "rx_az", "tx_el", "tx_az", "subcarrier"};
  h["ofdm"] = {{"carrier_freq_hz", t.ofdm.carrier_freq},
               {"bandwidth_hz", t.ofdm.bandwidth},
               {"num_subcarriers", t.ofdm.num_subcarriers},
               {"subcarrier_spacing_hz", t.ofdm.subcarrier_spacing},
               {"tx_power_dbm", t.ofdm.tx_power_dbm},
               {"noise_variance_dbm", t.ofdm.noise_variance_dbm}};
  h["rx_array"] = upa(t.rx_array);
  h["tx_array"] = upa(t.tx_array);
  h["noise_variance_w"] = t.noise_variance;
  h["tx_amplitude"] = t.tx_amplitude;
  json cbs;
  for (const BeamCodebook* cb : {&t.codebooks.rx_el, &t.codebooks.rx_az, &t.codebooks.tx_el, &t.codebooks.tx_az})
    cbs[to_string(cb->axis)] = {{"elements", cb->elements()}, {"beams", cb->beams()}, {"beam_indices", cb->beam_indices}};
  h["codebooks"] = cbs;
  write_text_file(stem + ".json", h.dump(2));

  std::ofstream out(stem + ".bin", std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + stem + ".bin'");
  for (const auto& v : t.data.data()) {
    put_f64(out, v.real());
    put_f64(out, v.imag());
  }
  if (!out) throw Error(ErrorKind::Io, "write to '" + stem + ".bin' failed");
}

MeasurementTensor read_tensor(const std::string& stem) {
  std::ifstream hin(stem + ".json");
  if (!hin) throw Error(ErrorKind::Io, "cannot open '" + stem + ".json'");
  MeasurementTensor t;
  try {
    const json h = json::parse(hin);
    const auto shape = h.at("shape").get<std::array<int, 5>>();
    const auto& o = h.at("ofdm");
    t.ofdm.carrier_freq = o.at("carrier_freq_hz").get<double>();
    t.ofdm.bandwidth = o.at("bandwidth_hz").get<double>();
    t.ofdm.num_subcarriers = o.at("num_subcarriers").get<int>();
    t.ofdm.subcarrier_spacing = o.at("subcarrier_spacing_hz").get<double>();
    t.ofdm.tx_power_dbm = o.at("tx_power_dbm").get<double>();
    t.ofdm.noise_variance_dbm = o.at("noise_variance_dbm").get<double>();
    t.rx_array = upa_from(h.at("rx_array"));
    t.tx_array = upa_from(h.at("tx_array"));
    t.noise_variance = h.at("noise_variance_w").get<double>();
    t.tx_amplitude = h.at("tx_amplitude").get<double>();
    const auto& cbs = h.at("codebooks");
    t.codebooks = CodebookSet::make(t.rx_array, t.tx_array, cbs.at("rx_az").at("beams").get<int>(),
                                    cbs.at("rx_el").at("beams").get<int>(), cbs.at("tx_az").at("beams").get<int>(),
                                    cbs.at("tx_el").at("beams").get<int>());
    if (shape[0] != t.codebooks.rx_el.beams() || shape[1] != t.codebooks.rx_az.beams() ||
        shape[2] != t.codebooks.tx_el.beams() || shape[3] != t.codebooks.tx_az.beams() ||
        shape[4] != t.ofdm.num_subcarriers)
      throw Error(ErrorKind::DimensionMismatch, "tensor header shape disagrees with its codebooks");
    t.data = Tensor5(shape);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, "malformed tensor header '" + stem + ".json': " + e.what());
  }
  std::ifstream in(stem + ".bin", std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + stem + ".bin'");
  for (auto& v : t.data.data()) {
    const double re = get_f64(in);
    v = {re, get_f64(in)};
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::Io, "tensor data file has trailing bytes");
  return t;
}

void write_csv_header(std::ostream& out) { out << "trial,mode,entity_kind,entity_id,error_m,to_error_s,detected\n"; }

void write_csv_rows(std::ostream& out, const TrialResult& r) {
  std::ostringstream row;
  row.precision(std::numeric_limits<double>::max_digits10);
  // Modes may contain a comma ("disac,ls"); quote them.
  const std::string mode = "\"" + r.mode + "\"";
  for (const auto& u : r.ues) {
    row << r.trial << ',' << mode << ",ue," << u.ue_id << ',';
    if (u.estimated) row << u.position_error_m << ',' << u.timing_error_s;
    else row << ',';
    row << ',' << (u.estimated ? 1 : 0) << '\n';
  }
  for (const auto& t : r.targets) {
    row << r.trial << ',' << mode << ",target," << t.target_id << ',';
    if (t.detected) row << t.error_m;
    row << ",," << (t.detected ? 1 : 0) << '\n';
  }
  if (!r.ok) row << r.trial << ',' << mode << ",failed,-1,,,0\n";
  out << row.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace disac
