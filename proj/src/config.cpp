#include "disac/config.hpp"

#include "disac/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace disac {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!node_.contains(key)) return;
    seen_.insert(key);
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(field(key), e.what());
    }
  }

  void read_vec3(const std::string& key, Vec3& out) {
    if (!node_.contains(key)) return;
    seen_.insert(key);
    const json& v = node_.at(key);
    if (!v.is_array() || v.size() != 3) fail(field(key), "expected an array of 3 numbers");
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(field(key), "expected an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
  }

  void read_range(const std::string& key, double& lo, double& hi) {
    if (!node_.contains(key)) return;
    seen_.insert(key);
    const json& v = node_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(field(key), "expected [min, max]");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
  }

  void read_degrees(const std::string& key, double& radians) {
    double deg = radians / kDeg;
    read(key, deg);
    radians = deg * kDeg;
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(node_.at(key), field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) fail(field(item.key()), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::Config, "config field '" + where + "': " + what);
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_array(Reader& r, const std::string& key, UpaGeometry& geom, double& spacing_wavelengths) {
  if (!r.has(key)) return;
  Reader a = r.child(key);
  a.read("n_x", geom.n_x);
  a.read("n_y", geom.n_y);
  a.read("spacing_wavelengths", spacing_wavelengths);
  a.finish();
}

void read_box(Reader& r, const std::string& key, Box& box) {
  if (!r.has(key)) return;
  Reader b = r.child(key);
  b.read_vec3("lo", box.lo);
  b.read_vec3("hi", box.hi);
  b.finish();
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json box_json(const Box& b) { return {{"lo", vec3_json(b.lo)}, {"hi", vec3_json(b.hi)}}; }
json array_json(const UpaGeometry& g) {
  return {{"n_x", g.n_x}, {"n_y", g.n_y}, {"spacing_wavelengths", g.spacing / g.wavelength}};
}

}  // namespace

CodebookSet ScenarioConfig::codebooks() const {
  return CodebookSet::make(sampling.ue_array, sampling.tx_array, beams.rx_az, beams.rx_el, beams.tx_az, beams.tx_el);
}

void ScenarioConfig::validate() const {
  ofdm.validate();
  sampling.validate();
  foi.validate();
  if (!(dbscan.eps > 0.0) || dbscan.min_points < 1)
    throw Error(ErrorKind::Config, "dbscan needs eps > 0 and min_points >= 1");
  if (!(detection_gate > 0.0)) throw Error(ErrorKind::Config, "detection_gate must be positive");
  if (estimator.rank && *estimator.rank < 1) throw Error(ErrorKind::Config, "estimator rank must be >= 1");
  if (estimator.max_rank < 1) throw Error(ErrorKind::Config, "estimator max_rank must be >= 1");
  try {
    (void)codebooks();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("beams: ") + e.what());
  }
}

ScenarioConfig default_config() {
  ScenarioConfig c;
  const double lambda = kSpeedOfLight / c.ofdm.carrier_freq;
  auto& s = c.sampling;
  s.tx_position = Vec3(0.0, 0.0, 14.0);
  s.tx_yaw = 0.0;
  s.tx_downtilt = 22.0 * kDeg;
  s.tx_array = {16, 16, lambda / 2.0, lambda};
  s.ue_array = {8, 8, lambda / 2.0, lambda};
  s.num_ues = 2;
  s.ue_box = {Vec3(15.0, -6.0, 1.5), Vec3(30.0, 6.0, 1.5)};
  s.ue_yaw = 0.0;
  s.num_targets = 2;
  s.points_per_target = 3;
  s.target_box = {Vec3(40.0, -8.0, 1.0), Vec3(60.0, 8.0, 1.0)};
  s.num_clutter = 4;
  s.clutter_box = {Vec3(20.0, -35.0, 0.5), Vec3(80.0, 35.0, 8.0)};
  s.foi_margin = 5.0 * kDeg;
  s.min_separation = 5.0;
  s.max_timing_offset = 200e-9;
  c.foi = {60.0 * kDeg, 30.0 * kDeg};
  s.foi_azimuth = c.foi.azimuth_bound;
  s.foi_elevation = c.foi.elevation_bound;
  // The shift-invariance start usually lands near the optimum; a looser
  // tolerance and fewer restarts keep a trial at a fraction of a second.
  c.estimator.cpd.tol = 1e-6;
  c.estimator.cpd.restarts = 3;
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The parser message carries the line and column.
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = default_config();
  Reader r(root, "");
  if (!r.has("schema")) Reader::fail("schema", "missing (expected \"" + std::string(kConfigSchema) + "\")");
  std::string schema;
  r.read("schema", schema);
  if (schema != kConfigSchema) Reader::fail("schema", "unsupported version \"" + schema + "\"");
  r.read("seed", c.seed);

  if (r.has("ofdm")) {
    Reader o = r.child("ofdm");
    o.read("carrier_freq_hz", c.ofdm.carrier_freq);
    o.read("bandwidth_hz", c.ofdm.bandwidth);
    o.read("num_subcarriers", c.ofdm.num_subcarriers);
    // Default spacing follows the bandwidth split over K subcarriers.
    c.ofdm.subcarrier_spacing = c.ofdm.bandwidth / c.ofdm.num_subcarriers;
    o.read("subcarrier_spacing_hz", c.ofdm.subcarrier_spacing);
    o.read("tx_power_dbm", c.ofdm.tx_power_dbm);
    o.read("noise_variance_dbm", c.ofdm.noise_variance_dbm);
    o.finish();
  }
  if (!(c.ofdm.carrier_freq > 0.0)) Reader::fail("ofdm.carrier_freq_hz", "must be positive");
  const double lambda = kSpeedOfLight / c.ofdm.carrier_freq;

  auto& s = c.sampling;
  double tx_spacing = s.tx_array.spacing / s.tx_array.wavelength;
  double ue_spacing = s.ue_array.spacing / s.ue_array.wavelength;
  if (r.has("transmitter")) {
    Reader t = r.child("transmitter");
    t.read_vec3("position", s.tx_position);
    t.read_degrees("yaw_deg", s.tx_yaw);
    t.read_degrees("downtilt_deg", s.tx_downtilt);
    read_array(t, "array", s.tx_array, tx_spacing);
    t.finish();
  }
  if (r.has("ue")) {
    Reader u = r.child("ue");
    u.read("count", s.num_ues);
    read_array(u, "array", s.ue_array, ue_spacing);
    read_box(u, "box", s.ue_box);
    u.read_degrees("yaw_deg", s.ue_yaw);
    u.read("max_timing_offset_s", s.max_timing_offset);
    u.finish();
  }
  s.tx_array.wavelength = lambda;
  s.tx_array.spacing = tx_spacing * lambda;
  s.ue_array.wavelength = lambda;
  s.ue_array.spacing = ue_spacing * lambda;
  if (r.has("targets")) {
    Reader t = r.child("targets");
    t.read("count", s.num_targets);
    t.read("points_per_target", s.points_per_target);
    read_box(t, "box", s.target_box);
    t.read_vec3("half_extent", s.target_half_extent);
    t.read("min_point_separation", s.min_point_separation);
    t.read_range("reflectivity", s.target_reflectivity_min, s.target_reflectivity_max);
    t.finish();
  }
  if (r.has("clutter")) {
    Reader t = r.child("clutter");
    t.read("count", s.num_clutter);
    read_box(t, "box", s.clutter_box);
    t.read_range("reflectivity", s.clutter_reflectivity_min, s.clutter_reflectivity_max);
    t.read("in_foi_fraction", s.clutter_in_foi_fraction);
    t.read_degrees("foi_margin_deg", s.foi_margin);
    t.finish();
  }
  r.read("min_separation", s.min_separation);
  r.read("max_attempts", s.max_attempts);
  if (r.has("beams")) {
    Reader b = r.child("beams");
    b.read("tx_az", c.beams.tx_az);
    b.read("tx_el", c.beams.tx_el);
    b.read("rx_az", c.beams.rx_az);
    b.read("rx_el", c.beams.rx_el);
    b.finish();
  }
  if (r.has("foi")) {
    Reader f = r.child("foi");
    f.read_degrees("azimuth_deg", c.foi.azimuth_bound);
    f.read_degrees("elevation_deg", c.foi.elevation_bound);
    f.finish();
  }
  s.foi_azimuth = c.foi.azimuth_bound;
  s.foi_elevation = c.foi.elevation_bound;
  if (r.has("dbscan")) {
    Reader d = r.child("dbscan");
    d.read("eps", c.dbscan.eps);
    d.read("min_points", c.dbscan.min_points);
    d.finish();
  }
  if (r.has("estimator")) {
    Reader e = r.child("estimator");
    if (e.has("rank")) {
      const json& rank = e.raw("rank");
      if (rank.is_string() && rank.get<std::string>() == "auto") {
        c.estimator.rank.reset();
      } else if (rank.is_number_integer()) {
        c.estimator.rank = rank.get<int>();
      } else {
        Reader::fail(e.field("rank"), "expected \"auto\" or an integer");
      }
    }
    e.read("max_rank", c.estimator.max_rank);
    e.read("shift_init", c.estimator.shift_init);
    e.read("merge_unresolved", c.estimator.merge_unresolved);
    if (e.has("cpd")) {
      Reader p = e.child("cpd");
      p.read("max_iters", c.estimator.cpd.max_iters);
      p.read("tol", c.estimator.cpd.tol);
      p.read("restarts", c.estimator.cpd.restarts);
      p.read("algebraic_init", c.estimator.cpd.algebraic_init);
      p.finish();
    }
    e.finish();
  }
  if (r.has("noise")) {
    Reader n = r.child("noise");
    n.read("enabled", c.add_noise);
    if (n.has("effective_snr_db")) {
      const json& v = n.raw("effective_snr_db");
      if (v.is_null()) {
        c.effective_snr_db.reset();
      } else if (v.is_number()) {
        c.effective_snr_db = v.get<double>();
      } else {
        Reader::fail(n.field("effective_snr_db"), "expected a number or null");
      }
    }
    n.finish();
  }
  r.read("oracle_paths", c.oracle_paths);
  r.read("detection_gate", c.detection_gate);
  r.finish();

  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("invalid config: ") + e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

namespace {

// Degrees rounded to 1e-9 so 60 deg dumps as 60.0 rather than 59.99999999999999.
double to_degrees(double radians) { return std::round(radians / kDeg * 1e9) / 1e9; }

}  // namespace

std::string dump_config(const ScenarioConfig& c) {
  const auto& s = c.sampling;
  json j;
  j["schema"] = kConfigSchema;
  j["seed"] = c.seed;
  j["ofdm"] = {{"carrier_freq_hz", c.ofdm.carrier_freq},
               {"bandwidth_hz", c.ofdm.bandwidth},
               {"num_subcarriers", c.ofdm.num_subcarriers},
               {"subcarrier_spacing_hz", c.ofdm.subcarrier_spacing},
               {"tx_power_dbm", c.ofdm.tx_power_dbm},
               {"noise_variance_dbm", c.ofdm.noise_variance_dbm}};
  j["transmitter"] = {{"position", vec3_json(s.tx_position)},
                      {"yaw_deg", to_degrees(s.tx_yaw)},
                      {"downtilt_deg", to_degrees(s.tx_downtilt)},
                      {"array", array_json(s.tx_array)}};
  j["ue"] = {{"count", s.num_ues},
             {"array", array_json(s.ue_array)},
             {"box", box_json(s.ue_box)},
             {"yaw_deg", to_degrees(s.ue_yaw)},
             {"max_timing_offset_s", s.max_timing_offset}};
  j["targets"] = {{"count", s.num_targets},
                  {"points_per_target", s.points_per_target},
                  {"box", box_json(s.target_box)},
                  {"half_extent", vec3_json(s.target_half_extent)},
                  {"min_point_separation", s.min_point_separation},
                  {"reflectivity", {s.target_reflectivity_min, s.target_reflectivity_max}}};
  j["clutter"] = {{"count", s.num_clutter},
                  {"box", box_json(s.clutter_box)},
                  {"reflectivity", {s.clutter_reflectivity_min, s.clutter_reflectivity_max}},
                  {"in_foi_fraction", s.clutter_in_foi_fraction},
                  {"foi_margin_deg", to_degrees(s.foi_margin)}};
  j["min_separation"] = s.min_separation;
  j["max_attempts"] = s.max_attempts;
  j["beams"] = {{"tx_az", c.beams.tx_az}, {"tx_el", c.beams.tx_el}, {"rx_az", c.beams.rx_az}, {"rx_el", c.beams.rx_el}};
  j["foi"] = {{"azimuth_deg", to_degrees(c.foi.azimuth_bound)}, {"elevation_deg", to_degrees(c.foi.elevation_bound)}};
  j["dbscan"] = {{"eps", c.dbscan.eps}, {"min_points", c.dbscan.min_points}};
  j["estimator"] = {{"rank", c.estimator.rank ? json(*c.estimator.rank) : json("auto")},
                    {"max_rank", c.estimator.max_rank},
                    {"shift_init", c.estimator.shift_init},
                    {"merge_unresolved", c.estimator.merge_unresolved},
                    {"cpd",
                     {{"max_iters", c.estimator.cpd.max_iters},
                      {"tol", c.estimator.cpd.tol},
                      {"restarts", c.estimator.cpd.restarts},
                      {"algebraic_init", c.estimator.cpd.algebraic_init}}}};
  j["noise"] = {{"enabled", c.add_noise},
                {"effective_snr_db", c.effective_snr_db ? json(*c.effective_snr_db) : json(nullptr)}};
  j["oracle_paths"] = c.oracle_paths;
  j["detection_gate"] = c.detection_gate;
  return j.dump(2);
}

}  // namespace disac
