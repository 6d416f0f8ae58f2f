#include "disac/config.hpp"
#include "disac/error.hpp"
#include "disac/harness.hpp"
#include "disac/serialize.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace disac;

namespace {

constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

// Failure tagged with the stage it came from, so diagnostics name it.
struct StageError {
  std::string stage;
  std::string what;
  int code = kExitStage;
};

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError{stage, e.what(), e.kind() == ErrorKind::Config ? kExitConfig : kExitStage};
  } catch (const std::exception& e) {
    throw StageError{stage, e.what(), kExitStage};
  }
}

ScenarioConfig resolve_config(const std::string& path) {
  if (path.empty()) return default_config();
  try {
    ScenarioConfig c = load_config(path);
    c.validate();
    return c;
  } catch (const Error& e) {
    throw StageError{"config", e.what(), kExitConfig};
  }
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError{"output", "cannot create " + dir + ": " + ec.message(), kExitStage};
}

void write_json(const fs::path& path, const json& j) {
  in_stage("output", [&] { write_text_file(path.string(), j.dump(2) + "\n"); });
}

std::string file_tag(const std::string& mode) {
  std::string s = mode;
  for (char& ch : s)
    if (ch == ':' || ch == ',') ch = '_';
  return s;
}

std::vector<TrialMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<TrialMode> modes;
  for (const auto& n : names) {
    try {
      modes.push_back(TrialMode::parse(n));
    } catch (const Error& e) {
      throw StageError{"arguments", e.what(), kExitConfig};
    }
  }
  if (modes.empty()) modes.push_back(TrialMode{});
  return modes;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out) {
  const ScenarioConfig config = resolve_config(config_path);
  make_dir(out);
  const Scene scene = in_stage("scene", [&] { return random_scene(config.sampling, seed); });
  write_json(fs::path(out) / "scene.json", to_json(scene));
  const CodebookSet cb = config.codebooks();
  for (std::size_t n = 0; n < scene.receivers.size(); ++n) {
    const int id = scene.receivers[n].id;
    const auto truth = in_stage("scene", [&] { return generate_ground_truth_paths(scene, id); });
    const std::string tag = "ue" + std::to_string(id);
    write_json(fs::path(out) / ("paths_" + tag + ".json"), to_json(truth));
    const auto tensor =
        in_stage("synthesis", [&] { return trial_tensor(config, scene, static_cast<int>(n), seed, truth, cb); });
    in_stage("output", [&] { write_tensor(tensor, (fs::path(out) / ("tensor_" + tag)).string()); });
    std::printf("UE %d: %zu paths, tensor_%s.{json,bin}\n", id, truth.size(), tag.c_str());
  }
  write_text_file((fs::path(out) / "config.json").string(), dump_config(config));
  return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& tensor_stem, std::uint64_t seed,
                 const std::string& out) {
  const ScenarioConfig config = resolve_config(config_path);
  const MeasurementTensor tensor = in_stage("input", [&] { return read_tensor(tensor_stem); });
  EstimatorOptions eo = config.estimator;
  eo.cpd.seed = seed;
  const PathEstimates est = in_stage("estimation", [&] { return estimate_paths(tensor, eo); });
  json j;
  j["rank"] = est.rank;
  j["cpd"] = {{"residual", est.cp.residual},
              {"iterations", est.cp.iterations},
              {"converged", est.cp.converged},
              {"best_restart", est.cp.best_restart}};
  j["paths"] = to_json(est.paths);
  make_dir(out);
  write_json(fs::path(out) / "paths.json", j);
  std::printf("rank %d, %zu paths, residual %.4e\n", est.rank, est.paths.size(), est.cp.residual);
  return 0;
}

int cmd_e2e(const std::string& config_path, std::uint64_t seed, const std::vector<std::string>& mode_names,
            const std::string& out) {
  const ScenarioConfig config = resolve_config(config_path);
  const auto modes = parse_modes(mode_names);
  make_dir(out);
  std::vector<TrialDetails> details;
  const auto results = run_trial(config, seed, modes, 0, &details);
  int status = 0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const TrialResult& r = results[i];
    const TrialDetails& d = details[i];
    const std::string tag = file_tag(r.mode);
    write_json(fs::path(out) / ("trial_" + tag + ".json"), to_json(r));
    json dump;
    dump["scene"] = to_json(d.scene);
    dump["truth"] = json::array();
    for (const auto& t : d.truth) dump["truth"].push_back(to_json(t));
    dump["estimated"] = json::array();
    for (const auto& e : d.estimated) dump["estimated"].push_back(to_json(e));
    dump["filtered"] = json::array();
    for (std::size_t n = 0; n < d.filtered.size(); ++n)
      dump["filtered"].push_back({{"los_index", d.los[n].index},
                                  {"los_ambiguous", d.los[n].ambiguous},
                                  {"paths", to_json(d.filtered[n])}});
    dump["points"] = to_json(d.points);
    dump["labeling"] = to_json(d.labeling);
    dump["associations"] = to_json(d.associations);
    write_json(fs::path(out) / ("details_" + tag + ".json"), dump);
    if (d.estimate) write_json(fs::path(out) / ("estimate_" + tag + ".json"), to_json(*d.estimate));

    if (!r.ok) {
      std::fprintf(stderr, "%s: failed in stage %s: %s\n", r.mode.c_str(), r.failed_stage.c_str(), r.message.c_str());
      status = kExitStage;
      continue;
    }
    std::printf("%s\n", r.mode.c_str());
    for (const auto& u : r.ues)
      std::printf("  UE %d  position error %.3f m  offset error %.3f ns\n", u.ue_id, u.position_error_m,
                  u.timing_error_s * 1e9);
    for (const auto& t : r.targets) {
      if (t.detected)
        std::printf("  target %d  error %.3f m\n", t.target_id, t.error_m);
      else
        std::printf("  target %d  not detected\n", t.target_id);
    }
    if (r.false_alarms) std::printf("  false alarms %d\n", r.false_alarms);
  }
  return status;
}

void print_summary(const ModeSummary& s) {
  std::printf("mode %s: %d trials, %d failed\n", s.mode.c_str(), s.trials, s.failed);
  std::printf("  targets detected %d / %d, false alarms %d\n", s.targets_detected, s.targets_total, s.false_alarms);
  std::printf("  %-6s %12s %12s\n", "p", "UE err (m)", "target (m)");
  for (const auto& p : s.percentiles) std::printf("  %-6.2f %12.4f %12.4f\n", p[0], p[1], p[2]);
}

int cmd_montecarlo(const std::string& config_path, int trials, const std::vector<std::string>& mode_names,
                   const std::optional<std::uint64_t>& seed, const std::string& out) {
  ScenarioConfig config = resolve_config(config_path);
  if (seed) config.seed = *seed;
  const auto modes = parse_modes(mode_names);
  const MonteCarloResult mc = in_stage("montecarlo", [&] { return run_montecarlo(config, trials, modes); });
  for (const auto& s : mc.summaries) print_summary(s);
  make_dir(out);
  json j;
  j["config"] = json::parse(dump_config(config));
  j["trials"] = trials;
  j["summaries"] = json::array();
  for (const auto& s : mc.summaries) j["summaries"].push_back(to_json(s));
  write_json(fs::path(out) / "summary.json", j);
  std::ofstream csv(fs::path(out) / "results.csv");
  if (!csv) throw StageError{"output", "cannot write results.csv", kExitStage};
  write_csv_header(csv);
  for (const auto& r : mc.trials) write_csv_rows(csv, r);
  // Report failures but keep exit 0: they are part of the statistics.
  for (const auto& r : mc.trials)
    if (!r.ok)
      std::fprintf(stderr, "trial %d %s failed in %s: %s\n", r.trial, r.mode.c_str(), r.failed_stage.c_str(),
                   r.message.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed ISAC simulation and estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> mc_seed;
  int trials = 50;
  std::vector<std::string> modes;
  std::string out = "out";
  std::string tensor_stem;

  auto* sim = app.add_subcommand("simulate", "draw a scene and write its tensors");
  sim->add_option("--config", config_path, "scenario config (JSON)");
  sim->add_option("--seed", seed, "scene seed");
  sim->add_option("--out", out, "output directory");

  auto* est = app.add_subcommand("estimate", "estimate paths from a tensor file");
  est->add_option("--config", config_path, "scenario config (JSON), estimator section used");
  est->add_option("--tensor", tensor_stem, "tensor stem (reads <stem>.json and <stem>.bin)")->required();
  est->add_option("--seed", seed, "CPD seed");
  est->add_option("--out", out, "output directory");

  auto* e2e = app.add_subcommand("e2e", "run one trial and dump every stage");
  e2e->add_option("--config", config_path, "scenario config (JSON)");
  e2e->add_option("--seed", seed, "trial seed");
  e2e->add_option("--mode", modes, "disac | isac:<id>, optional ,ls suffix; repeatable");
  e2e->add_option("--out", out, "output directory");

  auto* mc = app.add_subcommand("montecarlo", "run many trials and summarize");
  mc->add_option("--config", config_path, "scenario config (JSON)");
  mc->add_option("--seed", mc_seed, "first trial seed (default: config seed)");
  mc->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  mc->add_option("--mode", modes, "disac | isac:<id>, optional ,ls suffix; repeatable");
  mc->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(config_path, seed, out);
    if (*est) return cmd_estimate(config_path, tensor_stem, seed, out);
    if (*e2e) return cmd_e2e(config_path, seed, modes, out);
    if (*mc) return cmd_montecarlo(config_path, trials, modes, mc_seed, out);
  } catch (const StageError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.stage.c_str(), e.what.c_str());
    return e.code;
  }
  return 0;
}
