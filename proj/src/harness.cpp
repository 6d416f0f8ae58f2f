#include "disac/harness.hpp"

#include "disac/error.hpp"
#include "disac/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace disac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kNoisePurpose = 1;
constexpr std::uint64_t kCpdPurpose = 2;

std::vector<EstimatedPath> paths_from_truth(const std::vector<PathRecord>& truth, double period) {
  std::vector<EstimatedPath> out;
  for (const auto& t : truth) {
    EstimatedPath p;
    p.gain = t.gain;
    p.delay = std::fmod(t.delay, period);
    if (p.delay < 0.0) p.delay += period;
    p.aoa = t.aoa;
    p.aod = t.aod;
    out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), [](const EstimatedPath& a, const EstimatedPath& b) {
    const double ga = std::abs(a.gain), gb = std::abs(b.gain);
    if (ga != gb) return ga > gb;
    return a.delay < b.delay;
  });
  return out;
}

struct UeStage {
  std::vector<EstimatedPath> filtered;
  LosDecision los;
  PerUeResult result;
};

UeStage process_ue(const ScenarioConfig& config, const Scene& scene, int rx_index,
                   const std::vector<EstimatedPath>& paths, Weighting weighting) {
  const auto& rx = scene.receivers[rx_index];
  if (paths.empty())
    throw Error(ErrorKind::Unidentifiable, "UE " + std::to_string(rx.id) + " produced no path estimates");
  UeStage st;
  st.los = identify_los(paths, config.ofdm);
  const double period = config.ofdm.delay_period();
  std::vector<EstimatedPath> tagged = unwrap_delays(paths, st.los.index, period);
  tagged[st.los.index].is_los = true;
  st.filtered = clutter_filter(tagged, config.foi);
  int los_index = -1;
  for (int i = 0; i < static_cast<int>(st.filtered.size()); ++i)
    if (st.filtered[i].is_los) los_index = i;
  const UeMeasurements meas =
      make_measurements(st.filtered, los_index, scene.tx.orientation, rx.orientation, rx.id, weighting);
  LocalizationOptions opts;
  opts.weighting = weighting;
  opts.speed_of_light = scene.speed_of_light;
  opts.delay_period = period;
  opts.offset_window_start = -config.sampling.max_timing_offset;
  st.result = per_ue_localize(meas, scene.tx.position, opts);
  return st;
}

double distance_to_target(const Vec3& p, const ExtendedTarget& t) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : t.scatter_points) best = std::min(best, (p - s).norm());
  return best;
}

void score_targets(const Scene& scene, const std::vector<Vec3>& points, double gate, TrialResult& out) {
  out.targets.clear();
  for (const auto& t : scene.targets) out.targets.push_back({t.id, false, 0.0});
  out.false_alarms = 0;
  for (const auto& p : points) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(scene.targets.size()); ++i) {
      const double d = distance_to_target(p, scene.targets[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0 || best_d > gate) {
      ++out.false_alarms;
      continue;
    }
    auto& te = out.targets[best];
    te.error_m = te.detected ? std::min(te.error_m, best_d) : best_d;
    te.detected = true;
  }
}

UeError score_ue(const ReceiverNode& rx, const Vec3& position, double offset) {
  return {rx.id, true, (position - rx.position).norm(), std::abs(offset - rx.timing_offset)};
}

}  // namespace

TrialMode TrialMode::parse(const std::string& text) {
  TrialMode m;
  std::string head = text;
  const auto comma = text.find(',');
  if (comma != std::string::npos) {
    head = text.substr(0, comma);
    const std::string tail = text.substr(comma + 1);
    if (tail == "ls") {
      m.weighting = Weighting::Ls;
    } else if (tail != "wls") {
      throw Error(ErrorKind::InvalidArgument, "unknown weighting '" + tail + "' in mode '" + text + "'");
    }
  }
  if (head == "disac") return m;
  if (head.rfind("isac:", 0) == 0) {
    m.kind = Kind::Isac;
    try {
      std::size_t used = 0;
      m.ue_id = std::stoi(head.substr(5), &used);
      if (used != head.size() - 5) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad UE id in mode '" + text + "'");
    }
    return m;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + text + "' (expected disac or isac:<id>)");
}

std::string TrialMode::name() const {
  std::string s = kind == Kind::Disac ? "disac" : "isac:" + std::to_string(ue_id);
  if (weighting == Weighting::Ls) s += ",ls";
  return s;
}

int TrialResult::detections() const {
  return static_cast<int>(std::count_if(targets.begin(), targets.end(), [](const TargetError& t) { return t.detected; }));
}

MeasurementTensor trial_tensor(const ScenarioConfig& config, const Scene& scene, int rx_index, std::uint64_t seed,
                               const std::vector<PathRecord>& truth, const CodebookSet& codebooks) {
  const auto& rx = scene.receivers.at(rx_index);
  SynthesisOptions so;
  so.add_noise = config.add_noise;
  so.effective_snr_db = config.effective_snr_db;
  return synthesize_from_paths(truth, rx.array, scene.tx.array, codebooks, config.ofdm,
                               derive_seed(seed, kNoisePurpose, rx.id), so);
}

EstimatorOptions trial_estimator_options(const ScenarioConfig& config, std::uint64_t seed, int ue_id) {
  EstimatorOptions eo = config.estimator;
  eo.cpd.seed = derive_seed(seed, kCpdPurpose, static_cast<std::uint64_t>(ue_id));
  return eo;
}

std::vector<TrialResult> run_trial(const ScenarioConfig& config, std::uint64_t seed,
                                   const std::vector<TrialMode>& modes, int trial_index,
                                   std::vector<TrialDetails>* details) {
  std::vector<TrialResult> results(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    results[i].trial = trial_index;
    results[i].seed = seed;
    results[i].mode = modes[i].name();
  }
  if (details) details->assign(modes.size(), {});
  auto fail_all = [&](const std::string& stage, const std::string& what) {
    for (auto& r : results) {
      r.ok = false;
      r.failed_stage = stage;
      r.message = what;
    }
    return results;
  };

  StageTimes shared;
  Scene scene;
  std::string stage = "scene";
  std::vector<std::vector<PathRecord>> truth;
  std::vector<std::vector<EstimatedPath>> estimated;
  try {
    config.validate();
    scene = random_scene(config.sampling, seed);
    for (const auto& mode : modes) {
      if (mode.kind == TrialMode::Kind::Isac && mode.ue_id >= 0) (void)scene.receiver(mode.ue_id);
    }
    const CodebookSet cb = config.codebooks();
    for (std::size_t n = 0; n < scene.receivers.size(); ++n) {
      const auto& rx = scene.receivers[n];
      truth.push_back(generate_ground_truth_paths(scene, rx.id));
      if (config.oracle_paths) {
        estimated.push_back(paths_from_truth(truth.back(), config.ofdm.delay_period()));
        continue;
      }
      stage = "synthesis";
      auto t0 = Clock::now();
      const MeasurementTensor tensor = trial_tensor(config, scene, static_cast<int>(n), seed, truth.back(), cb);
      shared.synthesis_s += seconds_since(t0);
      stage = "estimation";
      t0 = Clock::now();
      estimated.push_back(estimate_paths(tensor, trial_estimator_options(config, seed, rx.id)).paths);
      shared.estimation_s += seconds_since(t0);
    }
  } catch (const Error& e) {
    return fail_all(stage, e.what());
  }

  // Per-UE stages depend only on the weighting; cache them.
  std::map<Weighting, std::vector<std::optional<UeStage>>> ue_stages;
  std::map<Weighting, std::vector<std::string>> ue_failures;
  auto stages_for = [&](Weighting w) -> const std::vector<std::optional<UeStage>>& {
    auto it = ue_stages.find(w);
    if (it != ue_stages.end()) return it->second;
    std::vector<std::optional<UeStage>> v(scene.receivers.size());
    std::vector<std::string> f(scene.receivers.size());
    for (std::size_t n = 0; n < scene.receivers.size(); ++n) {
      try {
        v[n] = process_ue(config, scene, static_cast<int>(n), estimated[n], w);
      } catch (const Error& e) {
        f[n] = e.what();
      }
    }
    ue_failures[w] = f;
    return ue_stages.emplace(w, std::move(v)).first->second;
  };

  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const TrialMode& mode = modes[mi];
    TrialResult& res = results[mi];
    res.times = shared;
    auto t0 = Clock::now();
    const auto& stages = stages_for(mode.weighting);
    const auto& failures = ue_failures[mode.weighting];
    std::vector<int> members;
    for (int n = 0; n < static_cast<int>(scene.receivers.size()); ++n)
      if (mode.kind == TrialMode::Kind::Disac || scene.receivers[n].id == mode.ue_id) members.push_back(n);

    bool failed = false;
    for (int n : members) {
      if (!stages[n]) {
        res.ok = false;
        res.failed_stage = "pipeline";
        res.message = "UE " + std::to_string(scene.receivers[n].id) + ": " + failures[n];
        failed = true;
        break;
      }
    }
    TrialDetails* det = details ? &(*details)[mi] : nullptr;
    if (det) {
      det->scene = scene;
      det->truth = truth;
      det->estimated = estimated;
      for (int n : members) {
        if (!stages[n]) continue;
        det->filtered.push_back(stages[n]->filtered);
        det->los.push_back(stages[n]->los);
        det->per_ue.push_back(stages[n]->result);
      }
    }
    if (failed) continue;

    std::vector<LocalizedPoint> points;
    for (int n : members) points.insert(points.end(), stages[n]->result.points.begin(), stages[n]->result.points.end());
    const ClusterLabeling labeling = dbscan(points, config.dbscan.eps, config.dbscan.min_points);
    const Associations assoc = build_associations(labeling, points);
    res.times.pipeline_s = seconds_since(t0);

    // UEs with no associated path cannot enter the joint system; they keep
    // their per-UE solution.
    std::vector<UeMeasurements> fused;
    for (int n : members) {
      const int id = scene.receivers[n].id;
      const bool seen = std::any_of(assoc.begin(), assoc.end(), [&](const auto& kv) { return kv.second.count(id) > 0; });
      if (seen) fused.push_back(stages[n]->result.measurements);
    }
    t0 = Clock::now();
    std::optional<SceneEstimate> est;
    if (!fused.empty()) {
      FusionOptions fo;
      fo.speed_of_light = scene.speed_of_light;
      fo.delay_period = config.ofdm.delay_period();
      fo.offset_window_start = -config.sampling.max_timing_offset;
      try {
        est = run_fusion(fused, assoc, scene.tx.position, fo);
      } catch (const Error& e) {
        res.ok = false;
        res.failed_stage = "fusion";
        res.message = e.what();
      }
    }
    res.times.fusion_s = seconds_since(t0);
    if (det) {
      det->points = points;
      det->labeling = labeling;
      det->associations = assoc;
      det->estimate = est;
    }
    if (!res.ok) continue;

    for (int n : members) {
      const auto& rx = scene.receivers[n];
      bool done = false;
      if (est) {
        for (std::size_t k = 0; k < est->ue_ids.size(); ++k) {
          if (est->ue_ids[k] != rx.id) continue;
          res.ues.push_back(score_ue(rx, est->ue_positions[k], est->ue_timing_offsets[k]));
          done = true;
        }
      }
      if (!done) res.ues.push_back(score_ue(rx, stages[n]->result.ue_position, stages[n]->result.timing_offset));
    }
    score_targets(scene, est ? est->target_points : std::vector<Vec3>{}, config.detection_gate, res);
  }
  return results;
}

TrialResult run_trial(const ScenarioConfig& config, std::uint64_t seed, const TrialMode& mode) {
  return run_trial(config, seed, std::vector<TrialMode>{mode}).front();
}

double empirical_cdf(const std::vector<double>& samples, double query) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "empirical CDF of an empty sample");
  const auto count = std::count_if(samples.begin(), samples.end(), [&](double s) { return s <= query; });
  return static_cast<double>(count) / static_cast<double>(samples.size());
}

double percentile(const std::vector<double>& samples, double p) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "percentile level must be in [0, 1]");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  // Knots at (x_(i), i/n), i = 1..n.
  const double pos = p * n;
  if (pos <= 1.0) return x.front();
  if (pos >= n) return x.back();
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  return x[i - 1] + frac * (x[i] - x[i - 1]);
}

double median(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "median of an empty sample");
  std::vector<double> x = samples;
  const std::size_t h = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + h, x.end());
  if (x.size() % 2) return x[h];
  return 0.5 * (x[h] + *std::max_element(x.begin(), x.begin() + h));
}

ModeSummary summarize(const std::string& mode, const std::vector<TrialResult>& trials) {
  ModeSummary s;
  s.mode = mode;
  for (const auto& t : trials) {
    if (t.mode != mode) continue;
    ++s.trials;
    if (!t.ok) {
      ++s.failed;
      continue;
    }
    for (const auto& u : t.ues) {
      if (!u.estimated) continue;
      s.ue_errors.push_back(u.position_error_m);
      s.to_errors.push_back(u.timing_error_s);
    }
    for (const auto& g : t.targets) {
      ++s.targets_total;
      if (!g.detected) continue;
      ++s.targets_detected;
      s.target_errors.push_back(g.error_m);
    }
    s.false_alarms += t.false_alarms;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double p : {0.1, 0.25, 0.5, 0.8, 0.9}) {
    s.percentiles.push_back({p, s.ue_errors.empty() ? nan : percentile(s.ue_errors, p),
                             s.target_errors.empty() ? nan : percentile(s.target_errors, p)});
  }
  return s;
}

MonteCarloResult run_montecarlo(const ScenarioConfig& config, int num_trials, const std::vector<TrialMode>& modes) {
  if (num_trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
  if (modes.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one mode");
  MonteCarloResult out;
  for (int i = 0; i < num_trials; ++i) {
    auto r = run_trial(config, config.seed + static_cast<std::uint64_t>(i), modes, i);
    out.trials.insert(out.trials.end(), r.begin(), r.end());
  }
  for (const auto& m : modes) out.summaries.push_back(summarize(m.name(), out.trials));
  return out;
}

}  // namespace disac
