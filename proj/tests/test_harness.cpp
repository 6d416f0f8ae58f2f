#include <doctest.h>

#include "disac/error.hpp"
#include "disac/harness.hpp"
#include "disac/serialize.hpp"

#include <algorithm>
#include <string>

using namespace disac;

TEST_CASE("empirical cdf") {
  const std::vector<double> x{0.5, 0.1, 0.4, 0.2, 0.3};
  CHECK(empirical_cdf(x, 0.3) == doctest::Approx(0.6));
  CHECK(empirical_cdf(x, 0.05) == 0.0);
  CHECK(empirical_cdf(x, 0.5) == 1.0);
  CHECK(empirical_cdf(x, 7.0) == 1.0);
  CHECK_THROWS_AS(empirical_cdf({}, 0.0), Error);

  double prev = 0.0;
  for (double q = 0.0; q <= 0.6; q += 0.01) {
    const double c = empirical_cdf(x, q);
    CHECK(c >= prev);
    prev = c;
  }
  // percentile(i/n) lands on the i-th order statistic, whose cdf is i/n.
  for (int i = 1; i <= 5; ++i) {
    const double v = percentile(x, i / 5.0);
    CHECK(std::abs(empirical_cdf(x, v) - i / 5.0) < 1e-9);
  }
  CHECK(percentile(x, 0.0) == 0.1);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);

  // One sample: a single step.
  CHECK(empirical_cdf({2.0}, 1.999) == 0.0);
  CHECK(empirical_cdf({2.0}, 2.0) == 1.0);
}

TEST_CASE("trial mode names") {
  CHECK(TrialMode::parse("disac").kind == TrialMode::Kind::Disac);
  const TrialMode m = TrialMode::parse("isac:1,ls");
  CHECK(m.kind == TrialMode::Kind::Isac);
  CHECK(m.ue_id == 1);
  CHECK(m.weighting == Weighting::Ls);
  CHECK(TrialMode::parse(m.name()).name() == m.name());
  CHECK_THROWS_AS(TrialMode::parse("fusion"), Error);
  CHECK_THROWS_AS(TrialMode::parse("isac:x"), Error);
}

TEST_CASE("config parsing") {
  const ScenarioConfig d = default_config();
  const ScenarioConfig r = parse_config(dump_config(d));
  CHECK(dump_config(r) == dump_config(d));

  try {
    (void)parse_config(R"({"schema": "disac-config/1", "ofdm": {"bandwith_hz": 1e8}})");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("ofdm.bandwith_hz") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"ofdm": {}})"), Error);
  CHECK_THROWS_AS(parse_config("{ not json"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("run_trial is deterministic") {
  ScenarioConfig c = default_config();
  const auto a = run_trial(c, 17, TrialMode::parse("disac"));
  const auto b = run_trial(c, 17, TrialMode::parse("disac"));
  CHECK(to_json(a).dump() == to_json(b).dump());
  const auto other = run_trial(c, 18, TrialMode::parse("disac"));
  CHECK(to_json(a).dump() != to_json(other).dump());
}

TEST_CASE("noiseless trial with one point per target") {
  ScenarioConfig c = default_config();
  c.add_noise = false;
  c.sampling.points_per_target = 1;
  std::vector<TrialDetails> details;
  const auto res = run_trial(c, 3, {TrialMode::parse("disac")}, 0, &details);
  REQUIRE(res.size() == 1);
  REQUIRE(res[0].ok);
  for (const auto& u : res[0].ues) {
    CHECK(u.estimated);
    CHECK(u.position_error_m < 1e-3);
    CHECK(u.timing_error_s < 1e-12 + 1e-3 / kSpeedOfLight);
  }
  for (const auto& t : res[0].targets)
    if (t.detected) CHECK(t.error_m < 1e-3);
  CHECK(res[0].detections() >= 1);
  CHECK(res[0].false_alarms == 0);
}

TEST_CASE("oracle paths recover the scene exactly") {
  ScenarioConfig c = default_config();
  c.oracle_paths = true;
  c.add_noise = false;
  c.sampling.points_per_target = 1;
  const auto res = run_trial(c, 5, {TrialMode::parse("disac"), TrialMode::parse("isac:0")});
  REQUIRE(res.size() == 2);
  for (const auto& r : res) {
    REQUIRE(r.ok);
    for (const auto& u : r.ues)
      if (u.estimated) CHECK(u.position_error_m < 1e-6);
    for (const auto& t : r.targets)
      if (t.detected) CHECK(t.error_m < 1e-6);
  }
  // The single-UE run never knows more than the fused one.
  CHECK(res[1].detections() <= res[0].detections());
}

TEST_CASE("isac reports a target outside its field of interest as missed") {
  ScenarioConfig c = default_config();
  c.oracle_paths = true;
  c.add_noise = false;
  c.sampling.points_per_target = 1;
  // A narrow FoI leaves UE 0 unable to see at least one target on some seed.
  c.foi.azimuth_bound = 0.12;
  c.foi.elevation_bound = 0.5;
  c.sampling.foi_azimuth = 0.12;
  c.sampling.foi_elevation = 0.5;
  bool saw_miss = false;
  for (std::uint64_t seed = 1; seed <= 20 && !saw_miss; ++seed) {
    const auto r = run_trial(c, seed, TrialMode::parse("isac:0"));
    if (!r.ok) continue;
    for (const auto& t : r.targets) saw_miss |= !t.detected;
  }
  CHECK(saw_miss);
}

TEST_CASE("summaries") {
  std::vector<TrialResult> trials(2);
  trials[0].mode = trials[1].mode = "disac";
  trials[0].ues = {{0, true, 0.2, 1e-10}, {1, true, 0.4, 2e-10}};
  trials[0].targets = {{0, true, 0.3}, {1, false, 0.0}};
  trials[1].ok = false;
  trials[1].failed_stage = "fusion";
  const ModeSummary s = summarize("disac", trials);
  CHECK(s.trials == 2);
  CHECK(s.failed == 1);
  CHECK(s.targets_detected == 1);
  CHECK(s.ue_errors.size() == 2);
  CHECK(s.target_errors == std::vector<double>{0.3});
}
