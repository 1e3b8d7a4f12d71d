#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hasel/episode.hpp"
#include "hasel/errors.hpp"
#include "hasel/hash.hpp"
#include "support.hpp"

using namespace hasel;

namespace {

// Flat current trace on the default sampling grid.
SignalTrace flat_trace(double current, double duration = 1.0) {
  SignalTrace tr;
  tr.meta.dt_sample = 1e-3;
  tr.meta.monitored_stack = "index_mcp";
  tr.meta.profile_hash = hex64(VoltageProfile::ramp_hold(1.0, 5.5).fingerprint());
  const auto n = static_cast<int>(std::lround(duration / 1e-3));
  for (int k = 0; k <= n; ++k) {
    TraceSample s;
    s.t = k * 1e-3;
    s.i_meas = current;
    tr.rows.push_back(s);
  }
  return tr;
}

SignalTrace preset_run(const std::string& name, std::uint64_t seed) {
  const auto& cfg = test::config();
  const auto& p = cfg.preset(name);
  return run_scenario(test::hand(), cfg.objects, cfg.scenario_of(p), cfg.amplifier_for(p), cfg.sim_for(p), seed);
}

EpisodeSpec balloon_spec() {
  const auto& cfg = test::config();
  const auto& p = cfg.preset("balloon_contact_aware");
  EpisodeSpec spec;
  spec.scenario = cfg.scenario_of(p);
  spec.amp = cfg.amplifier_for(p);
  spec.sim = cfg.sim_for(p);
  spec.controller = ControllerKind::contact_aware;
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < cfg.controller.baseline_runs; ++k)
    seeds.push_back(cfg.controller.baseline_seed_offset + static_cast<std::uint64_t>(k));
  spec.baseline = make_baseline(test::hand(), cfg.objects, spec.scenario, spec.amp, spec.sim, seeds,
                                cfg.controller.smoothing);
  return spec;
}

const EpisodeSpec& shared_balloon_spec() {
  static const EpisodeSpec spec = balloon_spec();
  return spec;
}

double max_force(const SignalTrace& tr) {
  double m = 0.0;
  for (const auto& row : tr.rows)
    for (double f : row.f_contact) m = std::max(m, f);
  return m;
}

}  // namespace

TEST_CASE("moving average is causal") {
  const std::vector<double> xs{5.0, 1.0, 3.0, 8.0};
  auto out = moving_average(xs, 2);
  CHECK(out == std::vector<double>{5.0, 3.0, 2.0, 5.5});
  CHECK(moving_average(xs, 1) == xs);
}

TEST_CASE("detection config validation") {
  DetectionConfig d;
  CHECK_NOTHROW(d.validate());
  CHECK_NOTHROW(d.validate_against(VoltageProfile::ramp_hold(1.0, 5.5)));
  CHECK_THROWS_AS(d.validate_against(VoltageProfile::ramp_hold(0.9, 5.5)), ConfigError);
  CHECK_THROWS_AS(d.validate_against(VoltageProfile::hold(3.0)), ConfigError);
  d.i_threshold = 0.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d = DetectionConfig{};
  d.smoothing = 0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d = DetectionConfig{};
  d.window_end = d.window_start;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("calibration picks the midpoint") {
  const std::vector<SignalTrace> free{flat_trace(1.0)};
  const std::vector<SignalTrace> grasp{flat_trace(0.4)};
  auto cal = calibrate_threshold(free, grasp, DetectionConfig{});
  CHECK(cal.threshold == doctest::Approx(0.7));
  CHECK(cal.min_free == doctest::Approx(1.0));
  CHECK(cal.max_grasp == doctest::Approx(0.4));
}

TEST_CASE("identical classes fail calibration with both extrema") {
  const std::vector<SignalTrace> same{flat_trace(2.5)};
  try {
    calibrate_threshold(same, same, DetectionConfig{});
    FAIL("expected a calibration failure");
  } catch (const CalibrationError& e) {
    CHECK(e.min_free() == doctest::Approx(2.5));
    CHECK(e.max_grasp() == doctest::Approx(2.5));
  }
  const std::vector<SignalTrace> none;
  CHECK_THROWS_AS(calibrate_threshold(none, same, DetectionConfig{}), InsufficientDataError);
}

TEST_CASE("calibration separates 10 free and 10 cube traces") {
  DetectionConfig det = test::config().detection;
  std::vector<SignalTrace> free;
  std::vector<SignalTrace> grasp;
  for (std::uint64_t s = 0; s < 10; ++s) free.push_back(preset_run("detect_free", s));
  for (std::uint64_t s = 10; s < 20; ++s) grasp.push_back(preset_run("detect_cube", s));
  auto cal = calibrate_threshold(free, grasp, det);

  // Oracle: scan every pooled window sample as a candidate threshold and keep
  // the ones that put all free windows strictly above and all grasp windows
  // strictly below.
  auto window = [&](const SignalTrace& tr) {
    auto sm = moving_average(tr.currents(), det.smoothing);
    std::vector<double> w;
    for (std::size_t k = 0; k < sm.size(); ++k)
      if (tr.rows[k].t >= det.window_start - 1e-9 && tr.rows[k].t <= det.window_end + 1e-9) w.push_back(sm[k]);
    return w;
  };
  double lo_free = 1e300;
  double hi_grasp = -1e300;
  std::vector<double> pooled;
  for (const auto& tr : free)
    for (double x : window(tr)) lo_free = std::min(lo_free, x), pooled.push_back(x);
  for (const auto& tr : grasp)
    for (double x : window(tr)) hi_grasp = std::max(hi_grasp, x), pooled.push_back(x);
  bool separable = false;
  for (double cand : pooled) separable |= cand > hi_grasp && cand <= lo_free;
  CHECK(separable);
  CHECK(cal.min_free == lo_free);
  CHECK(cal.max_grasp == hi_grasp);
  CHECK(hi_grasp < cal.threshold);
  CHECK(cal.threshold < lo_free);

  det.i_threshold = cal.threshold;
  for (const auto& tr : free) CHECK_FALSE(detect_grasp(tr, det).grasped);
  for (const auto& tr : grasp) CHECK(detect_grasp(tr, det).grasped);
}

TEST_CASE("calibrated threshold lies strictly between the classes") {
  for (double f : {0.5, 3.0, 9.0}) {
    for (double g : {0.0, 0.1, 0.49}) {
      const std::vector<SignalTrace> free{flat_trace(f), flat_trace(f + 1.0)};
      const std::vector<SignalTrace> grasp{flat_trace(g), flat_trace(g / 2.0)};
      auto cal = calibrate_threshold(free, grasp, DetectionConfig{});
      CHECK(cal.max_grasp < cal.threshold);
      CHECK(cal.threshold < cal.min_free);
    }
  }
}

TEST_CASE("detection on simulated traces") {
  const DetectionConfig det = test::config().detection;
  auto cube = detect_grasp(preset_run("detect_cube", 0), det);
  CHECK(cube.grasped);
  REQUIRE(cube.decision_time);
  CHECK(*cube.decision_time >= det.window_start);
  CHECK(*cube.decision_time <= det.window_end);
  auto free = detect_grasp(preset_run("detect_free", 0), det);
  CHECK_FALSE(free.grasped);
  CHECK_FALSE(free.decision_time);
}

TEST_CASE("zero current is detected at the window start") {
  auto r = detect_grasp(flat_trace(0.0), DetectionConfig{});
  CHECK(r.grasped);
  REQUIRE(r.decision_time);
  CHECK(*r.decision_time == doctest::Approx(0.85));
}

TEST_CASE("a stream that stops inside the window is insufficient") {
  CHECK_THROWS_AS(detect_grasp(flat_trace(10.0, 0.9), DetectionConfig{}), InsufficientDataError);
  GraspDetector live(DetectionConfig{});
  for (const auto& row : flat_trace(10.0, 0.5).rows) live.push(row.t, row.i_meas);
  CHECK_THROWS_AS(live.result(), InsufficientDataError);
}

TEST_CASE("debounce rejects short dips") {
  auto tr = flat_trace(10.0);
  for (std::size_t k = 900; k < 905; ++k) tr.rows[k].i_meas = 0.0;
  DetectionConfig det;
  det.smoothing = 1;
  CHECK_FALSE(detect_grasp(tr, det).grasped);
  for (std::size_t k = 905; k < 910; ++k) tr.rows[k].i_meas = 0.0;
  auto r = detect_grasp(tr, det);
  CHECK(r.grasped);
  CHECK(*r.decision_time == doctest::Approx(0.9));
}

TEST_CASE("live and offline detectors agree") {
  const DetectionConfig det = test::config().detection;
  for (const char* name : {"detect_free", "detect_cube"}) {
    for (std::uint64_t seed : {0u, 5u, 11u}) {
      const auto tr = preset_run(name, seed);
      GraspDetector live(det);
      for (const auto& row : tr.rows) live.push(row.t, row.i_meas);
      CHECK(live.result() == detect_grasp(tr, det));
    }
  }
}

TEST_CASE("contact-aware step") {
  ControllerState ramp;
  SUBCASE("small deviation keeps ramping") {
    auto out = contact_aware_step({0.5, 9.0, 9.5, 2.7, 2.75}, ramp, 1.0);
    CHECK(out.v_cmd == 2.75);
    CHECK(out.state.mode == ControllerMode::ramping);
  }
  SUBCASE("large deviation holds the previous command") {
    auto out = contact_aware_step({0.5, 5.0, 9.5, 2.7, 2.75}, ramp, 1.0);
    CHECK(out.v_cmd == 2.7);
    CHECK(out.state.mode == ControllerMode::holding);
    CHECK(out.state.v_held == 2.7);
    CHECK(out.state.contact_time == 0.5);
    auto again = contact_aware_step({0.6, 9.5, 9.5, 2.7, 3.3}, out.state, 1.0);
    CHECK(again.v_cmd == 2.7);
    CHECK(again.state.mode == ControllerMode::holding);
  }
  SUBCASE("deviation at the first sample holds zero") {
    auto out = contact_aware_step({0.0, 0.0, 5.0, 0.0, 0.0055}, ramp, 1.0);
    CHECK(out.state.mode == ControllerMode::holding);
    CHECK(out.v_cmd == 0.0);
  }
}

TEST_CASE("immediate hold leaves the hand at rest") {
  EpisodeSpec spec = shared_balloon_spec();
  for (double& i : spec.baseline->i) i += 100.0;
  auto rep = run_grasp_episode(test::hand(), test::config().objects, spec, 0);
  REQUIRE(rep.hold_voltage);
  CHECK(*rep.hold_voltage == 0.0);
  CHECK(*rep.hold_time == 0.0);
  for (const auto& row : rep.trace.rows) {
    CHECK(row.v_cmd == 0.0);
    for (double th : row.theta) CHECK(th == 0.0);
  }
}

TEST_CASE("controller passes the ramp through without contact") {
  EpisodeSpec spec = shared_balloon_spec();
  spec.scenario.object.reset();
  spec.deviation_threshold = 1e6;
  auto rep = run_grasp_episode(test::hand(), test::config().objects, spec, 3);
  CHECK(rep.final_mode == "ramping");
  CHECK(rep.trace.rows.back().v_cmd == spec.scenario.profile.target());
  CHECK(rep.verdict == "not-grasped");
}

TEST_CASE("ramping past the baseline end is reported") {
  EpisodeSpec spec = shared_balloon_spec();
  spec.scenario.object.reset();
  spec.deviation_threshold = 1e6;
  spec.baseline->i.resize(500);
  CHECK_THROWS_AS(run_grasp_episode(test::hand(), test::config().objects, spec, 0), BaselineExhaustedError);
}

TEST_CASE("baseline for another profile is rejected") {
  EpisodeSpec spec = shared_balloon_spec();
  spec.scenario.profile = VoltageProfile::ramp_hold(1.0, 5.5);
  CHECK_THROWS_AS(run_grasp_episode(test::hand(), test::config().objects, spec, 0), ConfigError);
}

TEST_CASE("baseline recording") {
  const auto& spec = shared_balloon_spec();
  const auto& b = *spec.baseline;
  CHECK(b.i.size() == spec.sim.sample_count());
  CHECK(b.residual_std > 0.0);
  CHECK(b.profile_hash == hex64(spec.scenario.profile.fingerprint()));
  CHECK(b.seeds.size() == 4);
  std::vector<SignalTrace> one{flat_trace(1.0)};
  CHECK_THROWS_AS(record_baseline(one, 5), ConfigError);
}

TEST_CASE("balloon episodes hold before the ramp ends and stay below the crush force") {
  const auto& spec = shared_balloon_spec();
  const auto& balloon = test::config().objects.at("paper_balloon");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rep = run_grasp_episode(test::hand(), test::config().objects, spec, seed);
    REQUIRE(rep.hold_time);
    CHECK(*rep.hold_time < spec.scenario.profile.ramp_time());
    CHECK(rep.final_mode == "holding");
    CHECK(max_force(rep.trace) < balloon.f_crush);
    CHECK(rep.max_contact_force == max_force(rep.trace));
    CHECK_FALSE(rep.crushed);
    REQUIRE(rep.force_bound);
    CHECK(rep.max_contact_force <= *rep.force_bound + 1e-9);

    // The command is frozen from the hold on.
    const double held = *rep.hold_voltage;
    bool after = false;
    for (const auto& row : rep.trace.rows) {
      if (row.t > *rep.hold_time) after = true;
      if (after) CHECK(row.v_cmd == held);
    }
  }
}

TEST_CASE("an absurd deviation threshold lets the balloon be crushed") {
  EpisodeSpec spec = shared_balloon_spec();
  spec.deviation_threshold = 1e6;
  auto rep = run_grasp_episode(test::hand(), test::config().objects, spec, 0);
  CHECK_FALSE(rep.hold_time);
  CHECK(max_force(rep.trace) >= test::config().objects.at("paper_balloon").f_crush);
  CHECK(rep.crushed);
}

TEST_CASE("episode detection matches offline detection") {
  const auto& cfg = test::config();
  for (const char* name : {"detect_cube", "detect_free"}) {
    const auto& p = cfg.preset(name);
    EpisodeSpec spec;
    spec.scenario = cfg.scenario_of(p);
    spec.amp = cfg.amplifier_for(p);
    spec.sim = cfg.sim_for(p);
    spec.controller = ControllerKind::detect;
    spec.detection = cfg.detection;
    auto rep = run_grasp_episode(test::hand(), cfg.objects, spec, 2);
    REQUIRE(rep.detection);
    CHECK(*rep.detection == detect_grasp(rep.trace, cfg.detection));
    CHECK(rep.detection->grasped == (std::string(name) == "detect_cube"));
    CHECK_FALSE(rep.crushed);
    CHECK(rep.verdict == (rep.detection->grasped ? "stable" : "not-grasped"));
  }
}

TEST_CASE("contact-aware episodes need a baseline") {
  EpisodeSpec spec = shared_balloon_spec();
  spec.baseline.reset();
  CHECK_THROWS_AS(run_grasp_episode(test::hand(), test::config().objects, spec, 0), ConfigError);
  CHECK(controller_kind_from_string("contact_aware") == ControllerKind::contact_aware);
  CHECK_THROWS_AS(controller_kind_from_string("pid"), ConfigError);
}
