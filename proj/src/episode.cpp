#include "hasel/episode.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hasel/errors.hpp"

namespace hasel {

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::none: return "none";
    case ControllerKind::detect: return "detect";
    case ControllerKind::contact_aware: return "contact_aware";
  }
  return "?";
}

ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "none") return ControllerKind::none;
  if (s == "detect") return ControllerKind::detect;
  if (s == "contact_aware") return ControllerKind::contact_aware;
  throw ConfigError("unknown controller '" + s + "' (expected none, detect or contact_aware)");
}

namespace {

void summarize_contacts(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                        const EpisodeSpec& spec, EpisodeReport& rep) {
  const SignalTrace& tr = rep.trace;
  const auto& joints = tr.layout.joints;
  const ObjectModel* obj = spec.scenario.object ? &objects.at(*spec.scenario.object) : nullptr;
  if (obj) {
    rep.object = obj->name;
    rep.object_kind = to_string(obj->kind);
    if (obj->kind == ObjectKind::fragile) rep.f_crush = obj->f_crush;
  }

  bool crush_logged = false;
  for (const auto& row : tr.rows) {
    for (std::size_t j = 0; j < joints.size(); ++j) {
      double f = row.f_contact[j];
      if (f > 0.0 && !rep.first_contact_time) {
        rep.first_contact_time = row.t;
        rep.events.push_back({row.t, "contact", joints[j]});
      }
      if (f > rep.max_contact_force) {
        rep.max_contact_force = f;
        rep.max_contact_joint = joints[j];
      }
      if (rep.f_crush && f > *rep.f_crush && !crush_logged) {
        crush_logged = true;
        rep.events.push_back({row.t, "crush", joints[j] + " " + format_number(f) + " N"});
      }
    }
  }
  rep.crushed = crush_logged;

  // Contact flags of engaged fingers at the final sample.
  const TraceSample& last = tr.rows.back();
  std::size_t in_contact = 0;
  for (const auto& name : spec.scenario.fingers) {
    bool touching = false;
    for (std::size_t j = 0; j < joints.size(); ++j)
      if (joints[j].rfind(name + "_", 0) == 0 && last.f_contact[j] > 0.0) touching = true;
    rep.finger_contact.emplace_back(name, touching);
    in_contact += touching ? 1 : 0;
  }
  if (!obj || in_contact == 0)
    rep.verdict = "not-grasped";
  else if (in_contact == spec.scenario.fingers.size())
    rep.verdict = "stable";
  else
    rep.verdict = "partial";

  if (obj && obj->kind == ObjectKind::fragile && rep.hold_time) {
    auto hold_k = static_cast<std::size_t>(std::llround(*rep.hold_time / tr.meta.dt_sample));
    double bound = 0.0;
    for (std::size_t f = 0; f < hand.fingers.size(); ++f) {
      for (std::size_t jj = 0; jj < hand.fingers[f].joints.size(); ++jj) {
        std::size_t j = static_cast<std::size_t>(tr.joint_index(hand.fingers[f].name + "_" + hand.fingers[f].joints[jj].name));
        double theta_hold = tr.rows[hold_k].theta[j];
        double peak = theta_hold;
        for (std::size_t k = hold_k; k < tr.rows.size(); ++k) peak = std::max(peak, tr.rows[k].theta[j]);
        double theta_c = obj->contact_angle(hand.fingers[f].name, static_cast<int>(jj));
        double overshoot = peak - theta_hold;
        bound = std::max(bound, obj->k_obj * std::max(0.0, theta_hold + overshoot - theta_c));
      }
    }
    rep.force_bound = bound;
  }
}

}  // namespace

EpisodeReport run_grasp_episode(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                                const EpisodeSpec& spec, std::uint64_t seed) {
  EpisodeReport rep;
  rep.controller = spec.controller;

  std::optional<GraspDetector> detector;
  if (spec.detection) {
    spec.detection->validate();
    spec.detection->validate_against(spec.scenario.profile);
    detector.emplace(*spec.detection);
  } else if (spec.controller == ControllerKind::detect) {
    throw ConfigError("controller 'detect' needs a detection configuration");
  }

  std::optional<ContactAwareController> controller;
  if (spec.controller == ControllerKind::contact_aware) {
    if (!spec.baseline) throw ConfigError("controller 'contact_aware' needs a baseline profile");
    double threshold = spec.deviation_threshold.value_or(spec.deviation_scale * spec.baseline->residual_std);
    controller.emplace(*spec.baseline, spec.scenario.profile, threshold);
    rep.deviation_threshold = controller->deviation_threshold();
  }

  Simulation sim(hand, objects, spec.scenario, spec.amp, spec.sim, seed);
  for (;;) {
    const TraceSample& s = sim.current();
    if (detector) {
      bool before = detector->decided();
      detector->push(s.t, s.i_meas);
      if (!before && detector->decided())
        rep.events.push_back({s.t, "detection", "grasp detected"});
    }
    if (sim.done()) break;
    double next_t = sim.next_time();
    double v_next = spec.scenario.profile(next_t);
    if (controller) {
      bool was_ramping = controller->state().mode == ControllerMode::ramping;
      v_next = controller->update(s.t, s.i_meas, s.v_cmd, next_t);
      if (was_ramping && controller->state().mode == ControllerMode::holding) {
        rep.hold_time = controller->state().contact_time;
        rep.hold_voltage = controller->state().v_held;
        rep.events.push_back({s.t, "hold", format_number(*rep.hold_voltage) + " kV"});
      }
    }
    sim.advance(v_next);
  }
  rep.trace = std::move(sim).finish();
  if (controller) rep.final_mode = to_string(controller->state().mode);
  if (detector) rep.detection = detector->result();

  summarize_contacts(hand, objects, spec, rep);
  std::stable_sort(rep.events.begin(), rep.events.end(),
                   [](const EpisodeEvent& a, const EpisodeEvent& b) { return a.t < b.t; });
  return rep;
}

BaselineProfile make_baseline(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                              Scenario scenario, const AmplifierModel& amp, const SimConfig& sim,
                              std::span<const std::uint64_t> seeds, int smoothing) {
  scenario.object.reset();
  std::vector<SignalTrace> runs;
  runs.reserve(seeds.size());
  for (std::uint64_t s : seeds) runs.push_back(run_scenario(hand, objects, scenario, amp, sim, s));
  return record_baseline(runs, smoothing);
}

std::string episode_report_json(const EpisodeReport& rep, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["scenario"] = rep.trace.meta.scenario;
  j["seed"] = rep.trace.meta.seed;
  j["config_hash"] = config_hash;
  j["profile_hash"] = rep.trace.meta.profile_hash;
  j["controller"] = to_string(rep.controller);
  j["object"] = rep.object ? nlohmann::ordered_json(*rep.object) : nlohmann::ordered_json(nullptr);
  if (rep.object) j["object_kind"] = rep.object_kind;
  j["verdict"] = rep.verdict;
  if (rep.detection) {
    j["grasped"] = rep.detection->grasped;
    j["decision_time"] = rep.detection->decision_time ? nlohmann::ordered_json(*rep.detection->decision_time)
                                                      : nlohmann::ordered_json(nullptr);
  } else {
    j["grasped"] = nullptr;
  }
  nlohmann::ordered_json fingers = nlohmann::ordered_json::object();
  for (const auto& [name, touching] : rep.finger_contact) fingers[name] = touching;
  j["finger_contact"] = fingers;
  j["first_contact_time"] =
      rep.first_contact_time ? nlohmann::ordered_json(*rep.first_contact_time) : nlohmann::ordered_json(nullptr);
  j["max_contact_force"] = rep.max_contact_force;
  j["max_contact_joint"] = rep.max_contact_joint;
  if (rep.controller == ControllerKind::contact_aware) {
    j["final_mode"] = rep.final_mode;
    j["deviation_threshold"] = rep.deviation_threshold.value_or(0.0);
    j["hold_time"] = rep.hold_time ? nlohmann::ordered_json(*rep.hold_time) : nlohmann::ordered_json(nullptr);
    j["hold_voltage"] = rep.hold_voltage ? nlohmann::ordered_json(*rep.hold_voltage) : nlohmann::ordered_json(nullptr);
  }
  if (rep.f_crush) {
    j["f_crush"] = *rep.f_crush;
    j["crushed"] = rep.crushed;
    if (rep.force_bound) {
      j["force_bound"] = *rep.force_bound;
      j["force_bound_below_crush"] = *rep.force_bound < *rep.f_crush;
    }
  } else {
    j["crushed"] = false;
  }
  j["max_equilibrium_residual"] = rep.trace.meta.max_equilibrium_residual;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : rep.events) events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  j["events"] = events;
  return j.dump(2) + "\n";
}

}  // namespace hasel
