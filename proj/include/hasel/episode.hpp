#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hasel/plant_sim.hpp"
#include "hasel/sensing_control.hpp"

namespace hasel {

enum class ControllerKind { none, detect, contact_aware };

const char* to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& s);

struct EpisodeSpec {
  Scenario scenario;
  AmplifierModel amp;
  SimConfig sim;
  ControllerKind controller = ControllerKind::none;
  std::optional<DetectionConfig> detection;  // runs the live detector when set
  std::optional<BaselineProfile> baseline;   // required for contact_aware
  std::optional<double> deviation_threshold;  // uA; default deviation_scale * baseline residual
  double deviation_scale = 3.0;
};

struct EpisodeEvent {
  double t = 0.0;
  std::string kind;  // contact | detection | hold | crush
  std::string detail;
};

struct EpisodeReport {
  SignalTrace trace;
  std::vector<EpisodeEvent> events;
  ControllerKind controller = ControllerKind::none;
  std::optional<DetectionResult> detection;
  std::optional<double> deviation_threshold;
  std::optional<double> hold_time;
  std::optional<double> hold_voltage;
  std::string final_mode = "ramping";
  std::optional<double> first_contact_time;
  std::vector<std::pair<std::string, bool>> finger_contact;  // engaged fingers, final sample
  std::string verdict;  // stable | partial | not-grasped
  std::optional<std::string> object;
  std::string object_kind;
  double max_contact_force = 0.0;  // N, max over joints and samples
  std::string max_contact_joint;
  std::optional<double> f_crush;
  bool crushed = false;
  std::optional<double> force_bound;  // k_obj * (theta at hold + overshoot - theta_contact)
};

EpisodeReport run_grasp_episode(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                                const EpisodeSpec& spec, std::uint64_t seed);

// Free-motion runs of the scenario (object removed), averaged into a baseline.
BaselineProfile make_baseline(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                              Scenario scenario, const AmplifierModel& amp, const SimConfig& sim,
                              std::span<const std::uint64_t> seeds, int smoothing);

std::string episode_report_json(const EpisodeReport& report, const std::string& config_hash);

}  // namespace hasel
