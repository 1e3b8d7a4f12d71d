#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hasel/episode.hpp"
#include "hasel/plant_sim.hpp"
#include "hasel/sensing_control.hpp"

namespace hasel {

struct TendonSpec {
  std::string stack;  // key into ExperimentConfig::stacks
  TendonPath path;
};

struct ScenarioPreset {
  std::string name;
  std::vector<std::string> fingers;
  std::optional<std::string> object;
  VoltageProfile profile = VoltageProfile::ramp_hold(1.0, 5.5);
  ControllerKind controller = ControllerKind::none;
  int repetitions = 1;
  std::uint64_t seed_base = 0;
  std::optional<double> v_ceiling;  // overrides the amplifier ceiling
  std::optional<double> duration;   // overrides sim.duration
};

struct ControllerConfig {
  int baseline_runs = 4;
  double deviation_scale = 3.0;
  std::optional<double> deviation_threshold;  // uA; overrides scale * residual
  int smoothing = 5;
  std::uint64_t baseline_seed_offset = 10000;
};

struct CharacterizeConfig {
  double v_max = 5.5;  // sweep peak, kV
  double ramp_time = 1.0;
  double hold_time = 1.0;
  double v_step = 0.05;
  std::vector<std::string> fingers{"index", "thumb"};
};

struct DetectBatchConfig {
  std::string free_preset = "detect_free";
  std::string grasp_preset = "detect_cube";
  int calibration_runs = 10;  // per class
  std::uint64_t calibration_seed_offset = 100000;
};

struct ExperimentConfig {
  std::map<std::string, StackConfig> stacks;
  std::map<std::string, TendonSpec> tendons;  // keyed by chain id, e.g. "index_mcp"
  std::vector<FingerLayout> fingers;
  std::map<std::string, ObjectModel> objects;
  AmplifierModel amplifier;
  SimConfig sim;
  DetectionConfig detection;
  ControllerConfig controller;
  CharacterizeConfig characterize;
  DetectBatchConfig detect_batch;
  std::map<std::string, ScenarioPreset> presets;

  static ExperimentConfig defaults();

  void validate() const;
  std::string to_json_text() const;
  // FNV-1a of the canonical JSON form, hex.
  std::string hash() const;

  HandModel hand() const;
  const ScenarioPreset& preset(const std::string& name) const;
  Scenario scenario_of(const ScenarioPreset& p) const;
  AmplifierModel amplifier_for(const ScenarioPreset& p) const;
  SimConfig sim_for(const ScenarioPreset& p) const;
};

// Missing top-level sections fall back to defaults; unknown keys are errors.
// ConfigError messages are prefixed "<source>:<line>:".
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace hasel
