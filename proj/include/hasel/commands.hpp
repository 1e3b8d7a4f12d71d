#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hasel/config.hpp"

namespace hasel {

// Writes to a temporary sibling then renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct FingerCharacterization {
  std::string finger;
  double tip_force = 0.0;          // N at v_max, extended posture
  double mcp_saturation_deg = 0.0;  // MCP angle at the end of the hold
  double onset_voltage = 0.0;       // kV, lowest onset over the finger's stacks
  double deadband_max_deg = 0.0;    // largest joint angle while v < onset
};

struct CharacterizeResult {
  std::vector<FingerCharacterization> fingers;
  std::vector<std::filesystem::path> files;
};

// Free-motion ramp sweep per finger (angle_<finger>.csv), blocked fingertip
// force against voltage (force.csv) and a summary (characterize.json).
CharacterizeResult cmd_characterize(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct GraspResult {
  EpisodeReport report;
  std::vector<std::filesystem::path> files;
};

// Seed defaults to the preset's seed_base.
GraspResult cmd_grasp(const ExperimentConfig& cfg, const std::string& preset, std::optional<std::uint64_t> seed,
                      const std::filesystem::path& out_dir);

struct DetectBatchOptions {
  std::optional<int> n_free;  // default: free preset repetitions
  std::optional<int> n_grasp;
  std::optional<std::uint64_t> seed_base;  // free seeds seed_base + k, grasp seeds follow
  double noise_i_scale = 1.0;
};

struct Misclassification {
  std::string label;  // "free" | "grasp"
  std::uint64_t seed = 0;
};

struct DetectBatchResult {
  Calibration calibration;
  int true_positive = 0;   // grasp detected as grasp
  int false_negative = 0;  // grasp missed
  int true_negative = 0;   // free reported free
  int false_positive = 0;  // free reported as grasp
  std::vector<Misclassification> misclassified;
  double max_equilibrium_residual = 0.0;  // N, over calibration and batch runs
  std::vector<std::filesystem::path> files;

  int correct() const { return true_positive + true_negative; }
  int total() const { return true_positive + false_negative + true_negative + false_positive; }
};

// Calibrates on a held-out seed set, then classifies the batch. On a
// calibration failure the summary is still written before the error propagates.
DetectBatchResult cmd_detect_batch(const ExperimentConfig& cfg, const DetectBatchOptions& opts,
                                   const std::filesystem::path& out_dir);

struct ReplayResult {
  DetectionResult verdict;
  std::string json;
  std::filesystem::path file;
};

// Offline detection on a recorded trace. The trace's companion .json metadata
// must match the detector file's profile and config hashes. Without a
// detector file the config's detection section is used.
ReplayResult cmd_replay(const ExperimentConfig& cfg, const std::filesystem::path& trace_path,
                        const std::optional<std::filesystem::path>& detector_path,
                        const std::filesystem::path& out_dir);

}  // namespace hasel
