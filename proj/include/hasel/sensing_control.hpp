#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hasel/signal_trace.hpp"
#include "hasel/voltage_profile.hpp"

namespace hasel {

struct DetectionConfig {
  std::string monitored_stack = "index_mcp";
  double i_threshold = 6.6;   // uA
  double window_start = 0.85;  // s
  double window_end = 1.0;     // s
  int smoothing = 5;           // moving-average length, samples
  int debounce = 10;           // consecutive sub-threshold samples

  void validate() const;
  // The window must lie inside the ramp of the profile it is used with.
  void validate_against(const VoltageProfile& profile) const;
};

// Causal moving average: out[k] is the mean of the last n inputs up to k.
std::vector<double> moving_average(std::span<const double> xs, int n);

class MovingAverage {
 public:
  explicit MovingAverage(int n);
  double push(double x);

 private:
  std::size_t n_;
  std::deque<double> buf_;
};

struct DetectionResult {
  bool grasped = false;
  std::optional<double> decision_time;  // s

  bool operator==(const DetectionResult&) const = default;
};

// Live threshold detector fed one monitor sample per period, in order.
class GraspDetector {
 public:
  explicit GraspDetector(DetectionConfig cfg);

  void push(double t, double i_meas);
  bool decided() const { return result_.grasped; }
  // Throws InsufficientDataError when the stream has not covered the window.
  DetectionResult result() const;

 private:
  DetectionConfig cfg_;
  MovingAverage filter_;
  int run_ = 0;
  double run_start_ = 0.0;
  double last_t_ = -1.0;
  DetectionResult result_;
};

DetectionResult detect_grasp(const SignalTrace& trace, const DetectionConfig& cfg);

struct WindowExtremes {
  double min = 0.0;
  double max = 0.0;
};

// Extremes of the smoothed current over the detection window.
WindowExtremes window_extremes(const SignalTrace& trace, const DetectionConfig& cfg);

struct Calibration {
  double threshold = 0.0;
  double min_free = 0.0;
  double max_grasp = 0.0;
};

// Midpoint between the lowest free-motion and the highest grasp current in the
// window. Throws CalibrationError when the classes overlap.
Calibration calibrate_threshold(std::span<const SignalTrace> free_traces, std::span<const SignalTrace> grasp_traces,
                                const DetectionConfig& cfg);

// Free-motion current trajectory used as the contact-aware reference.
struct BaselineProfile {
  double dt_sample = 1e-3;
  std::vector<double> i;       // smoothed mean current per sample, uA
  double residual_std = 0.0;   // pooled std of raw runs about the mean, uA
  std::string profile_hash;
  std::vector<std::uint64_t> seeds;
  int smoothing = 5;

  double duration() const { return dt_sample * static_cast<double>(i.size() - 1); }
};

BaselineProfile record_baseline(std::span<const SignalTrace> free_runs, int smoothing);

void write_baseline_csv(const BaselineProfile& b, std::ostream& out);
std::string baseline_meta_json(const BaselineProfile& b);

enum class ControllerMode { ramping, holding };

const char* to_string(ControllerMode mode);

struct ControllerState {
  ControllerMode mode = ControllerMode::ramping;
  double v_held = 0.0;        // kV, valid in holding
  double contact_time = 0.0;  // s, valid in holding
};

struct ContactAwareInput {
  double t = 0.0;
  double i_smoothed = 0.0;   // uA
  double baseline = 0.0;     // uA, baseline at t
  double v_cmd_prev = 0.0;   // kV, command currently applied
  double v_scheduled = 0.0;  // kV, next value of the scheduled ramp
};

struct ContactAwareOutput {
  double v_cmd = 0.0;
  ControllerState state;
};

// One controller tick. Ramping switches to holding (for good) once the current
// falls more than deviation_threshold below the baseline; holding repeats v_held.
ContactAwareOutput contact_aware_step(const ContactAwareInput& in, const ControllerState& state,
                                      double deviation_threshold);

// Sample-driven wrapper: smoothing, baseline lookup and profile check.
class ContactAwareController {
 public:
  ContactAwareController(BaselineProfile baseline, VoltageProfile profile, double deviation_threshold);

  // Consumes the sample at t and returns the command for the next sample.
  double update(double t, double i_meas, double v_cmd_prev, double next_t);

  const ControllerState& state() const { return state_; }
  double deviation_threshold() const { return threshold_; }

 private:
  BaselineProfile baseline_;
  VoltageProfile profile_;
  double threshold_;
  MovingAverage filter_;
  ControllerState state_;
};

}  // namespace hasel
