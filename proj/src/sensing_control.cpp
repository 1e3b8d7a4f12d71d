#include "hasel/sensing_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "hasel/errors.hpp"
#include "hasel/hash.hpp"

namespace hasel {

namespace {

constexpr double kTimeEps = 1e-9;
// Noise-free baselines have zero residual; keep the deviation test strict.
constexpr double kMinDeviationThreshold = 1e-3;

bool in_window(const DetectionConfig& cfg, double t) {
  return t >= cfg.window_start - kTimeEps && t <= cfg.window_end + kTimeEps;
}

void require_window(const DetectionConfig& cfg, double last_t) {
  if (last_t < cfg.window_end - kTimeEps)
    throw InsufficientDataError("current stream ends at t = " + format_number(std::max(last_t, 0.0)) +
                                " s, before the detection window closes at " + format_number(cfg.window_end) + " s");
}

}  // namespace

void DetectionConfig::validate() const {
  if (!(i_threshold > 0.0)) throw ConfigError("detection i_threshold must be > 0");
  if (!(window_start >= 0.0 && window_end > window_start)) throw ConfigError("detection window must be non-empty");
  if (smoothing < 1) throw ConfigError("detection smoothing must be >= 1");
  if (debounce < 1) throw ConfigError("detection debounce must be >= 1");
}

void DetectionConfig::validate_against(const VoltageProfile& profile) const {
  if (profile.kind() == ProfileKind::hold) throw ConfigError("detection needs a ramping voltage profile");
  if (window_end > profile.ramp_time() + kTimeEps)
    throw ConfigError("detection window ends after the ramp (" + format_number(profile.ramp_time()) + " s)");
}

std::vector<double> moving_average(std::span<const double> xs, int n) {
  MovingAverage f(n);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(f.push(x));
  return out;
}

MovingAverage::MovingAverage(int n) : n_(static_cast<std::size_t>(std::max(n, 1))) {}

double MovingAverage::push(double x) {
  buf_.push_back(x);
  if (buf_.size() > n_) buf_.pop_front();
  double s = 0.0;
  for (double v : buf_) s += v;
  return s / static_cast<double>(buf_.size());
}

GraspDetector::GraspDetector(DetectionConfig cfg) : cfg_(std::move(cfg)), filter_(cfg_.smoothing) {}

void GraspDetector::push(double t, double i_meas) {
  double smoothed = filter_.push(i_meas);
  last_t_ = t;
  if (result_.grasped) return;
  if (!in_window(cfg_, t)) {
    run_ = 0;
    return;
  }
  if (smoothed < cfg_.i_threshold) {
    if (run_ == 0) run_start_ = t;
    if (++run_ >= cfg_.debounce) {
      result_.grasped = true;
      result_.decision_time = run_start_;
    }
  } else {
    run_ = 0;
  }
}

DetectionResult GraspDetector::result() const {
  require_window(cfg_, last_t_);
  return result_;
}

DetectionResult detect_grasp(const SignalTrace& trace, const DetectionConfig& cfg) {
  GraspDetector det(cfg);
  for (const auto& r : trace.rows) det.push(r.t, r.i_meas);
  return det.result();
}

WindowExtremes window_extremes(const SignalTrace& trace, const DetectionConfig& cfg) {
  require_window(cfg, trace.rows.empty() ? -1.0 : trace.rows.back().t);
  const auto smoothed = moving_average(trace.currents(), cfg.smoothing);
  WindowExtremes w{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    if (!in_window(cfg, trace.rows[k].t)) continue;
    w.min = std::min(w.min, smoothed[k]);
    w.max = std::max(w.max, smoothed[k]);
  }
  return w;
}

CalibrationError::CalibrationError(double min_free, double max_grasp)
    : std::runtime_error("no separating threshold: free-motion minimum " + format_number(min_free) +
                         " uA <= grasp maximum " + format_number(max_grasp) + " uA"),
      min_free_(min_free),
      max_grasp_(max_grasp) {}

Calibration calibrate_threshold(std::span<const SignalTrace> free_traces, std::span<const SignalTrace> grasp_traces,
                                const DetectionConfig& cfg) {
  if (free_traces.empty() || grasp_traces.empty())
    throw InsufficientDataError("calibration needs at least one free-motion and one grasp trace");
  const std::string& hash = free_traces.front().meta.profile_hash;
  auto check = [&](const SignalTrace& tr) {
    if (tr.meta.profile_hash != hash) throw ConfigError("calibration traces use different voltage profiles");
  };
  Calibration cal{0.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& tr : free_traces) {
    check(tr);
    cal.min_free = std::min(cal.min_free, window_extremes(tr, cfg).min);
  }
  for (const auto& tr : grasp_traces) {
    check(tr);
    cal.max_grasp = std::max(cal.max_grasp, window_extremes(tr, cfg).max);
  }
  if (cal.min_free <= cal.max_grasp) throw CalibrationError(cal.min_free, cal.max_grasp);
  cal.threshold = 0.5 * (cal.min_free + cal.max_grasp);
  return cal;
}

BaselineProfile record_baseline(std::span<const SignalTrace> free_runs, int smoothing) {
  if (free_runs.size() < 2) throw ConfigError("baseline recording needs at least two free-motion runs");
  const SignalTrace& first = free_runs.front();
  const std::size_t n = first.rows.size();
  std::vector<double> mean(n, 0.0);
  for (const auto& tr : free_runs) {
    if (tr.rows.size() != n) throw ConfigError("baseline runs have different lengths");
    if (tr.meta.profile_hash != first.meta.profile_hash)
      throw ConfigError("baseline runs use different voltage profiles");
    for (std::size_t k = 0; k < n; ++k) mean[k] += tr.rows[k].i_meas;
  }
  const double runs = static_cast<double>(free_runs.size());
  for (double& m : mean) m /= runs;

  double ss = 0.0;
  for (const auto& tr : free_runs)
    for (std::size_t k = 0; k < n; ++k) ss += (tr.rows[k].i_meas - mean[k]) * (tr.rows[k].i_meas - mean[k]);

  BaselineProfile b;
  b.dt_sample = first.meta.dt_sample;
  b.i = moving_average(mean, smoothing);
  b.residual_std = std::sqrt(ss / ((runs - 1.0) * static_cast<double>(n)));
  b.profile_hash = first.meta.profile_hash;
  b.smoothing = smoothing;
  for (const auto& tr : free_runs) b.seeds.push_back(tr.meta.seed);
  return b;
}

void write_baseline_csv(const BaselineProfile& b, std::ostream& out) {
  out << "t (s),i (uA)\n";
  for (std::size_t k = 0; k < b.i.size(); ++k)
    out << format_number(static_cast<double>(k) * b.dt_sample) << ',' << format_number(b.i[k]) << '\n';
}

std::string baseline_meta_json(const BaselineProfile& b) {
  nlohmann::ordered_json j;
  j["profile_hash"] = b.profile_hash;
  j["seeds"] = b.seeds;
  j["smoothing"] = b.smoothing;
  j["dt_sample"] = b.dt_sample;
  j["residual_std"] = b.residual_std;
  return j.dump(2) + "\n";
}

const char* to_string(ControllerMode mode) { return mode == ControllerMode::ramping ? "ramping" : "holding"; }

ContactAwareOutput contact_aware_step(const ContactAwareInput& in, const ControllerState& state,
                                      double deviation_threshold) {
  if (state.mode == ControllerMode::holding) return {state.v_held, state};
  if (in.baseline - in.i_smoothed > deviation_threshold) {
    ControllerState next{ControllerMode::holding, in.v_cmd_prev, in.t};
    return {next.v_held, next};
  }
  return {in.v_scheduled, state};
}

ContactAwareController::ContactAwareController(BaselineProfile baseline, VoltageProfile profile,
                                               double deviation_threshold)
    : baseline_(std::move(baseline)),
      profile_(profile),
      threshold_(std::max(deviation_threshold, kMinDeviationThreshold)),
      filter_(baseline_.smoothing) {
  if (baseline_.profile_hash != hex64(profile_.fingerprint()))
    throw ConfigError("baseline was recorded for a different voltage profile (hash " + baseline_.profile_hash + ")");
}

double ContactAwareController::update(double t, double i_meas, double v_cmd_prev, double next_t) {
  double smoothed = filter_.push(i_meas);
  if (state_.mode == ControllerMode::holding) return state_.v_held;
  auto k = static_cast<std::size_t>(std::llround(t / baseline_.dt_sample));
  if (k >= baseline_.i.size())
    throw BaselineExhaustedError("still ramping at t = " + format_number(t) + " s, past the baseline end (" +
                                 format_number(baseline_.duration()) + " s)");
  ContactAwareInput in{t, smoothed, baseline_.i[k], v_cmd_prev, profile_(next_t)};
  ContactAwareOutput out = contact_aware_step(in, state_, threshold_);
  state_ = out.state;
  return out.v_cmd;
}

}  // namespace hasel
