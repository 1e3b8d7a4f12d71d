#include "hasel/voltage_profile.hpp"

#include <algorithm>

#include "hasel/errors.hpp"
#include "hasel/hash.hpp"
#include "hasel/signal_trace.hpp"

namespace hasel {

const char* to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::ramp: return "ramp";
    case ProfileKind::hold: return "hold";
    case ProfileKind::ramp_hold: return "ramp_hold";
  }
  return "?";
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "ramp") return ProfileKind::ramp;
  if (s == "hold") return ProfileKind::hold;
  if (s == "ramp_hold") return ProfileKind::ramp_hold;
  throw ConfigError("unknown voltage profile kind '" + s + "' (expected ramp, hold or ramp_hold)");
}

VoltageProfile::VoltageProfile(ProfileKind kind, double ramp_time, double target)
    : kind_(kind), ramp_time_(ramp_time), target_(target) {
  if (kind != ProfileKind::hold && !(ramp_time > 0.0)) throw ConfigError("ramp duration must be > 0");
  if (!(target >= 0.0)) throw ConfigError("profile target must be >= 0 kV");
}

VoltageProfile VoltageProfile::ramp(double ramp_time, double target) {
  return {ProfileKind::ramp, ramp_time, target};
}

VoltageProfile VoltageProfile::hold(double target) { return {ProfileKind::hold, 0.0, target}; }

VoltageProfile VoltageProfile::ramp_hold(double ramp_time, double target) {
  return {ProfileKind::ramp_hold, ramp_time, target};
}

double VoltageProfile::operator()(double t) const {
  if (t <= 0.0 && kind_ != ProfileKind::hold) return 0.0;
  switch (kind_) {
    case ProfileKind::ramp: return target_ * t / ramp_time_;
    case ProfileKind::hold: return target_;
    case ProfileKind::ramp_hold: return target_ * std::min(t, ramp_time_) / ramp_time_;
  }
  return 0.0;
}

void VoltageProfile::validate(double v_ceiling) const {
  if (target_ > v_ceiling)
    throw ConfigError("profile target " + format_number(target_) + " kV exceeds amplifier ceiling " +
                      format_number(v_ceiling) + " kV");
}

std::string VoltageProfile::canonical() const {
  std::string s = to_string(kind_);
  s += "(ramp_time=" + format_number(ramp_time_) + ",target=" + format_number(target_) + ")";
  return s;
}

std::uint64_t VoltageProfile::fingerprint() const { return fnv1a64(canonical()); }

}  // namespace hasel
