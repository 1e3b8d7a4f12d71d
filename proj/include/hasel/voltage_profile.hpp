#pragma once

#include <cstdint>
#include <string>

namespace hasel {

enum class ProfileKind { ramp, hold, ramp_hold };

const char* to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& s);

// Piecewise-linear command voltage v(t) in kV.
//   ramp:      target * t / ramp_time, unbounded past ramp_time
//   hold:      target
//   ramp_hold: target * min(t, ramp_time) / ramp_time
class VoltageProfile {
 public:
  static VoltageProfile ramp(double ramp_time, double target);
  static VoltageProfile hold(double target);
  static VoltageProfile ramp_hold(double ramp_time, double target);

  double operator()(double t) const;

  ProfileKind kind() const { return kind_; }
  double ramp_time() const { return ramp_time_; }
  double target() const { return target_; }

  // Throws ConfigError when the target exceeds the amplifier ceiling.
  void validate(double v_ceiling) const;

  // Canonical text form, e.g. "ramp_hold(ramp_time=1,target=5.5)".
  std::string canonical() const;
  std::uint64_t fingerprint() const;

  bool operator==(const VoltageProfile&) const = default;

 private:
  VoltageProfile(ProfileKind kind, double ramp_time, double target);

  ProfileKind kind_;
  double ramp_time_;
  double target_;
};

}  // namespace hasel
