#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hasel {

struct JointSpec {
  std::string name;
  double r_eff = 10.0;        // mm of excursion per rad of flexion
  double theta_max = 1.5708;  // rad
  double phalanx_len = 40.0;  // mm
};

// Joints are ordered proximal to distal. Each joint outside the coupled pair
// has its own flexor tendon; the coupled pair shares one.
struct FingerLayout {
  std::string name;
  std::vector<JointSpec> joints;
  std::optional<std::pair<int, int>> coupled_pair;

  void validate() const;
  bool is_thumb() const { return name == "thumb"; }
  double total_length() const;
};

// Joint indices driven by each tendon, in tendon order (by first joint).
std::vector<std::vector<int>> tendon_joints(const FingerLayout& layout);

// "mcp", "pipdip", "ip": concatenated joint names of a tendon.
std::string tendon_label(const FingerLayout& layout, int tendon);

struct FingerState {
  std::vector<double> theta;      // rad
  std::vector<bool> contact;
  std::vector<double> f_contact;  // N
  // Abduction is mechanically fixed; kept so reports carry the column.
  double abduction = 0.0;

  static FingerState rest(const FingerLayout& layout);
};

enum class ObjectKind { rigid, compliant, fragile };

const char* to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& s);

struct ObjectModel {
  std::string name;
  ObjectKind kind = ObjectKind::rigid;
  // Per finger, per joint angle at which the finger meets the object. Missing
  // fingers or joints never touch it.
  std::map<std::string, std::vector<double>> theta_contact;
  double k_obj = 1e4;   // N/rad
  double f_crush = 0.0;  // N, fragile only
  double mass_g = 0.0;   // metadata, gravity is not simulated

  void validate() const;
  double contact_angle(const std::string& finger, int joint) const;
};

// Angle of the joint(s) driven by one tendon at the given excursion.
double tendon_angle(const FingerLayout& layout, int tendon, double excursion);

std::vector<double> angles_from_excursion(const FingerLayout& layout, std::span<const double> excursions);

std::vector<double> tendon_tension_from_torques(const FingerLayout& layout, std::span<const double> torques);

struct ContactLoad {
  double torque = 0.0;  // N*mm about the joint
  double force = 0.0;   // N normal
  bool in_contact = false;
};

ContactLoad contact_torque(const ObjectModel& obj, const FingerLayout& layout, int joint, double theta);

// Static fingertip force in the extended posture: moment balance about the
// MCP joint, (tension - extensor) * r_mcp / finger length, clamped at 0.
double fingertip_force(const FingerLayout& layout, double tension, double extensor, const FingerState& posture);

}  // namespace hasel
