#include "hasel/hand_kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hasel/errors.hpp"

namespace hasel {

void FingerLayout::validate() const {
  for (const auto& j : joints) {
    if (!(j.r_eff > 0.0)) throw DomainError(name + "." + j.name + ": r_eff must be > 0");
    if (!(j.theta_max > 0.0 && j.theta_max <= std::numbers::pi / 2 + 1e-12))
      throw DomainError(name + "." + j.name + ": theta_max must be in (0, pi/2]");
    if (!(j.phalanx_len > 0.0)) throw DomainError(name + "." + j.name + ": phalanx_len must be > 0");
  }
  if (is_thumb()) {
    if (joints.size() != 2 || coupled_pair)
      throw DomainError("thumb must have exactly two independently driven joints");
  } else {
    if (joints.size() != 3 || !coupled_pair || *coupled_pair != std::pair{1, 2})
      throw DomainError(name + ": finger must have MCP plus a coupled PIP/DIP pair (1, 2)");
  }
}

double FingerLayout::total_length() const {
  double len = 0.0;
  for (const auto& j : joints) len += j.phalanx_len;
  return len;
}

std::vector<std::vector<int>> tendon_joints(const FingerLayout& layout) {
  std::vector<std::vector<int>> out;
  for (int j = 0; j < static_cast<int>(layout.joints.size()); ++j) {
    if (layout.coupled_pair && j == layout.coupled_pair->second) continue;
    if (layout.coupled_pair && j == layout.coupled_pair->first)
      out.push_back({layout.coupled_pair->first, layout.coupled_pair->second});
    else
      out.push_back({j});
  }
  return out;
}

std::string tendon_label(const FingerLayout& layout, int tendon) {
  std::string label;
  const auto groups = tendon_joints(layout);
  for (int j : groups.at(tendon)) label += layout.joints[j].name;
  return label;
}

FingerState FingerState::rest(const FingerLayout& layout) {
  FingerState s;
  s.theta.assign(layout.joints.size(), 0.0);
  s.contact.assign(layout.joints.size(), false);
  s.f_contact.assign(layout.joints.size(), 0.0);
  return s;
}

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::rigid: return "rigid";
    case ObjectKind::compliant: return "compliant";
    case ObjectKind::fragile: return "fragile";
  }
  return "?";
}

ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "rigid") return ObjectKind::rigid;
  if (s == "compliant") return ObjectKind::compliant;
  if (s == "fragile") return ObjectKind::fragile;
  throw DomainError("unknown object kind '" + s + "' (expected rigid, compliant or fragile)");
}

void ObjectModel::validate() const {
  if (!(k_obj > 0.0)) throw DomainError(name + ": k_obj must be > 0");
  if (kind == ObjectKind::rigid && k_obj < 1e4) throw DomainError(name + ": rigid objects need k_obj >= 1e4 N/rad");
  if (kind == ObjectKind::fragile && !(f_crush > 0.0)) throw DomainError(name + ": fragile objects need f_crush > 0");
}

double ObjectModel::contact_angle(const std::string& finger, int joint) const {
  auto it = theta_contact.find(finger);
  if (it == theta_contact.end() || joint >= static_cast<int>(it->second.size()))
    return std::numeric_limits<double>::infinity();
  return it->second[joint];
}

double tendon_angle(const FingerLayout& layout, int tendon, double excursion) {
  if (!(excursion >= 0.0)) throw DomainError("tendon excursion must be >= 0");
  const auto groups = tendon_joints(layout);
  const auto& group = groups.at(tendon);
  double r_sum = 0.0;
  double theta_max = std::numeric_limits<double>::infinity();
  for (int j : group) {
    r_sum += layout.joints[j].r_eff;
    theta_max = std::min(theta_max, layout.joints[j].theta_max);
  }
  return std::min(excursion / r_sum, theta_max);
}

std::vector<double> angles_from_excursion(const FingerLayout& layout, std::span<const double> excursions) {
  const auto groups = tendon_joints(layout);
  if (excursions.size() != groups.size())
    throw DomainError(layout.name + ": expected " + std::to_string(groups.size()) + " tendon excursions");
  std::vector<double> theta(layout.joints.size(), 0.0);
  for (std::size_t t = 0; t < groups.size(); ++t) {
    double a = tendon_angle(layout, static_cast<int>(t), excursions[t]);
    for (int j : groups[t]) theta[j] = a;
  }
  return theta;
}

std::vector<double> tendon_tension_from_torques(const FingerLayout& layout, std::span<const double> torques) {
  const auto groups = tendon_joints(layout);
  std::vector<double> tension;
  tension.reserve(groups.size());
  for (const auto& group : groups) {
    double tau = 0.0;
    double r_sum = 0.0;
    for (int j : group) {
      tau += torques[j];
      r_sum += layout.joints[j].r_eff;
    }
    tension.push_back(tau / r_sum);
  }
  return tension;
}

ContactLoad contact_torque(const ObjectModel& obj, const FingerLayout& layout, int joint, double theta) {
  double theta_c = obj.contact_angle(layout.name, joint);
  if (theta < theta_c) return {};
  double force = obj.k_obj * (theta - theta_c);
  return {force * layout.joints[joint].phalanx_len, force, true};
}

double fingertip_force(const FingerLayout& layout, double tension, double extensor, const FingerState& posture) {
  for (double th : posture.theta)
    if (th != 0.0) throw DomainError("fingertip_force is defined for the fully extended posture only");
  double r_mcp = layout.joints.front().r_eff;
  return std::max(0.0, (tension - extensor) * r_mcp / layout.total_length());
}

}  // namespace hasel
