#include "hasel/transmission.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hasel/errors.hpp"

namespace hasel {

void TendonPath::validate() const {
  if (!(pulley_ratio > 0.0)) throw DomainError("pulley_ratio must be > 0");
  if (!(eta_fwd > 0.0 && eta_fwd <= 1.0)) throw DomainError("eta_fwd must be in (0, 1]");
  if (f_breakaway < 0.0) throw DomainError("f_breakaway must be >= 0");
  if (slack < 0.0) throw DomainError("slack must be >= 0");
  if (k_ext < 0.0) throw DomainError("k_ext must be >= 0");
  if (f_ext0 < 0.0) throw DomainError("f_ext0 must be >= 0");
}

double excursion_of(const TendonPath& path, double x) {
  if (!(x >= 0.0)) throw DomainError("actuator contraction must be >= 0, got " + std::to_string(x));
  return std::max(0.0, path.pulley_ratio * x - path.slack);
}

double reflected_load(const TendonPath& path, double tendon_tension) {
  if (!(tendon_tension >= 0.0))
    throw DomainError("tendon tension must be >= 0, got " + std::to_string(tendon_tension));
  return path.pulley_ratio * tendon_tension / path.eta_fwd;
}

double extensor_tension(const TendonPath& path, double excursion) {
  return path.f_ext0 + path.k_ext * excursion;
}

bool motion_permitted(const TendonPath& path, double net_force) {
  return std::abs(net_force) > path.f_breakaway;
}

double blocked_tension(const TendonPath& path, double actuator_force) {
  return std::max(0.0, actuator_force - path.f_breakaway) * path.eta_fwd / path.pulley_ratio;
}

}  // namespace hasel
