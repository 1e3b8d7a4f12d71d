#pragma once

namespace hasel {

// Flexor tendon path from one actuator stack to its joint(s): a pulley that
// multiplies stroke, lumped friction, slack, and the passive elastic extensor.
struct TendonPath {
  double pulley_ratio = 2.0;  // tendon excursion per mm of contraction
  double eta_fwd = 0.358;     // force transmission efficiency, (0, 1]
  double f_breakaway = 3.0;   // static friction seen at the actuator, N
  double slack = 0.0;         // mm of excursion consumed before joint motion
  double k_ext = 0.3;         // extensor rate, N per mm of excursion
  double f_ext0 = 1.6;        // extensor pretension, N

  void validate() const;
};

double excursion_of(const TendonPath& path, double x);

// Actuator-side load needed to hold a tendon tension.
double reflected_load(const TendonPath& path, double tendon_tension);

double extensor_tension(const TendonPath& path, double excursion);

// Stiction gate: motion starts only once |net_force| exceeds f_breakaway.
bool motion_permitted(const TendonPath& path, double net_force);

// Tendon tension available when the joint is blocked and the actuator pushes
// with actuator_force: friction is subtracted, then efficiency and pulley applied.
double blocked_tension(const TendonPath& path, double actuator_force);

}  // namespace hasel
