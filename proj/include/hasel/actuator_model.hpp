#pragma once

#include <functional>
#include <vector>

// Units throughout: mm, kV, N, nF, uA, s.
namespace hasel {

struct ForceKnot {
  double contraction;  // mm
  double force;        // N at v_ref
};

// One Peano-HASEL stack: n_units pouches mechanically in parallel.
struct StackConfig {
  int n_units = 2;
  std::vector<ForceKnot> force_knots{{0.0, 25.3}, {6.0, 2.0}};
  double v_ref = 5.5;
  double x_free = 12.0;
  double c0 = 0.4;       // nF, whole stack
  double c_slope = 0.1;  // nF/mm, whole stack
  double v_max = 6.0;
  double force_exponent = 2.0;

  // Throws DomainError naming the first violated invariant.
  void validate() const;

  // 2-stack knots scaled by n_units/2; capacitance per unit 0.2 nF + 0.05 nF/mm.
  static StackConfig with_units(int n_units);
};

struct ActuatorStackState {
  double x = 0.0;  // contraction, mm
  double v = 0.0;  // applied voltage, kV
  double c = 0.0;  // capacitance, nF; always capacitance_of(cfg, x)
  double i = 0.0;  // current, uA
  double t = 0.0;  // s
};

double active_force(const StackConfig& cfg, double v, double x);

double capacitance_of(const StackConfig& cfg, double x);

/// Displacement current of a time-varying capacitor,
///   i = C dv/dt + v dC/dt,
/// in uA for C in nF, v in kV and rates per second (nF * kV/s = uA).
double displacement_current(double c, double dv_dt, double v, double dc_dt);

struct EquilibriumResult {
  double x = 0.0;
  double residual = 0.0;  // active_force - load at x, N
  int iterations = 0;
  bool interior = false;  // false when pinned to 0 or x_free
};

using LoadFunction = std::function<double(double)>;

inline constexpr double kForceTolerance = 1e-6;
inline constexpr int kMaxBisectionIterations = 200;

// Quasi-static balance active_force(v, x) = load(x). The residual must be
// non-increasing in x; a violation seen during bisection throws ModelConsistencyError.
EquilibriumResult equilibrium_contraction(const StackConfig& cfg, double v, const LoadFunction& load,
                                          double force_tol = kForceTolerance);

}  // namespace hasel
