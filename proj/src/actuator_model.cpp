#include "hasel/actuator_model.hpp"

#include <cmath>
#include <sstream>

#include "hasel/errors.hpp"

namespace hasel {

namespace {

[[noreturn]] void domain_fail(const char* quantity, double value, const char* bound, double limit) {
  std::ostringstream os;
  os << quantity << " = " << value << " violates " << bound << " " << limit;
  throw DomainError(os.str());
}

void check_contraction(const StackConfig& cfg, double x) {
  if (!(x >= 0.0)) domain_fail("contraction x", x, "lower bound", 0.0);
  if (x > cfg.x_free) domain_fail("contraction x", x, "upper bound x_free", cfg.x_free);
}

// Piecewise-linear reference curve, extended linearly from the last knot to 0 N at x_free.
double reference_force(const StackConfig& cfg, double x) {
  const auto& k = cfg.force_knots;
  if (x <= k.front().contraction) return k.front().force;
  for (std::size_t j = 1; j < k.size(); ++j) {
    if (x <= k[j].contraction) {
      double s = (x - k[j - 1].contraction) / (k[j].contraction - k[j - 1].contraction);
      return k[j - 1].force + s * (k[j].force - k[j - 1].force);
    }
  }
  const ForceKnot& last = k.back();
  double span = cfg.x_free - last.contraction;
  if (span <= 0.0) return last.force;
  double s = (x - last.contraction) / span;
  return last.force * (1.0 - s);
}

}  // namespace

void StackConfig::validate() const {
  if (n_units < 1) throw DomainError("n_units must be >= 1");
  if (force_knots.empty()) throw DomainError("force_knots must not be empty");
  for (std::size_t j = 0; j < force_knots.size(); ++j) {
    if (force_knots[j].force < 0.0) throw DomainError("force_knots: forces must be non-negative");
    if (j > 0) {
      if (!(force_knots[j].contraction > force_knots[j - 1].contraction))
        throw DomainError("force_knots: contraction must be strictly increasing");
      if (force_knots[j].force > force_knots[j - 1].force)
        throw DomainError("force_knots: force must be non-increasing in contraction");
    }
  }
  if (force_knots.front().contraction < 0.0) throw DomainError("force_knots: contraction must be >= 0");
  if (!(v_ref > 0.0)) throw DomainError("v_ref must be > 0");
  if (v_ref > v_max) throw DomainError("v_ref must be <= v_max");
  if (x_free < force_knots.back().contraction) throw DomainError("x_free must be >= last knot contraction");
  if (!(c0 > 0.0)) throw DomainError("c0 must be > 0");
  if (c_slope < 0.0) throw DomainError("c_slope must be >= 0");
  if (!(force_exponent > 0.0)) throw DomainError("force_exponent must be > 0");
}

StackConfig StackConfig::with_units(int n_units) {
  StackConfig cfg;
  double scale = n_units / 2.0;
  cfg.n_units = n_units;
  cfg.force_knots = {{0.0, 25.3 * scale}, {6.0, 2.0 * scale}};
  cfg.c0 = 0.2 * n_units;
  cfg.c_slope = 0.05 * n_units;
  return cfg;
}

double active_force(const StackConfig& cfg, double v, double x) {
  check_contraction(cfg, x);
  if (!(v >= 0.0)) domain_fail("voltage v", v, "lower bound", 0.0);
  if (v > cfg.v_max) domain_fail("voltage v", v, "upper bound v_max", cfg.v_max);
  double ratio = v / cfg.v_ref;
  double scale = cfg.force_exponent == 2.0 ? ratio * ratio : std::pow(ratio, cfg.force_exponent);
  return reference_force(cfg, x) * scale;
}

double capacitance_of(const StackConfig& cfg, double x) {
  check_contraction(cfg, x);
  return cfg.c0 + cfg.c_slope * x;
}

double displacement_current(double c, double dv_dt, double v, double dc_dt) {
  return c * dv_dt + v * dc_dt;
}

EquilibriumResult equilibrium_contraction(const StackConfig& cfg, double v, const LoadFunction& load,
                                          double force_tol) {
  auto residual = [&](double x) { return active_force(cfg, v, x) - load(x); };

  double lo = 0.0;
  double hi = cfg.x_free;
  double r_lo = residual(lo);
  if (r_lo <= 0.0) return {lo, r_lo, 0, false};
  double r_hi = residual(hi);
  if (r_hi >= 0.0) return {hi, r_hi, 0, false};

  for (int it = 1; it <= kMaxBisectionIterations; ++it) {
    double mid = 0.5 * (lo + hi);
    double r_mid = residual(mid);
    if (r_mid > r_lo || r_mid < r_hi) {
      std::ostringstream os;
      os << "non-monotone force residual at x = " << mid << " mm (residual " << r_mid << " N outside ["
         << r_hi << ", " << r_lo << "])";
      throw ModelConsistencyError(os.str());
    }
    if (std::abs(r_mid) <= force_tol) return {mid, r_mid, it, true};
    if (mid == lo || mid == hi) break;
    if (r_mid > 0.0) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
      r_hi = r_mid;
    }
  }
  std::ostringstream os;
  os << "force balance not reached within " << force_tol << " N near x = " << 0.5 * (lo + hi)
     << " mm (bracket residuals " << r_lo << ", " << r_hi << ")";
  throw ModelConsistencyError(os.str());
}

}  // namespace hasel
