#include <doctest.h>

#include <cmath>

#include "hasel/actuator_model.hpp"
#include "hasel/errors.hpp"

using namespace hasel;

namespace {

StackConfig two_stack() { return StackConfig::with_units(2); }

}  // namespace

TEST_CASE("active force reproduces the 2-stack knots") {
  const auto cfg = two_stack();
  CHECK(active_force(cfg, 5.5, 0.0) == 25.3);
  CHECK(active_force(cfg, 5.5, 6.0) == 2.0);
  CHECK(active_force(cfg, 5.5, 3.0) == doctest::Approx(13.65).epsilon(1e-12));
  CHECK(active_force(cfg, 0.0, 2.0) == 0.0);
}

TEST_CASE("force beyond the last knot falls linearly to zero at x_free") {
  const auto cfg = two_stack();
  CHECK(active_force(cfg, 5.5, 12.0) == doctest::Approx(0.0));
  CHECK(active_force(cfg, 5.5, 9.0) == doctest::Approx(1.0));
}

TEST_CASE("force scales with the voltage exponent") {
  const auto cfg = two_stack();
  CHECK(active_force(cfg, 2.75, 0.0) == doctest::Approx(25.3 / 4.0));
  auto lin = cfg;
  lin.force_exponent = 1.0;
  CHECK(active_force(lin, 2.75, 0.0) == doctest::Approx(25.3 / 2.0));
}

TEST_CASE("stack sizes scale the knot table and capacitance") {
  const auto one = StackConfig::with_units(1);
  const auto three = StackConfig::with_units(3);
  CHECK(active_force(one, 5.5, 0.0) == doctest::Approx(12.65));
  CHECK(active_force(three, 5.5, 0.0) == doctest::Approx(37.95));
  CHECK(active_force(three, 5.5, 6.0) == doctest::Approx(3.0));
  CHECK(capacitance_of(one, 6.0) == doctest::Approx(0.5));
  CHECK(capacitance_of(three, 0.0) == doctest::Approx(0.6));
}

TEST_CASE("active force rejects arguments outside the domain") {
  const auto cfg = two_stack();
  CHECK_THROWS_AS(active_force(cfg, 5.5, -0.1), DomainError);
  CHECK_THROWS_AS(active_force(cfg, 5.5, 12.5), DomainError);
  CHECK_THROWS_AS(active_force(cfg, -1.0, 0.0), DomainError);
  CHECK_THROWS_AS(active_force(cfg, 6.5, 0.0), DomainError);
  CHECK_NOTHROW(active_force(cfg, 6.0, 12.0));
}

TEST_CASE("active force is monotone over a grid") {
  for (int units : {1, 2, 3}) {
    const auto cfg = StackConfig::with_units(units);
    for (int iv = 0; iv <= 60; ++iv) {
      const double v = 0.1 * iv;
      for (int ix = 0; ix < 240; ++ix) {
        const double x = ix / 20.0;
        CHECK(active_force(cfg, v, (ix + 1) / 20.0) <= active_force(cfg, v, x));
        if (iv < 60) CHECK(active_force(cfg, v + 0.1, x) >= active_force(cfg, v, x));
      }
    }
  }
}

TEST_CASE("stack config validation") {
  auto cfg = two_stack();
  CHECK_NOTHROW(cfg.validate());
  cfg.force_knots = {{0.0, 2.0}, {6.0, 25.3}};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = two_stack();
  cfg.force_knots = {{0.0, 25.3}, {0.0, 2.0}};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = two_stack();
  cfg.v_ref = 6.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = two_stack();
  cfg.x_free = 5.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = two_stack();
  cfg.c0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = two_stack();
  cfg.c_slope = -0.01;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("capacitance is linear in contraction") {
  StackConfig cfg = two_stack();
  cfg.c0 = 0.2;
  cfg.c_slope = 0.05;
  CHECK(capacitance_of(cfg, 0.0) == 0.2);
  CHECK(capacitance_of(cfg, 6.0) == doctest::Approx(0.5));
  double prev = capacitance_of(cfg, 0.0);
  for (int x = 1; x <= 12; ++x) {
    double c = capacitance_of(cfg, x);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("displacement current evaluates both terms") {
  CHECK(displacement_current(1.0, 0.0, 5.0, 0.0) == 0.0);
  CHECK(displacement_current(1.0, 1.0, 3.7, 0.0) == doctest::Approx(1.0));
  CHECK(displacement_current(0.3, 5.5, 2.0, 0.2) == doctest::Approx(2.05));
}

TEST_CASE("displacement current is linear in the rates") {
  for (double alpha : {-2.0, 0.5, 3.0, 10.0}) {
    for (double c : {0.2, 0.7}) {
      for (double v : {0.0, 1.5, 5.5}) {
        double base = displacement_current(c, 1.3, v, 0.07);
        CHECK(displacement_current(c, alpha * 1.3, v, alpha * 0.07) == doctest::Approx(alpha * base));
      }
    }
  }
}

TEST_CASE("unopposed actuator contracts fully") {
  auto r = equilibrium_contraction(two_stack(), 5.5, [](double) { return 0.0; });
  CHECK(r.x == 12.0);
  CHECK_FALSE(r.interior);
}

TEST_CASE("load above the stall force keeps the actuator at rest") {
  auto r = equilibrium_contraction(two_stack(), 5.5, [](double) { return 30.0; });
  CHECK(r.x == 0.0);
  CHECK_FALSE(r.interior);
}

TEST_CASE("constant load equal to a forward evaluation recovers its contraction") {
  const auto cfg = two_stack();
  for (double x0 : {0.5, 2.0, 3.0, 5.9, 8.0, 11.0}) {
    for (double v : {3.0, 5.5}) {
      const double f0 = active_force(cfg, v, x0);
      auto r = equilibrium_contraction(cfg, v, [&](double) { return f0; });
      CHECK(r.interior);
      // Slope magnitude is at least min(knot slope, tail slope) * (v/v_ref)^2.
      const double slope = std::min(23.3 / 6.0, 2.0 / 6.0) * (v / 5.5) * (v / 5.5);
      CHECK(std::abs(r.x - x0) <= kForceTolerance / slope + 1e-12);
      CHECK(std::abs(active_force(cfg, v, r.x) - f0) <= kForceTolerance);
    }
  }
}

TEST_CASE("very stiff load pins the actuator near zero") {
  const double k = 1e6;
  auto r = equilibrium_contraction(two_stack(), 5.5, [&](double x) { return k * x; });
  CHECK(r.x >= 0.0);
  CHECK(r.x <= 25.3 / k + kForceTolerance / k);
  CHECK(std::abs(r.residual) <= kForceTolerance);
}

TEST_CASE("equilibrium balances both sides for spring loads") {
  const auto cfg = two_stack();
  for (double k : {0.5, 2.0, 10.0, 100.0}) {
    for (double f0 : {0.0, 1.0, 5.0}) {
      auto load = [&](double x) { return f0 + k * x; };
      auto r = equilibrium_contraction(cfg, 5.5, load);
      if (r.interior) CHECK(std::abs(active_force(cfg, 5.5, r.x) - load(r.x)) <= kForceTolerance);
    }
  }
}

TEST_CASE("non-monotone residual is reported as a model error") {
  auto load = [](double x) { return x < 5.0 ? 20.0 : (x < 7.0 ? -100.0 : 30.0); };
  CHECK_THROWS_AS(equilibrium_contraction(two_stack(), 5.5, load), ModelConsistencyError);
}
