#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hasel/errors.hpp"
#include "hasel/hand_kinematics.hpp"
#include "support.hpp"

using namespace hasel;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

const FingerLayout& finger(const std::string& name) {
  const auto& h = test::hand();
  return h.fingers[h.finger_index(name)];
}

}  // namespace

TEST_CASE("default hand has a two-joint thumb and coupled long fingers") {
  for (const auto& f : test::hand().fingers) {
    CHECK_NOTHROW(f.validate());
    if (f.is_thumb()) {
      CHECK(f.joints.size() == 2);
      CHECK_FALSE(f.coupled_pair);
      CHECK(tendon_joints(f).size() == 2);
    } else {
      CHECK(f.joints.size() == 3);
      CHECK(tendon_joints(f) == std::vector<std::vector<int>>{{0}, {1, 2}});
      CHECK(tendon_label(f, 1) == "pipdip");
    }
  }
}

TEST_CASE("layout validation rejects malformed fingers") {
  FingerLayout thumb = finger("thumb");
  thumb.joints.push_back(thumb.joints.back());
  CHECK_THROWS_AS(thumb.validate(), DomainError);
  FingerLayout index = finger("index");
  index.coupled_pair.reset();
  CHECK_THROWS_AS(index.validate(), DomainError);
  index = finger("index");
  index.joints[0].r_eff = 0.0;
  CHECK_THROWS_AS(index.validate(), DomainError);
}

TEST_CASE("full tendon excursions flex the joints to 90 degrees") {
  FingerLayout f = finger("index");
  f.joints[0].r_eff = 10.82;
  const std::vector<double> full{17.0, 12.0};
  auto theta = angles_from_excursion(f, full);
  CHECK(theta[0] == doctest::Approx(kHalfPi));
  CHECK(theta[1] == doctest::Approx(kHalfPi).epsilon(1e-4));
  CHECK(theta[2] == theta[1]);
  const std::vector<double> rest{0.0, 0.0};
  for (double t : angles_from_excursion(f, rest)) CHECK(t == 0.0);
}

TEST_CASE("angles are monotone, saturate at theta_max and keep PIP equal to DIP") {
  for (const auto& f : test::hand().fingers) {
    const std::size_t n = tendon_joints(f).size();
    std::vector<double> prev(f.joints.size(), 0.0);
    for (int k = 0; k <= 300; ++k) {
      std::vector<double> e(n, 0.1 * k);
      auto theta = angles_from_excursion(f, e);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        CHECK(theta[j] >= prev[j]);
        CHECK(theta[j] <= f.joints[j].theta_max);
      }
      if (f.coupled_pair) CHECK(theta[1] == theta[2]);
      prev = theta;
    }
    for (std::size_t j = 0; j < prev.size(); ++j) CHECK(prev[j] == f.joints[j].theta_max);
  }
}

TEST_CASE("tension from torques divides by the moment arm") {
  FingerLayout f = finger("thumb");
  f.joints[0].r_eff = 10.0;
  const std::vector<double> tau{10.0, 0.0};
  auto t = tendon_tension_from_torques(f, tau);
  CHECK(t[0] == doctest::Approx(1.0));
  CHECK(t[1] == 0.0);
  for (double tension : {0.3, 2.0, 7.0}) {
    const std::vector<double> back{tension * f.joints[0].r_eff, tension * f.joints[1].r_eff};
    auto rt = tendon_tension_from_torques(f, back);
    CHECK(rt[0] == doctest::Approx(tension));
    CHECK(rt[1] == doctest::Approx(tension));
  }
}

TEST_CASE("contact law") {
  FingerLayout f = finger("index");
  f.joints[0].phalanx_len = 40.0;
  ObjectModel obj;
  obj.name = "probe";
  obj.kind = ObjectKind::compliant;
  obj.k_obj = 100.0;
  obj.theta_contact["index"] = {0.3};
  auto none = contact_torque(obj, f, 0, 0.2);
  CHECK(none.force == 0.0);
  CHECK(none.torque == 0.0);
  CHECK_FALSE(none.in_contact);
  auto hit = contact_torque(obj, f, 0, 0.31);
  CHECK(hit.force == doctest::Approx(1.0));
  CHECK(hit.torque == doctest::Approx(40.0));
  CHECK(hit.in_contact);
  // No angle listed for the PIP joint: never touches.
  CHECK_FALSE(contact_torque(obj, f, 1, 1.5).in_contact);
}

TEST_CASE("contact complementarity over a sweep") {
  const auto& objects = test::config().objects;
  for (const auto& [name, obj] : objects) {
    for (const auto& f : test::hand().fingers) {
      for (int j = 0; j < static_cast<int>(f.joints.size()); ++j) {
        for (int k = 0; k <= 160; ++k) {
          const double theta = 0.01 * k;
          auto c = contact_torque(obj, f, j, theta);
          const double gap = std::max(0.0, obj.contact_angle(f.name, j) - theta);
          CHECK(c.force * (std::isinf(gap) ? 0.0 : gap) == 0.0);
          if (std::isinf(gap)) CHECK(c.force == 0.0);
        }
      }
    }
  }
}

TEST_CASE("rigid contact barely penetrates under tendon loads up to 10 N") {
  const FingerLayout& f = finger("index");
  const ObjectModel& cube = test::config().objects.at("cube");
  const double theta_c = cube.contact_angle("index", 0);
  const double r = f.joints[0].r_eff;
  for (double tension : {0.1, 1.0, 5.0, 10.0}) {
    // Independent bisection on tension * r = contact torque.
    double lo = theta_c;
    double hi = kHalfPi;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (contact_torque(cube, f, 0, mid).torque < tension * r)
        lo = mid;
      else
        hi = mid;
    }
    CHECK(lo - theta_c < 1e-3);
    CHECK(lo >= theta_c);
  }
}

TEST_CASE("fingertip force moment balance") {
  const FingerLayout& f = finger("index");
  const auto rest = FingerState::rest(f);
  CHECK(fingertip_force(f, 0.0, 0.0, rest) == 0.0);
  CHECK(fingertip_force(f, 1.0, 2.0, rest) == 0.0);
  const double a = fingertip_force(f, 3.0, 1.0, rest);
  CHECK(a == doctest::Approx(2.0 * f.joints[0].r_eff / f.total_length()));
  CHECK(fingertip_force(f, 5.0, 1.0, rest) == doctest::Approx(2.0 * a));
  auto bent = rest;
  bent.theta[0] = 0.1;
  CHECK_THROWS_AS(fingertip_force(f, 3.0, 1.0, bent), DomainError);
}

TEST_CASE("rest state has zero abduction and no contact") {
  for (const auto& f : test::hand().fingers) {
    auto s = FingerState::rest(f);
    CHECK(s.abduction == 0.0);
    CHECK(s.theta.size() == f.joints.size());
    for (bool c : s.contact) CHECK_FALSE(c);
  }
}

TEST_CASE("object validation") {
  ObjectModel o;
  o.name = "soft_cube";
  o.kind = ObjectKind::rigid;
  o.k_obj = 100.0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o.kind = ObjectKind::fragile;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o.f_crush = 0.2;
  CHECK_NOTHROW(o.validate());
  CHECK(object_kind_from_string("compliant") == ObjectKind::compliant);
  CHECK_THROWS_AS(object_kind_from_string("squishy"), DomainError);
}
