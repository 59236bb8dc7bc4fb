#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fvdsim/protocol.hpp"

using namespace fvd;
using namespace fvd::protocol;

TEST(Layout, FootprintFormulaAndBoundingBox) {
  const double a = 8.27, b = 10.0;
  const auto L = layout_decay_protocol(16, a, b);
  EXPECT_EQ(L.n_x, 5);
  EXPECT_EQ(L.n_y, 3);
  EXPECT_NEAR(L.d_x, (4.0 + std::sqrt(2.0)) * a + 2.0 * b, 1e-12);
  EXPECT_NEAR(L.d_y, (2.0 + std::sqrt(2.0)) * a + 2.0 * b, 1e-12);
  double x_lo = 1e9, x_hi = -1e9, y_lo = 1e9, y_hi = -1e9;
  for (const auto& at : L.all()) {
    x_lo = std::min(x_lo, at.x);
    x_hi = std::max(x_hi, at.x);
    y_lo = std::min(y_lo, at.y);
    y_hi = std::max(y_hi, at.y);
  }
  EXPECT_NEAR(x_hi - x_lo, L.d_x, 1e-9);
  EXPECT_NEAR(y_hi - y_lo, L.d_y, 1e-9);
  EXPECT_GE(x_lo, -1e-12);
  EXPECT_GE(y_lo, -1e-12);
}

TEST(Layout, RingNeighboursSpacedByLatticeConstant) {
  for (int n_s : {12, 16, 20, 24, 28}) {
    const double a = 6.0;
    const auto L = layout_decay_protocol(n_s, a);
    ASSERT_EQ(static_cast<int>(L.main.size()), n_s);
    EXPECT_EQ(L.n_x % 2, 1);
    EXPECT_EQ(L.n_y % 2, 1);
    EXPECT_EQ(static_cast<int>(L.ancilla.size()), n_s);
    for (int i = 0; i < n_s; ++i) {
      const auto& p = L.main[static_cast<std::size_t>(i)];
      const auto& q = L.main[static_cast<std::size_t>((i + 1) % n_s)];
      EXPECT_NEAR(std::hypot(p.x - q.x, p.y - q.y), a, 1e-9) << "n_s=" << n_s << " i=" << i;
    }
    for (const auto& at : L.ancilla) EXPECT_EQ(at.role, Role::ancilla);
  }
}

TEST(Layout, RejectsUnbuildableRings) {
  EXPECT_THROW(layout_decay_protocol(18, 6.0), InvalidParameter);
  EXPECT_THROW(layout_decay_protocol(20, 6.0, 10.0, 4), InvalidParameter);
  EXPECT_THROW(layout_decay_protocol(20, 6.0, 10.0, 10), InvalidParameter);
  EXPECT_THROW(layout_decay_protocol(16, 0.0), InvalidParameter);
  EXPECT_THROW(layout_decay_protocol(16, 6.0, -1.0), InvalidParameter);
  EXPECT_NO_THROW(layout_decay_protocol(20, 6.0, 10.0, 3));
}

TEST(Validation, DefaultProtocolPassesAndIsPure) {
  const auto L = layout_decay_protocol(16, 8.27);
  const auto sched = decay_protocol_schedule();
  const auto r1 = validate(L, sched);
  const auto r2 = validate(L, sched);
  EXPECT_TRUE(r1.all_passed());
  ASSERT_EQ(r1.checks.size(), r2.checks.size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < r1.checks.size(); ++i) {
    const auto& c = r1.checks[i];
    EXPECT_EQ(c.name, r2.checks[i].name);
    EXPECT_EQ(c.measured, r2.checks[i].measured);
    EXPECT_EQ(c.passed, c.relation == "<=" ? c.measured <= c.limit : c.measured >= c.limit) << c.name;
    names.insert(c.name);
  }
  EXPECT_EQ(names.size(), r1.checks.size());
  EXPECT_THROW(r1.find("nonexistent"), InvalidParameter);
}

TEST(Validation, DurationLimitIsInclusive) {
  const auto L = layout_decay_protocol(16, 8.27);
  EXPECT_TRUE(validate(L, decay_protocol_schedule(kTwoPi, -4 * M_PI, 5 * M_PI, 5 * M_PI, 2.0, 2.0)).find("duration").passed);
  const auto longer = validate(L, decay_protocol_schedule(kTwoPi, -4 * M_PI, 5 * M_PI, 5 * M_PI, 2.0, 2.1));
  EXPECT_FALSE(longer.find("duration").passed);
  EXPECT_NEAR(longer.find("duration").measured, 4.1, 1e-12);
}

TEST(Validation, StepQuenchViolatesDetuningSlew) {
  const auto L = layout_decay_protocol(16, 8.27);
  const auto step = decay_protocol_schedule(kTwoPi, -2 * kTwoPi, 1.5 * kTwoPi, 2.5 * kTwoPi, 2.0, 2.0, 0.1, 0.0);
  EXPECT_FALSE(validate(L, step).find("delta_glob_slew").passed);
  const auto smooth = decay_protocol_schedule(kTwoPi, -2 * kTwoPi, 1.5 * kTwoPi, 2.5 * kTwoPi, 2.0, 2.0, 0.1, 0.05);
  EXPECT_TRUE(validate(L, smooth).find("delta_glob_slew").passed);
}

TEST(Validation, AmplitudeAndSpacingLimits) {
  const auto L = layout_decay_protocol(16, 8.27);
  const auto strong = decay_protocol_schedule(20.0);
  EXPECT_FALSE(validate(L, strong).find("omega_max").passed);
  const auto tight = layout_decay_protocol(16, 3.0);
  EXPECT_FALSE(validate(tight, decay_protocol_schedule()).find("min_spacing").passed);
  auto freeze = decay_protocol_schedule();
  freeze.ancilla_freeze = 100.0;
  EXPECT_FALSE(validate(L, freeze).find("ancilla_freeze").passed);
}

TEST(Validation, LargeRingNeedsUpgradedFieldOfView) {
  const auto L = layout_decay_protocol(28, 8.27);
  const auto sched = decay_protocol_schedule();
  const auto standard = validate(L, sched);
  EXPECT_FALSE(standard.all_passed());
  EXPECT_FALSE(standard.find("footprint_y").passed);
  EXPECT_TRUE(validate(L, sched, HardwareConstraints::upgraded_fov()).all_passed());
}

TEST(Schedule, ShapeAndTimingErrors) {
  const auto s = decay_protocol_schedule();
  EXPECT_DOUBLE_EQ(s.drive.t_end(), 4.0);
  EXPECT_DOUBLE_EQ(s.drive.omega(0.0), 0.0);
  EXPECT_DOUBLE_EQ(s.drive.omega(1.0), kTwoPi);
  EXPECT_DOUBLE_EQ(s.drive.delta_glob(0.05), -2.0 * kTwoPi);
  EXPECT_DOUBLE_EQ(s.drive.delta_glob(3.0), 2.5 * kTwoPi);
  EXPECT_THROW(decay_protocol_schedule(kTwoPi, 0, 0, 0, 0.05, 2.0, 0.1), InvalidParameter);
  EXPECT_THROW(decay_protocol_schedule(kTwoPi, 0, 0, 0, 2.0, 2.0, 0.1, 3.0), InvalidParameter);
}
