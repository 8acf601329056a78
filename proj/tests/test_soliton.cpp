#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpmin/energy.hpp"
#include "gpmin/soliton.hpp"
#include "support.hpp"

using namespace gpmin;
using gpmin::testing::townes;

namespace {

// Independent shooting: classical RK4 with a fixed step, series start at
// r = 1e-3, and a shot is "high" once Q changes sign, "low" once Q' > 0.
bool shoots_high(double amp) {
  const double h = 1e-3;
  double r = 1e-3;
  double q = amp + (amp - amp * amp * amp) * r * r / 4.0;
  double p = (amp - amp * amp * amp) * r / 2.0;
  auto rhs = [](double rr, double qq, double pp) { return std::pair{pp, -pp / rr + qq - qq * qq * qq}; };
  while (r < 30.0) {
    const auto [k1q, k1p] = rhs(r, q, p);
    const auto [k2q, k2p] = rhs(r + h / 2, q + h / 2 * k1q, p + h / 2 * k1p);
    const auto [k3q, k3p] = rhs(r + h / 2, q + h / 2 * k2q, p + h / 2 * k2p);
    const auto [k4q, k4p] = rhs(r + h, q + h * k3q, p + h * k3p);
    q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
    r += h;
    if (q < 0.0) return true;
    if (p > 0.0) return false;
  }
  return q < 0.0;
}

double oracle_amplitude() {
  double lo = 1.5, hi = 3.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (shoots_high(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

ErrorKind error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Config;
}

}  // namespace

TEST(Townes, AmplitudeMatchesIndependentShooting) {
  EXPECT_NEAR(townes().shoot_amplitude, 2.2062, 1e-4);
  EXPECT_NEAR(townes().shoot_amplitude, oracle_amplitude(), 1e-6);
}

TEST(Townes, TripleIdentity) {
  const auto& q = townes();
  EXPECT_NEAR(q.mass, 11.70, 5e-3);
  const auto id = identity_residuals(q);
  EXPECT_LT(id.mass_vs_kinetic, 1e-6);
  EXPECT_LT(id.mass_vs_quartic, 1e-6);
}

TEST(Townes, ProfileInvariants) {
  const auto& q = townes();
  EXPECT_GE(q.r_max(), 20.0);
  EXPECT_EQ(q.q_prime.front(), 0.0);
  EXPECT_LT(q.q.back(), 1e-8);
  for (std::size_t i = 0; i < q.q.size(); ++i) {
    EXPECT_GT(q.q[i], 0.0);
    if (i > 1) EXPECT_LT(q.q[i], q.q[i - 1]);
  }
  EXPECT_NO_THROW(validate_profile(q));
}

TEST(Townes, MeshRefinement) {
  TownesOptions fine;
  fine.mesh_step = townes().mesh_step / 2;
  const RadialProfile half = solve_townes(1e-12, fine);
  EXPECT_NEAR(critical_coupling(half) / critical_coupling(townes()), 1.0, 1e-6);
  EXPECT_NEAR(radial_moment(half, 2.0) / radial_moment(townes(), 2.0), 1.0, 1e-6);
}

TEST(Townes, ToleranceBounds) {
  EXPECT_EQ(error_of([] { solve_townes(1e-2); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(error_of([] { solve_townes(1e-15); }), ErrorKind::InvalidArgument);
  EXPECT_NO_THROW(solve_townes(1e-8));
}

TEST(Townes, BracketMustStraddle) {
  TownesOptions opts;
  opts.bracket_low = 2.5;
  opts.bracket_high = 4.0;
  EXPECT_EQ(error_of([&] { solve_townes(1e-10, opts); }), ErrorKind::BracketNotFound);
}

TEST(Townes, CriticalCouplingIsMass) {
  EXPECT_EQ(critical_coupling(townes()), townes().mass);
  RadialProfile broken = townes();
  broken.kinetic *= 1.001;
  EXPECT_EQ(error_of([&] { critical_coupling(broken); }), ErrorKind::InvalidProfile);
}

TEST(Townes, TailContinuity) {
  const auto& q = townes();
  const double rm = q.match_radius;
  EXPECT_NEAR(q.value(rm - 1e-9), q.value(rm + 1e-9), 1e-11);
  // K0 asymptotics: Q ~ c sqrt(pi/(2r)) e^-r.
  const double r = 20.0;
  EXPECT_NEAR(q.value(r) / (q.tail_coefficient * std::sqrt(std::numbers::pi / (2 * r)) * std::exp(-r)), 1.0, 0.01);
}

TEST(Townes, ShotClassifierAgreesWithBracket) {
  const double root = townes().shoot_amplitude;
  for (int i = 0; i < 20; ++i) {
    const double amp = 1.1 + 2.8 * i / 19.0;
    if (std::abs(amp - root) < 1e-3) continue;
    EXPECT_EQ(classify_shot(amp) == ShotOutcome::Overshoot, amp > root) << amp;
    EXPECT_EQ(shoots_high(amp), amp > root) << amp;
  }
}

TEST(RadialMoment, SmallPowerApproachesMass) {
  EXPECT_NEAR(radial_moment(townes(), 1e-5) / townes().mass, 1.0, 1e-4);
  EXPECT_THROW(radial_moment(townes(), 0.0), Error);
  EXPECT_THROW(radial_moment(townes(), 4.5), Error);
}

TEST(RadialMoment, MatchesGridQuadrature) {
  const Grid2D g = make_grid(16, 256);
  const Field q0 = lift_to_grid(townes(), g);
  double m2 = 0.0;
  for (std::size_t iy = 0; iy < g.n(); ++iy)
    for (std::size_t ix = 0; ix < g.n(); ++ix) {
      const double x = g.coordinate(ix), y = g.coordinate(iy);
      m2 += (x * x + y * y) * q0(ix, iy) * q0(ix, iy);
    }
  m2 *= g.cell_area() * townes().mass;  // back to the unnormalized Q
  EXPECT_NEAR(m2 / radial_moment(townes(), 2.0), 1.0, 1e-3);
}

TEST(Lift, NormalizedWithUnitGradientAndCriticalQuotient) {
  const Grid2D g = make_grid(16, 256);
  const Field q0 = lift_to_grid(townes(), g, {1.3, -2.1});
  EXPECT_NEAR(mass(q0), 1.0, 1e-12);
  EXPECT_NEAR(kinetic(q0), 1.0, 1e-4);
  EXPECT_NEAR(gn_quotient(q0) / gpmin::testing::a_star(), 1.0, 1e-3);
}

TEST(Lift, BoxTooSmall) {
  EXPECT_EQ(error_of([] { lift_to_grid(townes(), make_grid(6, 64)); }), ErrorKind::BoxTooSmall);
  EXPECT_GT(mass_fraction_outside(townes(), 6.0), kBoxTailMass);
  EXPECT_LT(mass_fraction_outside(townes(), 16.0), kBoxTailMass);
}

TEST(Lift, QuotientIsLocallyMinimal) {
  const Grid2D g = make_grid(16, 128);
  const Field q0 = lift_to_grid(townes(), g);
  const double base = gn_quotient(q0);
  std::mt19937_64 rng(gpmin::testing::kSeed + 11);
  for (int trial = 0; trial < 100; ++trial) {
    Field delta = gpmin::testing::random_modes(g, rng, 6);
    const double h1 = std::sqrt(mass(delta) + kinetic(delta));
    delta *= 1e-3 / h1;
    EXPECT_GE(gn_quotient(q0 + delta), base - 1e-6);
  }
}
