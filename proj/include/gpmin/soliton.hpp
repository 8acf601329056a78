#pragma once

// Townes soliton: the positive radial solution of -Q'' - Q'/r + Q - Q^3 = 0,
// found by shooting on Q(0), plus the integrals that define the critical
// coupling and the lift of Q0 = Q/||Q|| onto a periodic grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"

namespace gpmin {

struct RadialProfile {
  std::vector<double> r;
  std::vector<double> q;
  std::vector<double> q_prime;
  double shoot_amplitude = 0.0;
  double mass = 0.0;     // 2 pi int Q^2 r dr
  double kinetic = 0.0;  // 2 pi int Q'^2 r dr
  double quartic = 0.0;  // 2 pi int Q^4 r dr
  /// Uniform spacing of the shooting part of the mesh, [0, match_radius].
  double mesh_step = 0.0;
  /// Beyond this radius Q = tail_coefficient * K0(r).
  double match_radius = 0.0;
  double tail_coefficient = 0.0;

  double r_max() const { return r.empty() ? 0.0 : r.back(); }

  double tail_value(double radius) const { return tail_coefficient * std::cyl_bessel_k(0.0, radius); }
  double tail_derivative(double radius) const { return -tail_coefficient * std::cyl_bessel_k(1.0, radius); }

  /// Q(radius) by cubic Hermite interpolation on the mesh, analytic tail outside.
  double value(double radius) const {
    radius = std::abs(radius);
    if (radius >= match_radius) return tail_value(radius);
    const auto i = std::min(static_cast<std::size_t>(radius / mesh_step), match_index() - 1);
    const double h = r[i + 1] - r[i];
    const double t = (radius - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * q[i] + (t3 - 2 * t2 + t) * h * q_prime[i] + (-2 * t3 + 3 * t2) * q[i + 1] +
           (t3 - t2) * h * q_prime[i + 1];
  }

  std::size_t match_index() const {
    return static_cast<std::size_t>(std::llround(match_radius / mesh_step));
  }
};

namespace detail {

struct RadialState {
  double q = 0.0;
  double p = 0.0;  // Q'
};

inline RadialState townes_rhs(double radius, RadialState s) {
  return {s.p, -s.p / radius + s.q - s.q * s.q * s.q};
}

/// Series start away from the coordinate singularity at r = 0:
/// Q = Q(0) + b r^2 + c r^4 with 4b = Q(0) - Q(0)^3 and 16c = b (1 - 3 Q(0)^2).
inline RadialState series_start(double amplitude, double radius) {
  const double b = 0.25 * (amplitude - amplitude * amplitude * amplitude);
  const double c = b * (1.0 - 3.0 * amplitude * amplitude) / 16.0;
  const double r2 = radius * radius;
  return {amplitude + b * r2 + c * r2 * r2, 2.0 * b * radius + 4.0 * c * r2 * radius};
}

/// Adaptive Dormand-Prince 5(4) integrator for the radial equation.
class DormandPrince {
 public:
  DormandPrince(double rtol, double atol) : rtol_(rtol), atol_(atol) {}

  /// Advances (radius, state) to `target`. `stop` is consulted after every
  /// accepted step; returns false if it fired (radius/state hold that step).
  template <class Stop>
  bool advance(double& radius, RadialState& state, double target, Stop&& stop) {
    while (radius < target) {
      double h = std::min(step_, target - radius);
      for (int attempt = 0;; ++attempt) {
        const auto [next, err] = step(radius, state, h);
        if (err <= 1.0 || h < 1e-14) {
          radius = (h == target - radius) ? target : radius + h;
          state = next;
          const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
          step_ = h * std::clamp(grow, 0.2, 5.0);
          break;
        }
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (attempt > 200) throw Error(ErrorKind::NonConvergence, "radial integrator step size underflow");
      }
      if (stop(radius, state)) return false;
    }
    return true;
  }

  bool advance(double& radius, RadialState& state, double target) {
    return advance(radius, state, target, [](double, RadialState) { return false; });
  }

 private:
  std::pair<RadialState, double> step(double r, RadialState y, double h) const {
    auto add = [](RadialState s, double h0, std::initializer_list<std::pair<double, RadialState>> terms) {
      for (const auto& [w, k] : terms) {
        s.q += h0 * w * k.q;
        s.p += h0 * w * k.p;
      }
      return s;
    };
    const RadialState k1 = townes_rhs(r, y);
    const RadialState k2 = townes_rhs(r + h / 5, add(y, h, {{1.0 / 5, k1}}));
    const RadialState k3 = townes_rhs(r + 3 * h / 10, add(y, h, {{3.0 / 40, k1}, {9.0 / 40, k2}}));
    const RadialState k4 =
        townes_rhs(r + 4 * h / 5, add(y, h, {{44.0 / 45, k1}, {-56.0 / 15, k2}, {32.0 / 9, k3}}));
    const RadialState k5 = townes_rhs(
        r + 8 * h / 9,
        add(y, h, {{19372.0 / 6561, k1}, {-25360.0 / 2187, k2}, {64448.0 / 6561, k3}, {-212.0 / 729, k4}}));
    const RadialState k6 = townes_rhs(r + h, add(y, h,
                                                 {{9017.0 / 3168, k1},
                                                  {-355.0 / 33, k2},
                                                  {46732.0 / 5247, k3},
                                                  {49.0 / 176, k4},
                                                  {-5103.0 / 18656, k5}}));
    const RadialState y5 = add(
        y, h,
        {{35.0 / 384, k1}, {500.0 / 1113, k3}, {125.0 / 192, k4}, {-2187.0 / 6784, k5}, {11.0 / 84, k6}});
    const RadialState k7 = townes_rhs(r + h, y5);
    const RadialState y4 = add(y, h,
                               {{5179.0 / 57600, k1},
                                {7571.0 / 16695, k3},
                                {393.0 / 640, k4},
                                {-92097.0 / 339200, k5},
                                {187.0 / 2100, k6},
                                {1.0 / 40, k7}});
    const double sq = atol_ + rtol_ * std::max(std::abs(y.q), std::abs(y5.q));
    const double sp = atol_ + rtol_ * std::max(std::abs(y.p), std::abs(y5.p));
    const double eq = (y5.q - y4.q) / sq;
    const double ep = (y5.p - y4.p) / sp;
    return {y5, std::sqrt(0.5 * (eq * eq + ep * ep))};
  }

  double rtol_;
  double atol_;
  double step_ = 1e-3;
};

inline constexpr double kSeriesRadius = 1e-4;
inline constexpr double kShootRtol = 1e-13;
inline constexpr double kShootAtol = 1e-16;

// Composite Simpson rule for a smooth function on [a, b].
template <class F>
double simpson(F&& f, double a, double b, double h) {
  if (b <= a) return 0.0;
  auto intervals = static_cast<std::size_t>(std::ceil((b - a) / h));
  if (intervals % 2 != 0) ++intervals;
  const double step = (b - a) / static_cast<double>(intervals);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) sum += ((i % 2 == 1) ? 4.0 : 2.0) * f(a + step * static_cast<double>(i));
  return sum * step / 3.0;
}

inline constexpr double kTailSpan = 60.0;
inline constexpr double kTailStep = 5e-3;

// Euler-Maclaurin corrected trapezoid on mesh nodes with known derivatives;
// fourth order on each interval, valid on nonuniform meshes.
inline double hermite_trapezoid(const std::vector<double>& x, const std::vector<double>& f,
                                const std::vector<double>& df, std::size_t last) {
  double sum = 0.0;
  for (std::size_t i = 0; i < last; ++i) {
    const double h = x[i + 1] - x[i];
    sum += 0.5 * h * (f[i] + f[i + 1]) + h * h / 12.0 * (df[i] - df[i + 1]);
  }
  return sum;
}

}  // namespace detail

enum class ShotOutcome { Undershoot, Overshoot };

/// Classifies a shooting amplitude: below the ground-state amplitude the
/// trajectory turns back up while still positive, above it crosses zero.
inline ShotOutcome classify_shot(double amplitude) {
  detail::DormandPrince ode(detail::kShootRtol, detail::kShootAtol);
  double radius = detail::kSeriesRadius;
  auto state = detail::series_start(amplitude, radius);
  std::optional<ShotOutcome> outcome;
  ode.advance(radius, state, 80.0, [&](double, detail::RadialState s) {
    if (s.q < 0.0) outcome = ShotOutcome::Overshoot;
    else if (s.p > 0.0) outcome = ShotOutcome::Undershoot;
    return outcome.has_value();
  });
  return outcome.value_or(ShotOutcome::Undershoot);
}

struct TownesOptions {
  double mesh_step = 0.01;
  double r_max = 24.0;
  double bracket_low = 1.0;
  double bracket_high = 4.0;
  int max_bisections = 200;
};

namespace detail {

// Samples the trajectory for `amplitude` at r = i * h, i = 0..count-1,
// stopping early once it leaves the positive decreasing branch.
inline std::vector<RadialState> sample_trajectory(double amplitude, double h, std::size_t count) {
  std::vector<RadialState> out;
  out.reserve(count);
  out.push_back({amplitude, 0.0});
  DormandPrince ode(kShootRtol, kShootAtol);
  double radius = kSeriesRadius;
  RadialState state = series_start(amplitude, radius);
  for (std::size_t i = 1; i < count; ++i) {
    ode.advance(radius, state, h * static_cast<double>(i));
    out.push_back(state);
    if (state.q <= 0.0 || state.p >= 0.0) break;
  }
  return out;
}

inline double tail_integral(const RadialProfile& profile, double from, auto&& integrand) {
  return simpson(
      [&](double radius) {
        return 2.0 * std::numbers::pi * radius *
               integrand(radius, profile.tail_value(radius), profile.tail_derivative(radius));
      },
      from, from + kTailSpan, kTailStep);
}

}  // namespace detail

/// Radial integral 2 pi int r^p Q^2 r dr including the analytic tail.
inline double radial_moment(const RadialProfile& profile, double p) {
  if (!(p > 0.0) || p > 4.0) throw Error(ErrorKind::InvalidArgument, "moment order must lie in (0, 4]");
  const std::size_t m = profile.match_index();
  std::vector<double> f(m + 1), df(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    const double r = profile.r[i], q = profile.q[i], qp = profile.q_prime[i];
    const double rp = std::pow(r, p);
    f[i] = 2.0 * std::numbers::pi * rp * r * q * q;
    df[i] = 2.0 * std::numbers::pi * ((p + 1.0) * rp * q * q + 2.0 * rp * r * q * qp);
  }
  const double inner = detail::hermite_trapezoid(profile.r, f, df, m);
  const double tail = detail::tail_integral(profile, profile.match_radius,
                                            [p](double r, double q, double) { return std::pow(r, p) * q * q; });
  return inner + tail;
}

/// Relative mass of Q outside radius R; used to decide whether a box of
/// half-width R can hold the soliton.
inline double mass_fraction_outside(const RadialProfile& profile, double radius) {
  auto density = [](double, double q, double) { return q * q; };
  if (radius >= profile.match_radius) return detail::tail_integral(profile, radius, density) / profile.mass;
  const double inside = detail::simpson(
      [&](double r) {
        const double q = profile.value(r);
        return 2.0 * std::numbers::pi * r * q * q;
      },
      0.0, radius, 0.25 * profile.mesh_step);
  return std::max(0.0, 1.0 - inside / profile.mass);
}

/// Shooting solve for the Townes soliton; bisects Q(0) until the bracket is
/// narrower than tol. The reliable part of the trajectory ends where the two
/// bracket trajectories separate by more than 1e-6 relative (looser for
/// loose tol); beyond it the
/// profile is continued by the decaying solution c K0(r) of -Q'' - Q'/r + Q = 0.
inline RadialProfile solve_townes(double tol, const TownesOptions& options = {}) {
  if (!(tol >= 1e-14 && tol <= 1e-4))
    throw Error(ErrorKind::InvalidArgument, "tolerance must lie in [1e-14, 1e-4]");
  if (!(options.mesh_step > 0.0) || options.r_max < 20.0)
    throw Error(ErrorKind::InvalidArgument, "mesh step must be positive and r_max at least 20");

  double lo = options.bracket_low;
  double hi = options.bracket_high;
  if (classify_shot(lo) != ShotOutcome::Undershoot || classify_shot(hi) != ShotOutcome::Overshoot)
    throw Error(ErrorKind::BracketNotFound, "initial amplitude bracket does not straddle the ground state");
  int steps = 0;
  while (hi - lo >= tol) {
    if (++steps > options.max_bisections)
      throw Error(ErrorKind::NonConvergence, "bisection step limit exceeded");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (classify_shot(mid) == ShotOutcome::Undershoot ? lo : hi) = mid;
  }
  const double amplitude = 0.5 * (lo + hi);

  const double h = options.mesh_step;
  const auto count = static_cast<std::size_t>(std::floor(12.0 / h)) + 1;
  const auto mid = detail::sample_trajectory(amplitude, h, count);
  const auto low = detail::sample_trajectory(lo, h, count);
  const auto high = detail::sample_trajectory(hi, h, count);
  const std::size_t usable = std::min({mid.size(), low.size(), high.size()});
  // Loose tolerances leave a shorter reliable stretch; the profile is still
  // produced and the identity check in critical_coupling judges it.
  const double divergence = std::max(1e-6, 1e2 * tol / amplitude);
  std::size_t match = 0;
  for (std::size_t i = 1; i < usable; ++i) {
    const auto& s = mid[i];
    if (s.q <= 0.0 || s.p >= 0.0) break;
    if (std::abs(high[i].q - low[i].q) > divergence * s.q) break;
    match = i;
  }
  if (match < 2) throw Error(ErrorKind::NonConvergence, "shooting trajectory never resolved; tolerance too loose");

  RadialProfile profile;
  profile.shoot_amplitude = amplitude;
  profile.mesh_step = h;
  profile.match_radius = h * static_cast<double>(match);
  profile.tail_coefficient = mid[match].q / std::cyl_bessel_k(0.0, profile.match_radius);
  for (std::size_t i = 0; i <= match; ++i) {
    profile.r.push_back(h * static_cast<double>(i));
    profile.q.push_back(mid[i].q);
    profile.q_prime.push_back(mid[i].p);
  }
  // The stored derivative at the junction follows the tail so that the
  // Hermite interpolant is C^1 across it.
  profile.q_prime[match] = profile.tail_derivative(profile.match_radius);
  const double coarse = 4.0 * h;
  for (double r = profile.match_radius + coarse; r < options.r_max + 0.5 * coarse; r += coarse) {
    profile.r.push_back(r);
    profile.q.push_back(profile.tail_value(r));
    profile.q_prime.push_back(profile.tail_derivative(r));
  }

  std::vector<double> f(match + 1), df(match + 1);
  auto integrate_inner = [&](auto&& integrand, auto&& derivative) {
    for (std::size_t i = 0; i <= match; ++i) {
      const double r = profile.r[i], q = profile.q[i], qp = mid[i].p;
      // Q'' from the equation; at r = 0 the limit Q'/r -> Q''(0) halves it.
      const double qpp = (i == 0) ? 0.5 * (q - q * q * q) : -qp / r + q - q * q * q;
      f[i] = 2.0 * std::numbers::pi * r * integrand(q, qp);
      df[i] = 2.0 * std::numbers::pi * (integrand(q, qp) + r * derivative(q, qp, qpp));
    }
    return detail::hermite_trapezoid(profile.r, f, df, match);
  };
  profile.mass = integrate_inner([](double q, double) { return q * q; },
                                 [](double q, double qp, double) { return 2.0 * q * qp; }) +
                 detail::tail_integral(profile, profile.match_radius, [](double, double q, double) { return q * q; });
  profile.kinetic =
      integrate_inner([](double, double qp) { return qp * qp; },
                      [](double, double qp, double qpp) { return 2.0 * qp * qpp; }) +
      detail::tail_integral(profile, profile.match_radius, [](double, double, double qp) { return qp * qp; });
  profile.quartic =
      integrate_inner([](double q, double) { return q * q * q * q; },
                      [](double q, double qp, double) { return 4.0 * q * q * q * qp; }) +
      detail::tail_integral(profile, profile.match_radius,
                            [](double, double q, double) { return q * q * q * q; });
  return profile;
}

struct ProfileIdentities {
  double mass_vs_kinetic = 0.0;  // |mass - kinetic| / mass
  double mass_vs_quartic = 0.0;  // |mass - quartic/2| / mass
};

inline ProfileIdentities identity_residuals(const RadialProfile& profile) {
  return {std::abs(profile.mass - profile.kinetic) / profile.mass,
          std::abs(profile.mass - 0.5 * profile.quartic) / profile.mass};
}

inline constexpr double kIdentityTolerance = 1e-6;

/// Checks the stored profile: positive decreasing samples, Q'(0) = 0, a
/// negligible value at r_max and the triple identity mass = kinetic = quartic/2.
inline void validate_profile(const RadialProfile& profile) {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidProfile, why); };
  if (profile.r.size() < 3 || profile.q.size() != profile.r.size() || profile.q_prime.size() != profile.r.size())
    fail("profile arrays are inconsistent");
  if (profile.q_prime.front() != 0.0) fail("Q'(0) must vanish");
  if (!(profile.q.back() < 1e-8)) fail("Q(r_max) is not negligible");
  for (std::size_t i = 0; i < profile.q.size(); ++i) {
    if (!(profile.q[i] > 0.0)) fail("profile must be positive");
    if (i > 1 && !(profile.q[i] < profile.q[i - 1])) fail("profile must be strictly decreasing");
  }
  if (!(profile.mass > 0.0)) fail("mass must be positive");
  const auto id = identity_residuals(profile);
  if (!(id.mass_vs_kinetic < kIdentityTolerance) || !(id.mass_vs_quartic < kIdentityTolerance))
    fail("mass = kinetic = quartic/2 identities violated");
}

/// a* = int Q^2, the optimal Gagliardo-Nirenberg constant.
inline double critical_coupling(const RadialProfile& profile) {
  validate_profile(profile);
  return profile.mass;
}

inline constexpr double kBoxTailMass = 1e-8;

/// Samples Q0(x - center) = Q(|x - center|)/sqrt(mass) with minimum-image
/// distances, then renormalizes to unit mass on the grid. BoxTooSmall when
/// more than 1e-8 of the soliton mass lies beyond the box half-width.
inline Field lift_to_grid(const RadialProfile& profile, const Grid2D& grid, Point center = {}) {
  if (mass_fraction_outside(profile, grid.half_width()) > kBoxTailMass)
    throw Error(ErrorKind::BoxTooSmall, "soliton tail does not fit a box of half-width " +
                                            std::to_string(grid.half_width()));
  const double norm = 1.0 / std::sqrt(profile.mass);
  const double L = grid.half_width();
  Field out = sample(grid, [&](double x, double y) {
    const double dx = wrap_displacement(x, center.x, L);
    const double dy = wrap_displacement(y, center.y, L);
    return norm * profile.value(std::hypot(dx, dy));
  });
  return normalize(out);
}

}  // namespace gpmin
