#pragma once

// Gross-Pitaevskii functional E_a(u) = int |grad u|^2 + V u^2 - (a/2) u^4,
// its half-gradient, the Gagliardo-Nirenberg quotient and the dilation /
// trial-state constructions used to probe E_a near and above a*.

#include <cmath>
#include <vector>

#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"
#include "gpmin/soliton.hpp"

namespace gpmin {

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;  // int V u^2
  double quartic = 0.0;    // int u^4
  double coupling = 0.0;
  double total = 0.0;

  double recomputed_total() const { return kinetic + potential - 0.5 * coupling * quartic; }
};

/// E_a(u) without the unit-mass precondition; the building block for
/// finite-difference checks and line searches.
inline EnergyBreakdown evaluate_functional(const Field& u, const Field& potential, double a) {
  u.require_same_grid(potential);
  EnergyBreakdown e;
  e.coupling = a;
  e.kinetic = kinetic(u);
  double pot = 0.0, quart = 0.0;
  const auto uv = u.values();
  const auto vv = potential.values();
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const double d = uv[i] * uv[i];
    pot += vv[i] * d;
    quart += d * d;
  }
  e.potential = pot * u.grid().cell_area();
  e.quartic = quart * u.grid().cell_area();
  e.total = e.recomputed_total();
  return e;
}

/// E_a(w/|w|) - E_a(u/|u|), assembled from d = w - u alone so that nearby
/// fields keep the relative precision of their difference: normalization
/// roundoff cancels between the quadratic and mass terms.
inline double energy_difference(const Field& u, const Field& w, const Field& potential, double a) {
  u.require_same_grid(w);
  u.require_same_grid(potential);
  const Grid2D& grid = u.grid();
  const Field d = w - u;
  const auto su = grid.forward(u.values());
  const auto sd = grid.forward(d.values());
  const std::size_t cols = grid.spectral_columns();
  double kin_u = 0.0, kin_ud = 0.0, kin_d = 0.0;
  for (std::size_t iy = 0; iy < grid.n(); ++iy)
    for (std::size_t jx = 0; jx < cols; ++jx) {
      const std::size_t k = iy * cols + jx;
      const double weight = grid.column_weight(jx) * grid.k_squared(iy, jx);
      kin_u += weight * std::norm(su[k]);
      kin_ud += weight * (su[k] * std::conj(sd[k])).real();
      kin_d += weight * std::norm(sd[k]);
    }
  const double spectral = grid.cell_area() / static_cast<double>(grid.size());
  double m_u = 0.0, m_ud = 0.0, m_d = 0.0, p_u = 0.0, p_ud = 0.0, p_d = 0.0, q_u = 0.0, q_delta = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double ui = u[i], di = d[i], vi = potential[i];
    const double wi = ui + di;
    m_u += ui * ui;
    m_ud += ui * di;
    m_d += di * di;
    p_u += vi * ui * ui;
    p_ud += vi * ui * di;
    p_d += vi * di * di;
    q_u += ui * ui * ui * ui;
    q_delta += (2.0 * ui + di) * di * (wi * wi + ui * ui);
  }
  const double area = grid.cell_area();
  // quadratic form Q = kinetic + potential, mass m, quartic q; deltas exact in d
  const double quad = (kin_u * spectral + p_u * area);
  const double d_quad = 2.0 * (kin_ud * spectral + p_ud * area) + (kin_d * spectral + p_d * area);
  const double mass0 = m_u * area;
  const double d_mass = (2.0 * m_ud + m_d) * area;
  const double quart = q_u * area;
  const double d_quart = q_delta * area;
  const double mass1 = mass0 + d_mass;
  const double quadratic_part = (d_quad * mass0 - quad * d_mass) / (mass0 * mass1);
  const double quartic_part =
      (d_quart * mass0 * mass0 - quart * d_mass * (2.0 * mass0 + d_mass)) / (mass0 * mass0 * mass1 * mass1);
  return quadratic_part - 0.5 * a * quartic_part;
}

inline constexpr double kMassTolerance = 1e-8;

inline EnergyBreakdown energy(const Field& u, const Field& potential, double a) {
  if (std::abs(mass(u) - 1.0) > kMassTolerance)
    throw Error(ErrorKind::UnnormalizedInput, "energy expects a unit-mass field");
  if (!potential.all_finite()) throw Error(ErrorKind::InvalidArgument, "potential must be bounded");
  return evaluate_functional(u, potential, a);
}

/// Half of the first variation: g = -Lap u + V u - a u^3, so that
/// <g, d> = (1/2) dE/dt (u + t d) at t = 0. Step sizes built on g are
/// therefore twice those of the literal L2 gradient.
inline Field energy_gradient(const Field& u, const Field& potential, double a) {
  u.require_same_grid(potential);
  Field g = laplacian_apply(u);
  const auto uv = u.values();
  const auto vv = potential.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = -gv[i] + vv[i] * uv[i] - a * uv[i] * uv[i] * uv[i];
  return g;
}

/// (int |grad u|^2)(int u^2) / ((1/2) int u^4); bounded below by a*.
inline double gn_quotient(const Field& u) {
  const double quart = integrate_power(u, 4.0);
  if (!(quart > 0.0)) throw Error(ErrorKind::DegenerateField, "quartic integral vanishes");
  return kinetic(u) * mass(u) / (0.5 * quart);
}

/// 1/sqrt(int |grad u|^2): the length scale of a normalized field.
inline double width(const Field& u) { return 1.0 / std::sqrt(kinetic(u)); }

/// u_l(x) = l u(c + l (x - c)) by spectral interpolation, renormalized.
/// ResolutionExceeded when the dilated width drops below four grid cells.
inline Field dilate(const Field& u, double scale, Point center = {}) {
  if (!(scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "dilation factor must be positive");
  const double w = width(u) / scale;
  if (w < 4.0 * u.grid().dx())
    throw Error(ErrorKind::ResolutionExceeded,
                "dilated width " + std::to_string(w) + " is below 4 dx = " + std::to_string(4.0 * u.grid().dx()));
  Field out = resample_affine(u, u.grid(), center, center, scale);
  return normalize(out);
}

/// Energies of the dilations u_l, l in scales, about `center`. For V = 0 the
/// kinetic and quartic parts scale exactly as l^2.
inline std::vector<EnergyBreakdown> dilation_scan(const Field& u, const Field& potential, double a,
                                                  const std::vector<double>& scales, Point center = {}) {
  if (std::abs(mass(u) - 1.0) > kMassTolerance)
    throw Error(ErrorKind::UnnormalizedInput, "dilation scan expects a unit-mass field");
  std::vector<EnergyBreakdown> out;
  out.reserve(scales.size());
  for (double scale : scales) {
    if (scale < 1.0) throw Error(ErrorKind::InvalidArgument, "dilation factors must be at least 1");
    out.push_back(energy(dilate(u, scale, center), potential, a));
  }
  return out;
}

/// Quintic smoothstep cut-off: 1 for r <= 1, 0 for r >= 2.
inline double bump(double radius) {
  if (radius <= 1.0) return 1.0;
  if (radius >= 2.0) return 0.0;
  const double t = radius - 1.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

/// The normalized cut-off soliton A phi(x - x0) l Q0(l (x - x0)) on the grid.
inline Field trial_state(const Grid2D& grid, const RadialProfile& profile, Point x0, double scale) {
  if (scale < 1.0) throw Error(ErrorKind::InvalidArgument, "trial scale must be at least 1");
  const double L = grid.half_width();
  if (L < 2.0) throw Error(ErrorKind::BoxTooSmall, "cut-off support of radius 2 does not fit the box");
  if (1.0 / scale < 4.0 * grid.dx())
    throw Error(ErrorKind::ResolutionExceeded, "trial width 1/l is below 4 dx");
  const double norm = scale / std::sqrt(profile.mass);
  Field u = sample(grid, [&](double x, double y) {
    const double r = std::hypot(wrap_displacement(x, x0.x, L), wrap_displacement(y, x0.y, L));
    return bump(r) * norm * profile.value(scale * r);
  });
  return normalize(u);
}

inline double trial_state_energy(const Grid2D& grid, const RadialProfile& profile, const Field& potential, double a,
                                 Point x0, double scale) {
  return energy(trial_state(grid, profile, x0, scale), potential, a).total;
}

}  // namespace gpmin
