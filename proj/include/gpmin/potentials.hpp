#pragma once

// Bounded external potentials (zero, constant, truncated power well,
// periodic lattice, radial sinc, file), their essential infimum, and the
// convolution-minimum check for V * |u|^2.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "gpmin/error.hpp"
#include "gpmin/gpf.hpp"
#include "gpmin/grid.hpp"

namespace gpmin {

enum class PotentialKind { Zero, Constant, PowerWell, PeriodicLattice, Sinc, FromFile };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Zero;
  double value = 0.0;       // constant
  double h0 = 1.0;          // power well: h0 |x|^p inside rcut, constant beyond
  double p = 2.0;
  double rcut = 0.0;        // 0 selects L/2 of the grid it is realized on
  double amplitude = 0.0;   // lattice: s (cos 2 pi x/P + cos 2 pi y/P)
  double period = 1.0;
  std::filesystem::path path;

  static PotentialSpec zero() { return {}; }
  static PotentialSpec constant(double c) {
    PotentialSpec s;
    s.kind = PotentialKind::Constant;
    s.value = c;
    return s;
  }
  static PotentialSpec power_well(double h0, double p, double rcut = 0.0) {
    PotentialSpec s;
    s.kind = PotentialKind::PowerWell;
    s.h0 = h0;
    s.p = p;
    s.rcut = rcut;
    return s;
  }
  static PotentialSpec lattice(double amplitude, double period = 1.0) {
    PotentialSpec s;
    s.kind = PotentialKind::PeriodicLattice;
    s.amplitude = amplitude;
    s.period = period;
    return s;
  }
  static PotentialSpec sinc() {
    PotentialSpec s;
    s.kind = PotentialKind::Sinc;
    return s;
  }
  static PotentialSpec from_file(std::filesystem::path path) {
    PotentialSpec s;
    s.kind = PotentialKind::FromFile;
    s.path = std::move(path);
    return s;
  }

  /// Truncation radius actually used on a grid of half-width L.
  double cut_radius(double half_width) const { return rcut > 0.0 ? rcut : 0.5 * half_width; }

  void validate() const {
    switch (kind) {
      case PotentialKind::PowerWell:
        if (!(h0 > 0.0) || !(p > 0.0) || p > 4.0 || rcut < 0.0)
          throw Error(ErrorKind::InvalidArgument, "power well needs h0 > 0, 0 < p <= 4, rcut >= 0");
        break;
      case PotentialKind::PeriodicLattice:
        if (!std::isfinite(amplitude) || !(period > 0.0))
          throw Error(ErrorKind::InvalidArgument, "lattice needs a finite amplitude and positive period");
        break;
      case PotentialKind::Constant:
        if (!std::isfinite(value)) throw Error(ErrorKind::InvalidArgument, "constant potential must be finite");
        break;
      default:
        break;
    }
  }
};

namespace detail {

inline double parse_number(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw Error(ErrorKind::Config, "invalid number '" + s + "' for " + std::string(what));
  return v;
}

}  // namespace detail

/// Parses `sinc`, `zero`, `constant c=0.5`, `power_well h0=1 p=2 rcut=8`,
/// `lattice s=0.5 period=1`, `file:path.gpf`.
inline PotentialSpec parse_potential(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string head;
  in >> head;
  if (head.empty()) throw Error(ErrorKind::Config, "empty potential specification");
  if (head.rfind("file:", 0) == 0) {
    std::string rest;
    if (in >> rest) throw Error(ErrorKind::Config, "unexpected text after file potential");
    if (head.size() == 5) throw Error(ErrorKind::Config, "file potential needs a path");
    return PotentialSpec::from_file(head.substr(5));
  }
  PotentialSpec spec;
  if (head == "zero") spec.kind = PotentialKind::Zero;
  else if (head == "constant") spec.kind = PotentialKind::Constant;
  else if (head == "power_well") spec.kind = PotentialKind::PowerWell;
  else if (head == "lattice") spec.kind = PotentialKind::PeriodicLattice;
  else if (head == "sinc") spec.kind = PotentialKind::Sinc;
  else throw Error(ErrorKind::Config, "unknown potential '" + head + "'");

  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const double v = detail::parse_number(std::string_view(token).substr(eq + 1), key);
    if (spec.kind == PotentialKind::Constant && (key == "c" || key == "value")) spec.value = v;
    else if (spec.kind == PotentialKind::PowerWell && key == "h0") spec.h0 = v;
    else if (spec.kind == PotentialKind::PowerWell && key == "p") spec.p = v;
    else if (spec.kind == PotentialKind::PowerWell && key == "rcut") spec.rcut = v;
    else if (spec.kind == PotentialKind::PeriodicLattice && (key == "s" || key == "amplitude")) spec.amplitude = v;
    else if (spec.kind == PotentialKind::PeriodicLattice && key == "period") spec.period = v;
    else throw Error(ErrorKind::Config, "unknown parameter '" + key + "' for potential " + head);
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return spec;
}

inline std::string describe(const PotentialSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  switch (spec.kind) {
    case PotentialKind::Zero: out << "zero"; break;
    case PotentialKind::Constant: out << "constant c=" << spec.value; break;
    case PotentialKind::PowerWell:
      out << "power_well h0=" << spec.h0 << " p=" << spec.p;
      if (spec.rcut > 0.0) out << " rcut=" << spec.rcut;
      break;
    case PotentialKind::PeriodicLattice: out << "lattice s=" << spec.amplitude << " period=" << spec.period; break;
    case PotentialKind::Sinc: out << "sinc"; break;
    case PotentialKind::FromFile: out << "file:" << spec.path.string(); break;
  }
  return out.str();
}

/// sin(r)/r with value 1 at the origin.
inline double sinc(double r) { return r == 0.0 ? 1.0 : std::sin(r) / r; }

/// Global minimum of sin(r)/r: at the first positive root of tan r = r.
inline double sinc_infimum() {
  double lo = std::numbers::pi, hi = 1.5 * std::numbers::pi - 1e-9;
  auto g = [](double r) { return r * std::cos(r) - std::sin(r); };
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return sinc(0.5 * (lo + hi));
}

inline Field realize(const PotentialSpec& spec, const Grid2D& grid) {
  spec.validate();
  const double two_pi = 2.0 * std::numbers::pi;
  switch (spec.kind) {
    case PotentialKind::Zero: return Field(grid);
    case PotentialKind::Constant: return sample(grid, [&](double, double) { return spec.value; });
    case PotentialKind::PowerWell: {
      const double rc = spec.cut_radius(grid.half_width());
      const double cap = spec.h0 * std::pow(rc, spec.p);
      return sample(grid, [&](double x, double y) {
        const double r = std::hypot(x, y);
        return r <= rc ? spec.h0 * std::pow(r, spec.p) : cap;
      });
    }
    case PotentialKind::PeriodicLattice:
      return sample(grid, [&](double x, double y) {
        return spec.amplitude * (std::cos(two_pi * x / spec.period) + std::cos(two_pi * y / spec.period));
      });
    case PotentialKind::Sinc: return sample(grid, [](double x, double y) { return sinc(std::hypot(x, y)); });
    case PotentialKind::FromFile: {
      Field v = gpf::read(spec.path);
      if (!(v.grid() == grid))
        throw Error(ErrorKind::FileFormat, "potential file grid does not match the requested grid");
      if (!v.all_finite()) throw Error(ErrorKind::FileFormat, "potential file holds non-finite samples");
      return v;
    }
  }
  return Field(grid);
}

struct EssInfEstimate {
  double value = 0.0;
  /// Downward correction applied to the sampled minimum (zero when analytic).
  double allowance = 0.0;
  bool analytic = false;
};

/// Grid estimate: the minimum sample lowered by the drop of the parabola
/// through it and its two neighbours along each axis. An axis on which a
/// neighbour ties the minimum contributes nothing (the value is attained on a
/// flat stretch).
inline EssInfEstimate ess_inf_estimate(const Field& potential) {
  const std::size_t n = potential.grid().n();
  const auto [ix, iy] = argmin_index(potential);
  const double v0 = potential(ix, iy);
  auto drop = [v0](double left, double right) {
    const double curvature = left + right - 2.0 * v0;
    if (std::min(left, right) <= v0 || !(curvature > 0.0)) return 0.0;
    return (right - left) * (right - left) / (8.0 * curvature);
  };
  const double allowance = drop(potential((ix + n - 1) % n, iy), potential((ix + 1) % n, iy)) +
                           drop(potential(ix, (iy + n - 1) % n), potential(ix, (iy + 1) % n));
  return {v0 - allowance, allowance, false};
}

/// Analytic infimum for analytic kinds; the grid estimate for files.
inline EssInfEstimate ess_inf_estimate(const PotentialSpec& spec, const Grid2D& grid) {
  switch (spec.kind) {
    case PotentialKind::Zero: return {0.0, 0.0, true};
    case PotentialKind::Constant: return {spec.value, 0.0, true};
    case PotentialKind::PowerWell: return {0.0, 0.0, true};
    case PotentialKind::PeriodicLattice: return {-2.0 * std::abs(spec.amplitude), 0.0, true};
    case PotentialKind::Sinc: return {sinc_infimum(), 0.0, true};
    case PotentialKind::FromFile: return ess_inf_estimate(realize(spec, grid));
  }
  return {};
}

struct V2Report {
  double conv_min_value = 0.0;
  Point conv_min_location;
  bool attained_interior = false;
  bool degenerate_flat = false;
  /// Whether the minimum moved by at most 1e-3 when the box was doubled;
  /// always true for file potentials, which cannot be re-realized.
  bool stable_under_doubling = true;
  double ess_inf = 0.0;
  double epsilon = 0.0;
  double margin = 0.0;  // conv_min_value - (ess_inf + epsilon)
};

namespace detail {

struct ConvolutionMinimum {
  double value = 0.0;
  Point location;
  bool flat = false;
};

inline ConvolutionMinimum convolution_minimum(const Field& potential, const Field& u) {
  Field density(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) density[i] = u[i] * u[i];
  const Field conv = convolve_potential(potential, density);
  const auto [ix, iy] = argmin_index(conv);
  const auto [lo, hi] = std::minmax_element(conv.values().begin(), conv.values().end());
  ConvolutionMinimum out;
  out.flat = (*hi - *lo) <= 1e-12 * (1.0 + std::abs(*lo));
  if (out.flat) {
    out.value = *lo;
    out.location = {u.grid().coordinate(ix), u.grid().coordinate(iy)};
    return out;
  }
  const auto [p, value] = refine_extremum(conv, ix, iy);
  out.value = value;
  out.location = p;
  return out;
}

// Reduces a coordinate into [-P/2, P/2).
inline double reduce_periodic(double x, double period) {
  double r = std::fmod(x + 0.5 * period, period);
  if (r < 0.0) r += period;
  return r - 0.5 * period;
}

// u embedded at the centre of the doubled grid (same spacing, zero outside).
inline Field embed_doubled(const Field& u) {
  const Grid2D& grid = u.grid();
  const Grid2D big = make_grid(2.0 * grid.half_width(), 2 * grid.n());
  Field out(big);
  const std::size_t offset = grid.n() / 2;
  for (std::size_t iy = 0; iy < grid.n(); ++iy)
    for (std::size_t ix = 0; ix < grid.n(); ++ix) out(ix + offset, iy + offset) = u(ix, iy);
  return out;
}

}  // namespace detail

/// Locates the minimum of V * |u|^2 for the given u. The location is read in
/// the fundamental domain (one lattice cell for periodic V, the box otherwise)
/// and counts as interior-attained when it sits more than 2 dx inside the box
/// and the minimum value moves by at most 1e-3 when the box is doubled.
inline V2Report check_v2(const PotentialSpec& spec, const Field& u, double epsilon) {
  if (std::abs(mass(u) - 1.0) > 1e-8) throw Error(ErrorKind::UnnormalizedInput, "check_v2 expects a unit-mass field");
  const Grid2D& grid = u.grid();
  PotentialSpec fixed = spec;
  if (fixed.kind == PotentialKind::PowerWell) fixed.rcut = spec.cut_radius(grid.half_width());

  const auto found = detail::convolution_minimum(realize(fixed, grid), u);
  V2Report report;
  report.conv_min_value = found.value;
  report.degenerate_flat = found.flat;
  report.conv_min_location = found.location;
  if (fixed.kind == PotentialKind::PeriodicLattice) {
    report.conv_min_location.x = detail::reduce_periodic(found.location.x, fixed.period);
    report.conv_min_location.y = detail::reduce_periodic(found.location.y, fixed.period);
  }
  if (fixed.kind != PotentialKind::FromFile) {
    const Field big_u = detail::embed_doubled(u);
    const auto doubled = detail::convolution_minimum(realize(fixed, big_u.grid()), big_u);
    report.stable_under_doubling = std::abs(doubled.value - found.value) <= 1e-3;
  }
  const double clearance = grid.half_width() - std::max(std::abs(report.conv_min_location.x),
                                                        std::abs(report.conv_min_location.y));
  report.attained_interior = clearance > 2.0 * grid.dx() && report.stable_under_doubling;
  report.ess_inf = ess_inf_estimate(fixed, grid).value;
  report.epsilon = epsilon;
  report.margin = report.conv_min_value - (report.ess_inf + epsilon);
  return report;
}

}  // namespace gpmin
