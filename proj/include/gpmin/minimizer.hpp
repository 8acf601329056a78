#pragma once

// Unit-mass minimization of E_a by a projected (Riemannian) descent on the
// L2 sphere: u <- normalize(|u - tau d|) with d a preconditioned tangent
// direction and tau from Armijo backtracking, plus a warm-started sweep in a.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gpmin/energy.hpp"
#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"

namespace gpmin {

enum class InitKind { Gaussian, Townes, PriorRescaled, FromFile };

enum class SearchMethod {
  ProjectedGradient,  // d = P_u (M g)
  ConjugateGradient,  // Polak-Ribiere+ combination of successive projected directions
};

struct MinimizerOptions {
  double tol_residual = 1e-6;
  std::size_t max_iters = 20000;
  double step_init = 0.5;
  double backtrack_factor = 0.5;
  /// Which starting point minimize() builds when no initial field is given.
  /// Only Gaussian can be built from the potential alone; the other kinds
  /// require the caller to pass the field.
  InitKind init_kind = InitKind::Gaussian;
  SearchMethod method = SearchMethod::ConjugateGradient;
  /// Precondition the gradient with W^1/2 (sigma - Lap)^-1 W^1/2,
  /// W = 1/(sigma + V - min V), sigma = max(1, int |grad u|^2).
  bool precondition = true;
  bool record_trace = true;
  /// Take |u| of the initial field and after every step until the residual
  /// first falls below positivity_handoff. The discrete spectral minimizer
  /// dips slightly below zero far from the bulk, so enforcing |u| to the end
  /// would cap the attainable residual.
  bool positivity = true;
  double positivity_handoff = 1e-3;

  void validate() const {
    if (!(tol_residual > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol_residual must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw Error(ErrorKind::InvalidArgument, "backtrack_factor must lie in (0, 1)");
    if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
    if (!(step_init > 0.0)) throw Error(ErrorKind::InvalidArgument, "step_init must be positive");
  }
};

struct MinimizerResult {
  Field u;
  double E = 0.0;
  double residual = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  double eps = 0.0;  // 1/||grad u||
  bool under_resolved = false;  // eps < 4 dx
  double chemical_potential = 0.0;  // <g, u>
  std::vector<double> energy_trace;
};

inline constexpr double kCriticalGuard = 1e-4;

/// Unit-mass Gaussian exp(-|x - c|^2 / (2 w^2)) with minimum-image distances.
inline Field gaussian_field(const Grid2D& grid, Point center, double w) {
  const double L = grid.half_width();
  Field u = sample(grid, [&](double x, double y) {
    const double dx = wrap_displacement(x, center.x, L);
    const double dy = wrap_displacement(y, center.y, L);
    return std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
  });
  return normalize(u);
}

inline Point grid_point(const Grid2D& grid, std::pair<std::size_t, std::size_t> index) {
  return {grid.coordinate(index.first), grid.coordinate(index.second)};
}

namespace detail {

struct DescentState {
  double energy = 0.0;
  double kinetic = 0.0;
  Field gradient;
  double mu = 0.0;
  Field tangent;       // r = g - mu u
  double residual = 0.0;
};

inline DescentState describe_point(const Field& u, const Field& potential, double a) {
  const auto parts = evaluate_functional(u, potential, a);
  Field g = energy_gradient(u, potential, a);
  const double mu = inner_product(g, u);
  Field r = g;
  auto rv = r.values();
  const auto uv = u.values();
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] -= mu * uv[i];
  const double res = l2_norm(r);
  return {parts.total, parts.kinetic, std::move(g), mu, std::move(r), res};
}

// Symmetric positive preconditioner W^1/2 (sigma - Lap)^-1 W^1/2 with
// W = 1/(sigma + V - min V): the Laplacian part tames high wavenumbers, the
// potential part tames regions where V is large.
class Preconditioner {
 public:
  Preconditioner(const Field& potential, double sigma) : sigma_(sigma), weight_(potential.grid()) {
    const double lowest = *std::min_element(potential.values().begin(), potential.values().end());
    for (std::size_t i = 0; i < weight_.size(); ++i) weight_[i] = 1.0 / std::sqrt(sigma + potential[i] - lowest);
  }

  Field apply(const Field& f) const {
    Field w = f;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= weight_[i];
    const double sigma = sigma_;
    Field out = apply_spectral_multiplier(w, [sigma](double k2) { return 1.0 / (sigma + k2); });
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= weight_[i];
    return out;
  }

 private:
  double sigma_;
  Field weight_;  // W^1/2
};

// z = P (r - nu u) with nu chosen so that <u, z> = 0. Passing the tangent
// residual r = g - mu u rather than g gives the same direction but keeps the
// large mu u component out of the cancellation.
inline Field preconditioned_direction(const Field& u, const Field& r, const Preconditioner& precond) {
  const Field pg = precond.apply(r);
  const Field pu = precond.apply(u);
  const double nu = inner_product(u, pg) / inner_product(u, pu);
  Field z = pg;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] -= nu * pu[i];
  return z;
}

// u - tau d (absolute value taken when positivity is on), not yet normalized.
inline Field step_field(const Field& u, const Field& d, double tau, bool positivity = true) {
  Field out(u.grid());
  const auto uv = u.values();
  const auto dv = d.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = uv[i] - tau * dv[i];
  if (positivity)
    for (double& v : ov) v = std::abs(v);
  return out;
}

}  // namespace detail

/// Minimizes E_a over unit-mass fields on the potential's grid.
///
/// Each step moves along a descent direction d tangent to the sphere,
/// takes the absolute value (E(|u|) <= E(u)) and renormalizes. The step
/// length is backtracked until the Armijo condition holds, so the energy
/// trace is strictly decreasing. Iteration stops when the projected
/// gradient norm ||g - <g,u> u|| drops to tol_residual, when max_iters is
/// reached, or when no step can decrease the energy any further (roundoff
/// floor); the last two report converged = false with the best iterate.
inline MinimizerResult minimize(const Field& potential, double a, double a_star, const MinimizerOptions& opts,
                                std::optional<Field> init = std::nullopt) {
  opts.validate();
  if (!(a >= 0.0)) throw Error(ErrorKind::InvalidArgument, "coupling must be non-negative");
  if (!(a < a_star * (1.0 - kCriticalGuard)))
    throw Error(ErrorKind::CriticalCouplingGuard,
                "coupling " + std::to_string(a) + " is within 1e-4 relative of a* = " + std::to_string(a_star));
  if (!potential.all_finite()) throw Error(ErrorKind::InvalidArgument, "potential must be bounded");
  const Grid2D& grid = potential.grid();

  Field u = [&] {
    if (init) {
      init->require_same_grid(potential);
      Field start = *init;
      if (opts.positivity)
        for (double& v : start.values()) v = std::abs(v);
      return normalize(start);
    }
    if (opts.init_kind != InitKind::Gaussian)
      throw Error(ErrorKind::InvalidArgument, "this init kind needs an initial field");
    return gaussian_field(grid, grid_point(grid, argmin_index(potential)), 1.0);
  }();

  MinimizerResult result{.u = u, .energy_trace = {}};
  auto state = detail::describe_point(u, potential, a);
  if (opts.record_trace) result.energy_trace.push_back(state.energy);

  std::optional<Field> direction;
  std::optional<Field> previous_z;
  std::optional<Field> previous_r;
  double tau = opts.step_init;
  bool enforce_positivity = opts.positivity;
  std::size_t iter = 0;
  // Positivity (|.|) and the nonlocal spectral Laplacian leave a residual
  // floor; the loop ends once the best residual stops improving.
  constexpr std::size_t kStallWindow = 100;
  double best_residual = state.residual;
  std::size_t since_best = 0;
  while (iter < opts.max_iters && state.residual > opts.tol_residual && since_best < kStallWindow) {
    Field z = opts.precondition ? detail::preconditioned_direction(
                                      u, state.tangent, detail::Preconditioner(potential, std::max(1.0, state.kinetic)))
                                : state.tangent;
    Field d = z;
    if (opts.method == SearchMethod::ConjugateGradient && direction && previous_z && previous_r) {
      const double denom = inner_product(*previous_r, *previous_z);
      const double beta =
          denom > 0.0 ? std::max(0.0, (inner_product(state.tangent, z) - inner_product(state.tangent, *previous_z)) / denom)
                      : 0.0;
      if (beta > 0.0) {
        Field carried = *direction;
        const double along = inner_product(carried, u);
        auto cv = carried.values();
        const auto uv = u.values();
        for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = d[i] + beta * (cv[i] - along * uv[i]);
        if (inner_product(state.tangent, carried) > 0.0) d = std::move(carried);
      }
    }
    // d is tangent, so <g, d> = <r, d>; the latter avoids cancelling mu <u, d>.
    const double slope = -2.0 * inner_product(state.tangent, d);
    if (!(slope < 0.0)) {
      d = z;
    }
    const double used_slope = -2.0 * inner_product(state.tangent, d);

    // Line search: the previous step length and the minimizer of the
    // quadratic through E(0), E'(0), E(trial) are tried first; if neither
    // satisfies Armijo the step is backtracked.
    // Energies are tracked relative to the current iterate.
    auto energy_at = [&](double t, Field& out) {
      out = detail::step_field(u, d, t, enforce_positivity);
      return energy_difference(u, out, potential, a);
    };
    auto armijo = [&](double t, double de) { return de < 1e-4 * t * used_slope && de < 0.0; };
    if (state.residual < opts.positivity_handoff) enforce_positivity = false;
    double trial = tau;
    Field candidate(grid);
    double e_trial = energy_at(trial, candidate);
    // Without measurable positive curvature (tiny trial steps sit in the
    // roundoff of the difference) the longest allowed step is tried, so a
    // collapsed step length can recover.
    const double curvature = (e_trial - used_slope * trial) / (trial * trial);
    {
      const double t_quad =
          curvature > 0.0 ? std::clamp(-used_slope / (2.0 * curvature), 0.05 * trial, 20.0 * trial) : 20.0 * trial;
      Field quad(grid);
      const double e_quad = energy_at(t_quad, quad);
      if (e_quad < e_trial || !armijo(trial, e_trial)) {
        if (armijo(t_quad, e_quad) || !armijo(trial, e_trial)) {
          trial = t_quad;
          e_trial = e_quad;
          candidate = std::move(quad);
        }
      }
    }
    bool accepted = armijo(trial, e_trial);
    for (int k = 0; k < 60 && !accepted; ++k) {
      trial *= opts.backtrack_factor;
      e_trial = energy_at(trial, candidate);
      accepted = armijo(trial, e_trial);
    }
    if (!accepted) break;
    tau = trial;
    previous_z = std::move(z);
    previous_r = state.tangent;
    direction = std::move(d);
    u = normalize(candidate);
    const double tracked = state.energy + e_trial;
    state = detail::describe_point(u, potential, a);
    state.energy = tracked;
    if (opts.record_trace) result.energy_trace.push_back(state.energy);
    ++iter;
    if (state.residual < 0.99 * best_residual) {
      best_residual = state.residual;
      since_best = 0;
    } else {
      ++since_best;
    }
  }

  result.u = u;
  result.E = energy(u, potential, a).total;
  result.residual = state.residual;
  result.iters = iter;
  result.converged = state.residual <= opts.tol_residual;
  result.chemical_potential = state.mu;
  result.eps = 1.0 / std::sqrt(state.kinetic);
  result.under_resolved = result.eps < 4.0 * grid.dx();
  return result;
}

struct SweepEntry {
  double a = 0.0;
  std::optional<MinimizerResult> result;
  std::string error;  // set when the entry failed
};

/// Density-peak location of a nonnegative field, refined on the spectral
/// interpolant by Newton steps on its gradient.
inline Point peak_location(const Field& u) {
  const Grid2D& grid = u.grid();
  const auto index = argmax_index(u);
  Point p = refine_extremum(u, index.first, index.second).first;
  const Eigen::MatrixXcd spectrum = grid.full_spectrum(u.values());
  for (int it = 0; it < 8; ++it) {
    const LocalJet jet = evaluate_interpolant(spectrum, grid, p);
    const double det = jet.dxx * jet.dyy - jet.dxy * jet.dxy;
    if (!(det > 0.0) || !(jet.dxx < 0.0)) break;
    const double sx = (jet.dyy * jet.dx - jet.dxy * jet.dy) / det;
    const double sy = (jet.dxx * jet.dy - jet.dxy * jet.dx) / det;
    if (std::hypot(sx, sy) > grid.dx()) break;
    p.x -= sx;
    p.y -= sy;
    if (std::hypot(sx, sy) < 1e-13) break;
  }
  return p;
}

/// Warm-started minimization along an ascending schedule. Each entry starts
/// from the previous minimizer dilated about its peak by the predicted width
/// ratio ((a* - a_prev)/(a* - a))^width_exponent. Failures are recorded per
/// entry and the chain restarts from the default initial state.
inline std::vector<SweepEntry> continuation_sweep(const Field& potential, const std::vector<double>& schedule,
                                                  double a_star, const MinimizerOptions& opts,
                                                  std::optional<Field> init = std::nullopt,
                                                  double width_exponent = 0.25) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0 && !(schedule[i] > schedule[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "schedule must be strictly increasing");
    if (!(schedule[i] < a_star * (1.0 - kCriticalGuard)))
      throw Error(ErrorKind::CriticalCouplingGuard, "schedule entry too close to a*");
  }
  std::vector<SweepEntry> entries;
  std::optional<Field> start = std::move(init);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    SweepEntry entry{.a = schedule[i], .result = std::nullopt, .error = {}};
    try {
      MinimizerOptions local = opts;
      if (start && i > 0) local.init_kind = InitKind::PriorRescaled;
      entry.result = minimize(potential, schedule[i], a_star, local, start);
      if (i + 1 < schedule.size()) {
        const double ratio = std::pow((a_star - schedule[i]) / (a_star - schedule[i + 1]), width_exponent);
        const Field& u = entry.result->u;
        const Point peak = peak_location(u);
        const bool resolvable = entry.result->eps / ratio >= 4.0 * u.grid().dx();
        Field next = resolvable ? resample_affine(u, u.grid(), peak, peak, ratio) : u;
        for (double& v : next.values()) v = std::abs(v);
        start = normalize(next);
      }
    } catch (const Error& e) {
      entry.error = e.what();
      start.reset();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace gpmin
