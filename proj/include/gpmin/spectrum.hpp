#pragma once

// Bottom of the spectrum of -Lap + V on the torus and the strict-gap check
// inf sigma(-Lap + V) > ess inf V.

#include <cmath>
#include <limits>

#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"
#include "gpmin/minimizer.hpp"
#include "gpmin/potentials.hpp"

namespace gpmin {

struct GroundState {
  double lambda0 = 0.0;
  Field eigvec;
  double residual = 0.0;  // ||(-Lap + V) phi - lambda0 phi||
};

/// Minimizes the quadratic form int |grad u|^2 + V u^2 on the unit sphere
/// (the a = 0 flow). NonConvergence if the residual stays above tol.
inline GroundState ground_energy(const Field& potential, double tol, std::size_t max_iters = 20000) {
  MinimizerOptions opts;
  opts.tol_residual = tol;
  opts.max_iters = max_iters;
  opts.record_trace = false;
  opts.positivity = false;
  const auto result = minimize(potential, 0.0, std::numeric_limits<double>::infinity(), opts);
  if (!result.converged)
    throw Error(ErrorKind::NonConvergence, "ground state residual " + std::to_string(result.residual) +
                                               " above tolerance after " + std::to_string(result.iters) +
                                               " iterations");
  return {result.E, result.u, result.residual};
}

struct SpectrumReport {
  double lambda0 = 0.0;
  double residual = 0.0;
  double ess_inf_V = 0.0;
  double ess_inf_allowance = 0.0;
  double v1_margin = 0.0;  // lambda0 - ess_inf_V
  double margin_tolerance = 0.0;
  bool passes_v1 = false;
};

inline constexpr double kV1MarginTolerance = 1e-6;

inline SpectrumReport make_spectrum_report(const GroundState& ground, const EssInfEstimate& inf,
                                           double margin_tolerance) {
  SpectrumReport report;
  report.lambda0 = ground.lambda0;
  report.residual = ground.residual;
  report.ess_inf_V = inf.value;
  report.ess_inf_allowance = inf.allowance;
  report.v1_margin = ground.lambda0 - inf.value;
  report.margin_tolerance = margin_tolerance;
  report.passes_v1 = report.v1_margin > margin_tolerance;
  return report;
}

/// V1 check for a sampled potential; ess inf V from the grid estimate.
inline SpectrumReport check_v1(const Field& potential, double tol, double margin_tolerance = kV1MarginTolerance) {
  return make_spectrum_report(ground_energy(potential, tol), ess_inf_estimate(potential), margin_tolerance);
}

/// V1 check for a potential spec; ess inf V is analytic where available.
inline SpectrumReport check_v1(const PotentialSpec& spec, const Grid2D& grid, double tol,
                               double margin_tolerance = kV1MarginTolerance) {
  return make_spectrum_report(ground_energy(realize(spec, grid), tol), ess_inf_estimate(spec, grid),
                              margin_tolerance);
}

}  // namespace gpmin
