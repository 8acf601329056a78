#pragma once

// Blow-up analysis of minimizer sweeps (widths, rescaled profiles, power-law
// fits) and Levy-concentration diagnostics for the compact / vanishing /
// dichotomy trichotomy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpmin/energy.hpp"
#include "gpmin/error.hpp"
#include "gpmin/grid.hpp"
#include "gpmin/minimizer.hpp"
#include "gpmin/soliton.hpp"

namespace gpmin {

/// Grid on which rescaled minimizers are compared with Q0.
inline Grid2D default_comparison_grid() { return make_grid(12.0, 128); }

struct AlignedProfile {
  Field aligned;
  double eps = 0.0;
  Point center;
};

/// aligned(x) = eps u(center + eps x) on the comparison grid, with
/// eps = 1/||grad u|| and center the refined density peak.
/// UnderResolved when eps < 2 dx of the source grid.
inline AlignedProfile rescale_and_align(const Field& u, const Grid2D& comparison = default_comparison_grid()) {
  if (std::abs(mass(u) - 1.0) > 1e-6) throw Error(ErrorKind::UnnormalizedInput, "alignment expects a unit-mass field");
  const double eps = width(u);
  if (eps < 2.0 * u.grid().dx())
    throw Error(ErrorKind::UnderResolved,
                "width " + std::to_string(eps) + " is below 2 dx = " + std::to_string(2.0 * u.grid().dx()));
  const Point center = peak_location(u);
  Field aligned = resample_affine(u, comparison, center, Point{}, eps);
  aligned *= eps;
  return {std::move(aligned), eps, center};
}

struct TownesDistance {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// L2 and H1 distances between a field and Q0 centered at the origin of the
/// field's grid.
inline TownesDistance distance_to_townes(const Field& aligned, const RadialProfile& profile) {
  Field diff = aligned - lift_to_grid(profile, aligned.grid());
  const double l2sq = mass(diff);
  return {std::sqrt(l2sq), std::sqrt(l2sq + kinetic(diff))};
}

struct SweepRecord {
  double a = 0.0;
  double E = 0.0;
  double eps = 0.0;
  Point center;
  double l2_dist = 0.0;
  double h1_dist = 0.0;
  bool converged = false;
  bool resolved = false;  // converged and eps >= 4 dx
  std::string error;
};

struct BlowupFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double predicted_exponent = 0.0;
  double predicted_prefactor = 0.0;
  std::pair<std::size_t, std::size_t> window;  // first and last record index used
  std::size_t points = 0;
};

struct SweepReport {
  std::vector<SweepRecord> records;
  std::vector<std::optional<Field>> aligned;  // per record, when alignment succeeded
  std::optional<BlowupFit> fit;
};

/// Per-entry records of a continuation sweep: widths, centers and the
/// distances of the aligned profiles to Q0.
inline SweepReport analyze_sweep(const std::vector<SweepEntry>& entries, const RadialProfile& profile,
                                 const Grid2D& comparison = default_comparison_grid()) {
  SweepReport report;
  for (const auto& entry : entries) {
    SweepRecord record;
    record.a = entry.a;
    record.error = entry.error;
    std::optional<Field> aligned;
    if (entry.result) {
      const MinimizerResult& result = *entry.result;
      record.E = result.E;
      record.eps = result.eps;
      record.converged = result.converged;
      record.resolved = result.converged && !result.under_resolved;
      try {
        AlignedProfile ap = rescale_and_align(result.u, comparison);
        const auto dist = distance_to_townes(ap.aligned, profile);
        record.center = ap.center;
        record.l2_dist = dist.l2;
        record.h1_dist = dist.h1;
        aligned = std::move(ap.aligned);
      } catch (const Error& e) {
        record.resolved = false;
        record.l2_dist = record.h1_dist = std::numeric_limits<double>::quiet_NaN();
        record.center = peak_location(result.u);
        if (record.error.empty()) record.error = e.what();
      }
    }
    report.records.push_back(std::move(record));
    report.aligned.push_back(std::move(aligned));
  }
  return report;
}

inline double predicted_blowup_prefactor(const RadialProfile& profile, double p, double h0) {
  return std::pow(0.5 * p * h0 * radial_moment(profile, p), -1.0 / (p + 2.0));
}

/// Least-squares fit log eps = exponent log(a* - a) + log prefactor over the
/// resolved records. InsufficientData with fewer than three of them.
inline BlowupFit fit_power_law(const std::vector<SweepRecord>& records, double a_star) {
  std::vector<double> xs, ys;
  BlowupFit fit;
  bool first = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.resolved || !(r.a < a_star) || !(r.eps > 0.0)) continue;
    xs.push_back(std::log(a_star - r.a));
    ys.push_back(std::log(r.eps));
    if (first) fit.window.first = i;
    fit.window.second = i;
    first = false;
  }
  if (xs.size() < 3)
    throw Error(ErrorKind::InsufficientData,
                "blow-up fit needs at least 3 resolved entries, got " + std::to_string(xs.size()));
  const double count = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::InsufficientData, "resolved entries share a single coupling");
  fit.exponent = sxy / sxx;
  fit.prefactor = std::exp(my - fit.exponent * mx);
  fit.points = xs.size();
  fit.predicted_exponent = std::numeric_limits<double>::quiet_NaN();
  fit.predicted_prefactor = std::numeric_limits<double>::quiet_NaN();
  return fit;
}

/// fit_power_law plus the power-well predictions 1/(p+2) and
/// (p h0 / 2 int |x|^p Q^2)^(-1/(p+2)).
inline BlowupFit blowup_fit(const std::vector<SweepRecord>& records, double a_star, const RadialProfile& profile,
                            double p, double h0) {
  if (!(p > 0.0 && p <= 4.0) || !(h0 > 0.0))
    throw Error(ErrorKind::InvalidArgument, "blow-up fit needs 0 < p <= 4 and h0 > 0");
  BlowupFit fit = fit_power_law(records, a_star);
  fit.predicted_exponent = 1.0 / (p + 2.0);
  fit.predicted_prefactor = predicted_blowup_prefactor(profile, p, h0);
  return fit;
}

// ---------------------------------------------------------------------------
// Concentration diagnostics

struct ConcentrationCurve {
  std::vector<double> radii;
  std::vector<double> values;  // sup_y of the mass in B_R(y)
};

/// Mass in the disk of radius R around every grid point, by DFT convolution
/// of |u|^2 with the disk indicator.
inline Field disk_mass(const Field& u, double radius) {
  Field density = u;
  for (double& v : density.values()) v *= v;
  Field disk = sample(u.grid(), [radius](double x, double y) { return std::hypot(x, y) <= radius ? 1.0 : 0.0; });
  return convolve_potential(disk, density);
}

/// Levy concentration function at the given radii. Values are made
/// nondecreasing in R and clamped to [0, mass].
inline ConcentrationCurve concentration_curve(const Field& u, std::vector<double> radii) {
  std::sort(radii.begin(), radii.end());
  if (radii.empty() || !(radii.front() > 0.0))
    throw Error(ErrorKind::InvalidArgument, "concentration radii must be positive");
  const double total = mass(u);
  ConcentrationCurve curve{radii, {}};
  double running = 0.0;
  for (double r : radii) {
    const Field m = disk_mass(u, r);
    const double best = *std::max_element(m.values().begin(), m.values().end());
    running = std::max(running, std::clamp(best, 0.0, total));
    curve.values.push_back(running);
  }
  return curve;
}

struct ClusterSplit {
  double major = 0.0;  // mass of the heavier cluster
  double minor = 0.0;  // mass of the lighter cluster
  Point major_center;
  Point minor_center;
  double lambda() const { return minor; }
};

/// Masses of the two heaviest disks of radius R whose centers are at least
/// 2R apart.
inline ClusterSplit two_cluster_split(const Field& u, double radius) {
  const Grid2D& grid = u.grid();
  const Field m = disk_mass(u, radius);
  const auto first = argmax_index(m);
  const Point c1 = grid_point(grid, first);
  const double L = grid.half_width();
  double second = 0.0;
  Point c2 = c1;
  for (std::size_t iy = 0; iy < grid.n(); ++iy) {
    for (std::size_t ix = 0; ix < grid.n(); ++ix) {
      const double x = grid.coordinate(ix), y = grid.coordinate(iy);
      const double d = std::hypot(wrap_displacement(x, c1.x, L), wrap_displacement(y, c1.y, L));
      if (d >= 2.0 * radius && m(ix, iy) > second) {
        second = m(ix, iy);
        c2 = {x, y};
      }
    }
  }
  ClusterSplit split{m(first.first, first.second), std::max(0.0, second), c1, c2};
  return split;
}

enum class Trichotomy { Compact, Vanishing, Dichotomy, Inconclusive };

inline const char* to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::Compact: return "compact";
    case Trichotomy::Vanishing: return "vanishing";
    case Trichotomy::Dichotomy: return "dichotomy";
    case Trichotomy::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ClassifierOptions {
  double delta = 0.05;
  /// The fixed radius at which concentration is tracked along the sequence;
  /// each curve must contain a radius not above it.
  double probe_radius = 2.0;
};

struct SequenceClassification {
  Trichotomy kind = Trichotomy::Inconclusive;
  double lambda = 0.0;  // lighter cluster mass when kind is Dichotomy
  std::vector<double> probe_values;
};

/// Heuristic trichotomy label for a sequence of fields, given their curves
/// and two-cluster splits:
///   compact    probe values nondecreasing (slack delta), last >= 1 - delta
///   dichotomy  last split captures >= 1 - delta, lighter mass in
///              (delta, 1 - delta) and within delta of the previous one
///   vanishing  probe values strictly decreasing, last < delta
inline SequenceClassification classify_sequence(const std::vector<ConcentrationCurve>& curves,
                                                const std::vector<ClusterSplit>& splits,
                                                const ClassifierOptions& opts = {}) {
  SequenceClassification out;
  if (curves.size() < 3 || splits.size() != curves.size()) return out;
  for (const auto& curve : curves) {
    double value = -1.0;
    for (std::size_t i = 0; i < curve.radii.size(); ++i)
      if (curve.radii[i] <= opts.probe_radius * (1.0 + 1e-12)) value = curve.values[i];
    if (value < 0.0) return out;
    out.probe_values.push_back(value);
  }
  const auto& v = out.probe_values;
  const double delta = opts.delta;

  bool rising = true, falling = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1] - delta) rising = false;
    if (!(v[i] < v[i - 1])) falling = false;
  }
  if (rising && v.back() >= 1.0 - delta) {
    out.kind = Trichotomy::Compact;
    return out;
  }
  const ClusterSplit& last = splits.back();
  const ClusterSplit& prev = splits[splits.size() - 2];
  if (last.major + last.minor >= 1.0 - delta && last.lambda() > delta && last.lambda() < 1.0 - delta &&
      std::abs(last.lambda() - prev.lambda()) <= delta) {
    out.kind = Trichotomy::Dichotomy;
    out.lambda = last.lambda();
    return out;
  }
  if (falling && v.back() < delta) out.kind = Trichotomy::Vanishing;
  return out;
}

/// Curves and splits for a sequence of fields, then the classification.
inline SequenceClassification classify_fields(const std::vector<Field>& fields, const std::vector<double>& radii,
                                              const ClassifierOptions& opts = {}) {
  std::vector<ConcentrationCurve> curves;
  std::vector<ClusterSplit> splits;
  for (const auto& f : fields) {
    curves.push_back(concentration_curve(f, radii));
    splits.push_back(two_cluster_split(f, opts.probe_radius));
  }
  return classify_sequence(curves, splits, opts);
}

}  // namespace gpmin
