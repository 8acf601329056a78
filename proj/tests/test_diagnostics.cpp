#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpmin/diagnostics.hpp"
#include "support.hpp"

using namespace gpmin;
using gpmin::testing::a_star;
using gpmin::testing::townes;

namespace {

const Grid2D& source_grid() {
  static const Grid2D g = make_grid(16, 256);
  return g;
}

// beta Q0(beta (x - c)) sampled directly from the radial profile.
Field scaled_townes(const Grid2D& g, double beta, Point c = {}) {
  const double norm = beta / std::sqrt(townes().mass);
  Field u = sample(g, [&](double x, double y) { return norm * townes().value(beta * std::hypot(x - c.x, y - c.y)); });
  return normalize(u);
}

Field two_bumps(const Grid2D& g, double m1, Point c1, double m2, Point c2, double w = 1.0) {
  const Field b1 = gaussian_field(g, c1, w) * std::sqrt(m1);
  const Field b2 = gaussian_field(g, c2, w) * std::sqrt(m2);
  return b1 + b2;
}

}  // namespace

TEST(Align, TownesIsFixedPoint) {
  const Point z{1.37, -2.6};
  const Field u = lift_to_grid(townes(), source_grid(), z);
  const auto ap = rescale_and_align(u);
  EXPECT_NEAR(ap.eps, 1.0, 1e-4);
  EXPECT_NEAR(ap.center.x, z.x, 1e-6);
  EXPECT_NEAR(ap.center.y, z.y, 1e-6);
  EXPECT_NEAR(mass(ap.aligned), 1.0, 1e-3);
  EXPECT_LT(distance_to_townes(ap.aligned, townes()).l2, 1e-3);
}

TEST(Align, DilationCovariance) {
  const Field u = scaled_townes(make_grid(16, 512), 4.0, {0.5, 0.25});
  const auto ap = rescale_and_align(u);
  EXPECT_NEAR(ap.eps, 0.25, 1e-4);
  EXPECT_LT(distance_to_townes(ap.aligned, townes()).l2, 1e-3);
}

TEST(Align, PerturbationIsSeen) {
  std::mt19937_64 rng(gpmin::testing::kSeed);
  Field bump = gpmin::testing::random_bumps(source_grid(), rng, 2, 0.8, 1.5, 2.0);
  bump *= 1.0 / l2_norm(bump);
  Field u = lift_to_grid(townes(), source_grid()) + 0.05 * bump;
  normalize(u);
  const auto ap = rescale_and_align(u);
  const double d = distance_to_townes(ap.aligned, townes()).l2;
  EXPECT_GT(d, 0.01);
  EXPECT_LT(d, 0.2);
  EXPECT_NEAR(ap.eps, 1.0, 0.2);
}

TEST(Align, Errors) {
  const Field q = lift_to_grid(townes(), source_grid());
  EXPECT_THROW(rescale_and_align(q * 1.1), Error);
  const Field narrow = scaled_townes(source_grid(), 5.0);  // eps = 0.2 < 2 dx = 0.25
  try {
    rescale_and_align(narrow);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnderResolved);
  }
}

TEST(Align, NearOptimizersAreNearTownes) {
  // Perturbation study: the smaller the GN excess, the closer the aligned
  // field is to Q0.
  std::mt19937_64 rng(gpmin::testing::kSeed + 1);
  const Field q = lift_to_grid(townes(), source_grid());
  int tight = 0, tighter = 0;
  for (int i = 0; i < 60; ++i) {
    Field delta = gpmin::testing::random_bumps(source_grid(), rng, 2, 0.5, 2.0, 3.0);
    if (i % 2) delta -= 0.5 * gpmin::testing::random_bumps(source_grid(), rng, 1, 0.5, 1.0, 2.0);
    delta *= (0.002 + 0.06 * (i % 10) / 9.0) / l2_norm(delta);
    Field u = q + delta;
    normalize(u);
    const double eta = gn_quotient(u) / a_star() - 1.0;
    const double d = distance_to_townes(rescale_and_align(u).aligned, townes()).l2;
    if (eta <= 1e-3) {
      ++tight;
      EXPECT_LE(d, 0.1) << "eta " << eta;
    }
    if (eta <= 1e-4) {
      ++tighter;
      EXPECT_LE(d, 0.04) << "eta " << eta;
    }
  }
  EXPECT_GT(tight, 5);
  EXPECT_GT(tighter, 2);
}

TEST(Fit, RecoversExactPowerLaw) {
  const double c = predicted_blowup_prefactor(townes(), 2.0, 1.0);
  std::vector<SweepRecord> records;
  for (int k = 0; k < 6; ++k) {
    SweepRecord r;
    r.a = a_star() * (1.0 - 0.03 * std::pow(0.7, k));
    r.eps = c * std::pow(a_star() - r.a, 0.25);
    r.converged = r.resolved = true;
    records.push_back(r);
  }
  records[2].resolved = false;
  records[2].eps = 1.0;  // must be ignored
  const auto fit = blowup_fit(records, a_star(), townes(), 2.0, 1.0);
  EXPECT_NEAR(fit.exponent, 0.25, 1e-8);
  EXPECT_NEAR(fit.prefactor / c, 1.0, 1e-8);
  EXPECT_EQ(fit.points, 5u);
  EXPECT_EQ(fit.window.first, 0u);
  EXPECT_EQ(fit.window.second, 5u);
  EXPECT_DOUBLE_EQ(fit.predicted_exponent, 0.25);
  EXPECT_DOUBLE_EQ(fit.predicted_prefactor, c);
}

TEST(Fit, PredictedPrefactorFromMoment) {
  const double m2 = radial_moment(townes(), 2.0);
  EXPECT_DOUBLE_EQ(predicted_blowup_prefactor(townes(), 2.0, 1.0), std::pow(m2, -0.25));
}

TEST(Fit, NeedsThreeResolvedEntries) {
  std::vector<SweepRecord> records(4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].a = i + 1.0;
    records[i].eps = 1.0 / (i + 1.0);
    records[i].resolved = i < 2;
  }
  try {
    fit_power_law(records, a_star());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  EXPECT_THROW(blowup_fit(records, a_star(), townes(), 0.0, 1.0), Error);
}

TEST(Concentration, TownesIsConcentrated) {
  const auto curve = concentration_curve(lift_to_grid(townes(), source_grid()), {1.0, 2.0, 5.0});
  EXPECT_GT(curve.values.back(), 0.95);
  for (std::size_t i = 1; i < curve.values.size(); ++i) EXPECT_GE(curve.values[i], curve.values[i - 1]);
  EXPECT_LE(curve.values.back(), 1.0 + 1e-8);
}

TEST(Concentration, TwoSeparatedHalves) {
  const Field u = two_bumps(source_grid(), 0.5, {-10, 0}, 0.5, {10, 0}, 0.5);
  const auto curve = concentration_curve(u, {2.0});
  EXPECT_NEAR(curve.values[0], 0.5, 1e-3);
  const auto split = two_cluster_split(u, 2.0);
  EXPECT_NEAR(split.major, 0.5, 1e-3);
  EXPECT_NEAR(split.minor, 0.5, 1e-3);
}

TEST(Concentration, WideProfileIsSpread) {
  const double L = source_grid().half_width();
  const Field u = gaussian_field(source_grid(), {}, 40.0);
  const double R = 1.0;
  const auto curve = concentration_curve(u, {R});
  EXPECT_LT(curve.values[0], 4.0 * R * R / (L * L) * 1.1);
}

TEST(Concentration, RejectsBadRadii) {
  const Field u = gaussian_field(source_grid(), {}, 1.0);
  EXPECT_THROW(concentration_curve(u, {}), Error);
  EXPECT_THROW(concentration_curve(u, {0.0, 1.0}), Error);
}

namespace {

std::vector<Field> compact_sequence(const Grid2D& g) {
  std::vector<Field> out;
  const Point centers[] = {{3.0, -1.0}, {-4.0, 2.0}, {0.5, 5.0}, {-2.0, -6.0}};
  for (int k = 0; k < 4; ++k) out.push_back(scaled_townes(g, std::pow(1.6, k), centers[k]));
  return out;
}

std::vector<Field> vanishing_sequence(const Grid2D& g) {
  std::vector<Field> out;
  for (double w : {1.0, 2.0, 4.0, 8.0, 12.0}) out.push_back(gaussian_field(g, {}, w));
  return out;
}

std::vector<Field> dichotomy_sequence(const Grid2D& g) {
  std::vector<Field> out;
  for (double sep : {6.0, 10.0, 14.0, 18.0}) out.push_back(two_bumps(g, 0.4, {-sep / 2, 0}, 0.6, {sep / 2, 0}));
  return out;
}

const std::vector<double> kRadii{0.5, 1.0, 2.0, 4.0};

}  // namespace

TEST(Classifier, ThreeConstructions) {
  const Grid2D g = make_grid(24, 256);
  EXPECT_EQ(classify_fields(compact_sequence(g), kRadii).kind, Trichotomy::Compact);
  EXPECT_EQ(classify_fields(vanishing_sequence(g), kRadii).kind, Trichotomy::Vanishing);
  const auto dich = classify_fields(dichotomy_sequence(g), kRadii);
  EXPECT_EQ(dich.kind, Trichotomy::Dichotomy);
  EXPECT_GE(dich.lambda, 0.35);
  EXPECT_LE(dich.lambda, 0.45);
}

TEST(Classifier, InvariantUnderGridTranslation) {
  const Grid2D g = make_grid(24, 256);
  for (auto seq : {compact_sequence(g), vanishing_sequence(g), dichotomy_sequence(g)}) {
    const auto base = classify_fields(seq, kRadii);
    for (auto& f : seq) f = translate(f, 37, -11);
    const auto moved = classify_fields(seq, kRadii);
    EXPECT_EQ(moved.kind, base.kind);
    EXPECT_NEAR(moved.lambda, base.lambda, 1e-9);
  }
}

TEST(Classifier, ShortOrMismatchedInputIsInconclusive) {
  const Grid2D g = make_grid(24, 256);
  auto seq = compact_sequence(g);
  seq.erase(seq.begin() + 2, seq.end());
  EXPECT_EQ(classify_fields(seq, kRadii).kind, Trichotomy::Inconclusive);
  // No radius at or below the probe radius.
  EXPECT_EQ(classify_fields(compact_sequence(g), {4.0, 8.0}).kind, Trichotomy::Inconclusive);
  EXPECT_STREQ(to_string(Trichotomy::Dichotomy), "dichotomy");
}

TEST(Sweep, AnalyzeMarksUnresolvedEntries) {
  const Grid2D g = source_grid();
  std::vector<SweepEntry> entries(3);
  entries[0].a = 1.0;
  entries[0].result = MinimizerResult{.u = lift_to_grid(townes(), g), .E = 0.1, .converged = true, .eps = 1.0};
  entries[1].a = 2.0;
  entries[1].result = MinimizerResult{.u = scaled_townes(g, 5.0), .E = -0.1, .converged = true, .eps = 0.2};
  entries[2].a = 3.0;
  entries[2].error = "NonConvergence";
  const auto report = analyze_sweep(entries, townes());
  ASSERT_EQ(report.records.size(), 3u);
  EXPECT_TRUE(report.records[0].resolved);
  EXPECT_LT(report.records[0].l2_dist, 1e-3);
  EXPECT_TRUE(report.aligned[0].has_value());
  EXPECT_FALSE(report.records[1].resolved);
  EXPECT_TRUE(std::isnan(report.records[1].l2_dist));
  EXPECT_FALSE(report.records[2].resolved);
  EXPECT_EQ(report.records[2].error, "NonConvergence");
}
