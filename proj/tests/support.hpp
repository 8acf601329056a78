#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "gpmin/grid.hpp"
#include "gpmin/soliton.hpp"

namespace gpmin::testing {

inline constexpr std::uint64_t kSeed = 20240611;

inline const RadialProfile& townes() {
  static const RadialProfile profile = solve_townes(1e-12);
  return profile;
}

inline double a_star() { return townes().mass; }

/// Sum of a few random Gaussians with widths in [w_min, w_max], placed within
/// `spread` of the origin; strictly positive, unnormalized.
inline Field random_bumps(const Grid2D& grid, std::mt19937_64& rng, int count = 3, double w_min = 0.8,
                          double w_max = 2.0, double spread = 3.0) {
  std::uniform_real_distribution<double> pos(-spread, spread), wid(w_min, w_max), amp(0.2, 1.0);
  struct Bump {
    double x, y, w, a;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < count; ++i) bumps.push_back({pos(rng), pos(rng), wid(rng), amp(rng)});
  return sample(grid, [&](double x, double y) {
    double v = 0.0;
    for (const auto& b : bumps) v += b.a * std::exp(-((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (2 * b.w * b.w));
    return v;
  });
}

/// Band-limited random field: a handful of low Fourier modes.
inline Field random_modes(const Grid2D& grid, std::mt19937_64& rng, int kmax = 4) {
  std::normal_distribution<double> coeff(0.0, 1.0);
  const double L = grid.half_width();
  std::vector<double> c;
  for (int i = 0; i < (2 * kmax + 1) * (2 * kmax + 1) * 2; ++i) c.push_back(coeff(rng));
  return sample(grid, [&](double x, double y) {
    double v = 0.0;
    std::size_t idx = 0;
    for (int kx = -kmax; kx <= kmax; ++kx)
      for (int ky = -kmax; ky <= kmax; ++ky) {
        const double phase = std::numbers::pi * (kx * x + ky * y) / L;
        v += c[idx] * std::cos(phase) + c[idx + 1] * std::sin(phase);
        idx += 2;
      }
    return v;
  });
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace gpmin::testing
