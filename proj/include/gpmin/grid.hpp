#pragma once

// Periodic square grid [-L, L)^2 with FFTW-backed spectral operators and the
// real-valued Field type every other module works with.

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "gpmin/error.hpp"

namespace gpmin {

using Complex = std::complex<double>;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftPlans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  fftw_plan c2c = nullptr;

  explicit FftPlans(int n) {
    const std::size_t count = static_cast<std::size_t>(n) * n;
    const std::size_t half = static_cast<std::size_t>(n) * (n / 2 + 1);
    double* real = fftw_alloc_real(count);
    fftw_complex* spec = fftw_alloc_complex(half);
    fftw_complex* full_in = fftw_alloc_complex(count);
    fftw_complex* full_out = fftw_alloc_complex(count);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    {
      std::lock_guard lock(planner_mutex());
      r2c = fftw_plan_dft_r2c_2d(n, n, real, spec, flags);
      c2r = fftw_plan_dft_c2r_2d(n, n, spec, real, flags);
      c2c = fftw_plan_dft_2d(n, n, full_in, full_out, FFTW_FORWARD, flags);
    }
    fftw_free(real);
    fftw_free(spec);
    fftw_free(full_in);
    fftw_free(full_out);
  }

  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_destroy_plan(c2c);
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

}  // namespace detail

/// Truncated periodic square [-L, L)^2 sampled at x_i = -L + i dx, dx = 2L/n.
///
/// Immutable after construction; copies share the FFT plans, so a Grid2D is
/// cheap to pass by value and safe to use from several threads at once.
/// Spectra use FFTW's r2c layout: n rows (ky, standard DFT order) by n/2+1
/// columns (kx >= 0), row-major with y the slow index.
class Grid2D {
 public:
  Grid2D(double half_width, std::size_t n) : half_width_(half_width), n_(n) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw Error(ErrorKind::InvalidArgument, "half width must be positive and finite");
    if (n % 2 != 0)
      throw Error(ErrorKind::OddSampleCount, "sample count must be even, got " + std::to_string(n));
    if (n < 16)
      throw Error(ErrorKind::InvalidArgument, "sample count must be at least 16");
    dx_ = 2.0 * half_width / static_cast<double>(n);
    plans_ = std::make_shared<const detail::FftPlans>(static_cast<int>(n));
  }

  double half_width() const { return half_width_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_; }
  std::size_t spectral_columns() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return n_ * spectral_columns(); }
  double dx() const { return dx_; }
  double cell_area() const { return dx_ * dx_; }

  double coordinate(std::size_t i) const { return -half_width_ + static_cast<double>(i) * dx_; }

  /// Wavenumber pi*j/L for DFT index i (j = i for i <= n/2, i - n otherwise).
  double wavenumber(std::size_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(n_);
    auto j = static_cast<std::ptrdiff_t>(i);
    if (j > n / 2) j -= n;
    return std::numbers::pi * static_cast<double>(j) / half_width_;
  }

  double max_wavenumber() const { return std::numbers::pi * static_cast<double>(n_ / 2) / half_width_; }

  /// |k|^2 at spectral slot (row iy, column jx) of the r2c layout.
  double k_squared(std::size_t iy, std::size_t jx) const {
    const double ky = wavenumber(iy);
    const double kx = wavenumber(jx);
    return kx * kx + ky * ky;
  }

  /// Multiplicity of column jx when summing |u_k|^2 over the full spectrum.
  double column_weight(std::size_t jx) const { return (jx == 0 || jx == n_ / 2) ? 1.0 : 2.0; }

  std::vector<Complex> forward(std::span<const double> values) const {
    std::vector<Complex> spectrum(spectral_size());
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(values.data()),
                         reinterpret_cast<fftw_complex*>(spectrum.data()));
    return spectrum;
  }

  /// Normalized inverse (forward followed by inverse is the identity).
  std::vector<double> inverse(std::span<const Complex> spectrum) const {
    std::vector<Complex> scratch(spectrum.begin(), spectrum.end());
    std::vector<double> values(size());
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), values.data());
    const double scale = 1.0 / static_cast<double>(size());
    for (double& v : values) v *= scale;
    return values;
  }

  /// Full n-by-n complex spectrum (rows ky, columns kx), unnormalized.
  Eigen::MatrixXcd full_spectrum(std::span<const double> values) const {
    std::vector<Complex> in(values.begin(), values.end());
    std::vector<Complex> out(size());
    fftw_execute_dft(plans_->c2c, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXcd result(n, n);
    for (Eigen::Index iy = 0; iy < n; ++iy)
      for (Eigen::Index ix = 0; ix < n; ++ix) result(iy, ix) = out[static_cast<std::size_t>(iy * n + ix)];
    return result;
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  double half_width_;
  std::size_t n_;
  double dx_ = 0.0;
  std::shared_ptr<const detail::FftPlans> plans_;
};

inline Grid2D make_grid(double half_width, std::size_t n) { return Grid2D(half_width, n); }

/// Real samples on a Grid2D, row-major with y the slow index.
class Field {
 public:
  explicit Field(Grid2D grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

  Field(Grid2D grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw Error(ErrorKind::InvalidArgument, "field size does not match grid");
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double& operator()(std::size_t ix, std::size_t iy) { return values_[iy * grid_.n() + ix]; }
  double operator()(std::size_t ix, std::size_t iy) const { return values_[iy * grid_.n() + ix]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  Field& operator+=(const Field& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  Field& operator-=(const Field& other) {
    require_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }

  void require_same_grid(const Field& other) const {
    if (!(grid_ == other.grid_)) throw Error(ErrorKind::GridMismatch, "fields live on different grids");
  }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Samples f(x, y) at every grid point.
inline Field sample(const Grid2D& grid, const std::function<double(double, double)>& f) {
  Field out(grid);
  const std::size_t n = grid.n();
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double y = grid.coordinate(iy);
    for (std::size_t ix = 0; ix < n; ++ix) out(ix, iy) = f(grid.coordinate(ix), y);
  }
  return out;
}

/// Minimum-image displacement of coordinate x from c on a period of 2L.
inline double wrap_displacement(double x, double c, double half_width) {
  const double period = 2.0 * half_width;
  double d = std::fmod(x - c, period);
  if (d >= half_width) d -= period;
  if (d < -half_width) d += period;
  return d;
}

inline double inner_product(const Field& u, const Field& v) {
  u.require_same_grid(v);
  double sum = 0.0;
  const auto a = u.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum * u.grid().cell_area();
}

inline double l2_norm(const Field& u) { return std::sqrt(inner_product(u, u)); }

inline double integrate(const Field& u) {
  double sum = 0.0;
  for (double v : u.values()) sum += v;
  return sum * u.grid().cell_area();
}

inline double integrate_power(const Field& u, double q) {
  double sum = 0.0;
  if (q == 2.0) {
    for (double v : u.values()) sum += v * v;
  } else if (q == 4.0) {
    for (double v : u.values()) sum += (v * v) * (v * v);
  } else {
    for (double v : u.values()) sum += std::pow(std::abs(v), q);
  }
  return sum * u.grid().cell_area();
}

inline double mass(const Field& u) { return integrate_power(u, 2.0); }

/// Rescales u to unit mass in place; DegenerateField when u vanishes.
inline Field& normalize(Field& u) {
  const double m = mass(u);
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorKind::DegenerateField, "cannot normalize a zero field");
  u *= 1.0 / std::sqrt(m);
  return u;
}

inline Field normalized(Field u) {
  normalize(u);
  return u;
}

/// Multiplies the spectrum of u by symbol(|k|^2) and transforms back.
template <class Symbol>
Field apply_spectral_multiplier(const Field& u, Symbol&& symbol) {
  const Grid2D& grid = u.grid();
  auto spectrum = grid.forward(u.values());
  const std::size_t cols = grid.spectral_columns();
  for (std::size_t iy = 0; iy < grid.n(); ++iy)
    for (std::size_t jx = 0; jx < cols; ++jx) spectrum[iy * cols + jx] *= symbol(grid.k_squared(iy, jx));
  return Field(grid, grid.inverse(spectrum));
}

/// Spectral Laplacian: multiply by -|k|^2 in Fourier space.
inline Field laplacian_apply(const Field& u) {
  if (!u.all_finite()) throw Error(ErrorKind::InvalidArgument, "non-finite field");
  return apply_spectral_multiplier(u, [](double k2) { return -k2; });
}

/// Integral of |grad u|^2 from the spectrum (Parseval).
inline double kinetic(const Field& u) {
  const Grid2D& grid = u.grid();
  const auto spectrum = grid.forward(u.values());
  const std::size_t cols = grid.spectral_columns();
  double sum = 0.0;
  for (std::size_t iy = 0; iy < grid.n(); ++iy)
    for (std::size_t jx = 0; jx < cols; ++jx)
      sum += grid.column_weight(jx) * grid.k_squared(iy, jx) * std::norm(spectrum[iy * cols + jx]);
  return sum * grid.cell_area() / static_cast<double>(grid.size());
}

/// Bilinear form int grad u . grad w.
inline double kinetic_form(const Field& u, const Field& w) {
  u.require_same_grid(w);
  const Grid2D& grid = u.grid();
  const auto su = grid.forward(u.values());
  const auto sw = grid.forward(w.values());
  const std::size_t cols = grid.spectral_columns();
  double sum = 0.0;
  for (std::size_t iy = 0; iy < grid.n(); ++iy)
    for (std::size_t jx = 0; jx < cols; ++jx) {
      const std::size_t k = iy * cols + jx;
      sum += grid.column_weight(jx) * grid.k_squared(iy, jx) * (su[k] * std::conj(sw[k])).real();
    }
  return sum * grid.cell_area() / static_cast<double>(grid.size());
}

/// Spectral partial derivatives (d/dx, d/dy); Nyquist modes are dropped.
inline std::pair<Field, Field> spectral_gradient(const Field& u) {
  const Grid2D& grid = u.grid();
  const auto spectrum = grid.forward(u.values());
  const std::size_t cols = grid.spectral_columns();
  const std::size_t half = grid.n() / 2;
  std::vector<Complex> sx(spectrum.size()), sy(spectrum.size());
  const Complex i_unit(0.0, 1.0);
  for (std::size_t iy = 0; iy < grid.n(); ++iy) {
    for (std::size_t jx = 0; jx < cols; ++jx) {
      const std::size_t k = iy * cols + jx;
      const double kx = (jx == half) ? 0.0 : grid.wavenumber(jx);
      const double ky = (iy == half) ? 0.0 : grid.wavenumber(iy);
      sx[k] = i_unit * kx * spectrum[k];
      sy[k] = i_unit * ky * spectrum[k];
    }
  }
  return {Field(grid, grid.inverse(sx)), Field(grid, grid.inverse(sy))};
}

/// Periodic convolution (V * dens)(y) = sum_x V(y - x) dens(x) dx^2.
///
/// Sample index m of V represents the point -L + m dx, so the circular
/// convolution is shifted by n/2 in each axis; that shift is a (-1)^(kx+ky)
/// phase in Fourier space.
inline Field convolve_potential(const Field& potential, const Field& density) {
  potential.require_same_grid(density);
  const Grid2D& grid = potential.grid();
  auto sv = grid.forward(potential.values());
  const auto sd = grid.forward(density.values());
  const std::size_t cols = grid.spectral_columns();
  for (std::size_t iy = 0; iy < grid.n(); ++iy) {
    for (std::size_t jx = 0; jx < cols; ++jx) {
      const double phase = ((iy + jx) % 2 == 0) ? 1.0 : -1.0;
      sv[iy * cols + jx] *= sd[iy * cols + jx] * phase;
    }
  }
  Field out(grid, grid.inverse(sv));
  out *= grid.cell_area();
  return out;
}

/// Cyclic shift by (sx, sy) grid cells: out(x + sx dx, y + sy dx) = u(x, y).
inline Field translate(const Field& u, std::ptrdiff_t sx, std::ptrdiff_t sy) {
  const auto n = static_cast<std::ptrdiff_t>(u.grid().n());
  Field out(u.grid());
  auto wrap = [n](std::ptrdiff_t i) { return ((i % n) + n) % n; };
  for (std::ptrdiff_t iy = 0; iy < n; ++iy)
    for (std::ptrdiff_t ix = 0; ix < n; ++ix)
      out(static_cast<std::size_t>(wrap(ix + sx)), static_cast<std::size_t>(wrap(iy + sy))) =
          u(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
  return out;
}

namespace detail {

// Row j holds the trigonometric basis evaluated at points[j]; rows for
// points marked outside are zero. The Nyquist column uses cos so the
// interpolant of real data stays real.
inline Eigen::MatrixXcd interpolation_basis(const Grid2D& grid, std::span<const double> points,
                                            std::span<const bool> inside) {
  const auto n = static_cast<Eigen::Index>(grid.n());
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(m, n);
  const double origin = -grid.half_width();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!inside[static_cast<std::size_t>(j)]) continue;
    const double s = points[static_cast<std::size_t>(j)] - origin;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double kk = grid.wavenumber(static_cast<std::size_t>(k));
      if (k == n / 2)
        basis(j, k) = std::cos(std::abs(kk) * s);
      else
        basis(j, k) = std::polar(1.0, kk * s);
    }
  }
  return basis / static_cast<double>(n);
}

}  // namespace detail

/// Spectral (trigonometric) resampling under an axis-aligned affine map:
///   out(x) = u(source_center + scale * d(x, target_center))
/// where d is the minimum-image displacement on the target grid. Points with
/// |scale * d| > L_source along either axis are set to zero, which treats u
/// as a field localized around source_center rather than a periodic one.
inline Field resample_affine(const Field& u, const Grid2D& target, Point source_center, Point target_center,
                             double scale) {
  const Grid2D& source = u.grid();
  const std::size_t m = target.n();
  const double limit = source.half_width();
  std::vector<double> px(m), py(m);
  std::unique_ptr<bool[]> in_x(new bool[m]), in_y(new bool[m]);
  for (std::size_t i = 0; i < m; ++i) {
    const double c = target.coordinate(i);
    const double dx = scale * wrap_displacement(c, target_center.x, target.half_width());
    const double dy = scale * wrap_displacement(c, target_center.y, target.half_width());
    px[i] = source_center.x + dx;
    py[i] = source_center.y + dy;
    in_x[i] = std::abs(dx) <= limit;
    in_y[i] = std::abs(dy) <= limit;
  }
  const Eigen::MatrixXcd spectrum = source.full_spectrum(u.values());
  const Eigen::MatrixXcd ex = detail::interpolation_basis(source, px, std::span<const bool>(in_x.get(), m));
  const Eigen::MatrixXcd ey = detail::interpolation_basis(source, py, std::span<const bool>(in_y.get(), m));
  const Eigen::MatrixXcd values = ey * spectrum * ex.transpose();
  Field out(target);
  for (std::size_t iy = 0; iy < m; ++iy)
    for (std::size_t ix = 0; ix < m; ++ix)
      out(ix, iy) = values(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)).real();
  return out;
}

/// Value, gradient and Hessian of the trigonometric interpolant at a point.
struct LocalJet {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;
};

inline LocalJet evaluate_interpolant(const Eigen::MatrixXcd& spectrum, const Grid2D& grid, Point p) {
  const auto n = static_cast<Eigen::Index>(grid.n());
  const double sx = p.x + grid.half_width();
  const double sy = p.y + grid.half_width();
  Eigen::VectorXcd ex(n), ey(n);
  Eigen::VectorXd kx(n), ky(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double kk = grid.wavenumber(static_cast<std::size_t>(k));
    // The Nyquist mode contributes only a cosine; its derivatives are dropped.
    const bool nyquist = k == n / 2;
    kx(k) = nyquist ? 0.0 : kk;
    ky(k) = kx(k);
    ex(k) = nyquist ? Complex(std::cos(std::abs(kk) * sx), 0.0) : std::polar(1.0, kk * sx);
    ey(k) = nyquist ? Complex(std::cos(std::abs(kk) * sy), 0.0) : std::polar(1.0, kk * sy);
  }
  LocalJet jet;
  const Complex i_unit(0.0, 1.0);
  for (Eigen::Index iy = 0; iy < n; ++iy) {
    for (Eigen::Index ix = 0; ix < n; ++ix) {
      const Complex term = spectrum(iy, ix) * ex(ix) * ey(iy);
      jet.value += term.real();
      jet.dx += (i_unit * kx(ix) * term).real();
      jet.dy += (i_unit * ky(iy) * term).real();
      jet.dxx += (-kx(ix) * kx(ix) * term).real();
      jet.dxy += (-kx(ix) * ky(iy) * term).real();
      jet.dyy += (-ky(iy) * ky(iy) * term).real();
    }
  }
  const double scale = 1.0 / static_cast<double>(grid.size());
  jet.value *= scale;
  jet.dx *= scale;
  jet.dy *= scale;
  jet.dxx *= scale;
  jet.dxy *= scale;
  jet.dyy *= scale;
  return jet;
}

/// Grid index of the largest sample.
inline std::pair<std::size_t, std::size_t> argmax_index(const Field& u) {
  const auto v = u.values();
  const auto it = std::max_element(v.begin(), v.end());
  const auto flat = static_cast<std::size_t>(it - v.begin());
  return {flat % u.grid().n(), flat / u.grid().n()};
}

inline std::pair<std::size_t, std::size_t> argmin_index(const Field& u) {
  const auto v = u.values();
  const auto it = std::min_element(v.begin(), v.end());
  const auto flat = static_cast<std::size_t>(it - v.begin());
  return {flat % u.grid().n(), flat / u.grid().n()};
}

/// Sub-cell refinement of a grid extremum: a parabola through the three
/// periodic neighbours along each axis. Returns the refined location and value.
inline std::pair<Point, double> refine_extremum(const Field& f, std::size_t ix, std::size_t iy) {
  const Grid2D& grid = f.grid();
  const std::size_t n = grid.n();
  const double h = grid.dx();
  const double f0 = f(ix, iy);
  auto axis = [&](double fm, double fp, double& offset) {
    const double curvature = fm - 2.0 * f0 + fp;
    if (curvature == 0.0) {
      offset = 0.0;
      return 0.0;
    }
    offset = std::clamp(0.5 * (fm - fp) / curvature, -0.5, 0.5);
    return -0.125 * (fm - fp) * (fm - fp) / curvature;
  };
  double ox = 0.0, oy = 0.0;
  const double corr_x = axis(f((ix + n - 1) % n, iy), f((ix + 1) % n, iy), ox);
  const double corr_y = axis(f(ix, (iy + n - 1) % n), f(ix, (iy + 1) % n), oy);
  Point p{grid.coordinate(ix) + ox * h, grid.coordinate(iy) + oy * h};
  return {p, f0 + corr_x + corr_y};
}

}  // namespace gpmin
