#include "photon_limits/scene.hpp"

#include "photon_limits/errors.hpp"
#include "photon_limits/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace photon_limits {

ToaProfile::ToaProfile(std::size_t rows, std::size_t cols, std::vector<double> values, bool two_d)
    : rows_(rows), cols_(cols), values_(std::move(values)), two_d_(two_d) {
  if (rows_ == 0 || cols_ == 0 || values_.size() != rows_ * cols_)
    throw DomainError("ToA profile: dimensions do not match the number of values");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("ToA profile: values must be finite");
}

ToaProfile ToaProfile::line(std::vector<double> values) {
  const std::size_t k = values.size();
  return ToaProfile(1, k, std::move(values), false);
}

ToaProfile ToaProfile::grid(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return ToaProfile(rows, cols, std::move(values), true);
}

double ToaProfile::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ToaProfile::max() const { return *std::max_element(values_.begin(), values_.end()); }

namespace {

std::size_t cells_for_spacing(double dx) {
  if (!(dx > 0.0 && dx <= 0.5)) throw DomainError("grid spacing must lie in (0, 0.5]");
  const double k = 1.0 / dx;
  const auto cells = static_cast<std::size_t>(std::llround(k));
  if (std::abs(k - static_cast<double>(cells)) > 1e-9 * k)
    throw DomainError("grid spacing must divide the unit interval evenly");
  return cells;
}

double cell_center(std::size_t k, std::size_t cells) {
  return (static_cast<double>(k) + 0.5) / static_cast<double>(cells);
}

// Linear interpolation of cell-centred samples along one axis, clamped.
double sample_axis(std::span<const double> v, std::size_t stride, std::size_t cells, double x) {
  const double pos = x * static_cast<double>(cells) - 0.5;
  if (pos <= 0.0) return v[0];
  const double last = static_cast<double>(cells - 1);
  if (pos >= last) return v[(cells - 1) * stride];
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return v[i * stride] + w * (v[(i + 1) * stride] - v[i * stride]);
}

std::vector<double> central_difference(std::span<const double> v, std::size_t count, std::size_t stride,
                                       double spacing) {
  std::vector<double> out(count);
  if (count < 2) return out;
  out[0] = (v[stride] - v[0]) / spacing;
  out[count - 1] = (v[(count - 1) * stride] - v[(count - 2) * stride]) / spacing;
  for (std::size_t k = 1; k + 1 < count; ++k)
    out[k] = (v[(k + 1) * stride] - v[(k - 1) * stride]) / (2.0 * spacing);
  return out;
}

std::vector<double> time_derivative(std::span<const double> values, double dt) {
  return central_difference(values, values.size(), 1, dt);
}

}  // namespace

double sigmoid_toa(double x) { return 4.0 / (1.0 + std::exp(-20.0 * (x - 0.5))) + 4.0; }

ToaProfile make_sigmoid_profile(double dx) {
  const std::size_t cells = cells_for_spacing(dx);
  std::vector<double> v(cells);
  for (std::size_t k = 0; k < cells; ++k) v[k] = sigmoid_toa(cell_center(k, cells));
  return ToaProfile::line(std::move(v));
}

ToaProfile make_ramp_profile(double dx, double slope, double offset) {
  const std::size_t cells = cells_for_spacing(dx);
  std::vector<double> v(cells);
  for (std::size_t k = 0; k < cells; ++k) v[k] = offset + slope * cell_center(k, cells);
  return ToaProfile::line(std::move(v));
}

ToaProfile make_flat_profile(double dx, double value) {
  return ToaProfile::line(std::vector<double>(cells_for_spacing(dx), value));
}

ToaProfile make_smooth_depth_map(std::size_t size) {
  if (size < 2) throw DomainError("depth map needs at least 2x2 cells");
  std::vector<double> v(size * size);
  auto bump = [](double x, double y, double cx, double cy, double s) {
    return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * s * s));
  };
  for (std::size_t r = 0; r < size; ++r) {
    const double y = cell_center(r, size);
    for (std::size_t c = 0; c < size; ++c) {
      const double x = cell_center(c, size);
      v[r * size + c] = 0.6 * bump(x, y, 0.35, 0.40, 0.12) + 0.4 * bump(x, y, 0.70, 0.65, 0.15) + 0.3 * x;
    }
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& z : v) z = 10.0 + 10.0 * (z - a) / span;
  return ToaProfile::grid(size, size, std::move(v));
}

ToaProfile gaussian_blur(const ToaProfile& profile, double sigma_cells) {
  if (!(sigma_cells > 0.0)) return profile;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_cells));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t i = -radius; i <= radius; ++i)
    kernel[static_cast<std::size_t>(i + radius)] =
        std::exp(-0.5 * static_cast<double>(i * i) / (sigma_cells * sigma_cells));
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= total;

  const std::size_t rows = profile.rows();
  const std::size_t cols = profile.cols();
  auto pass = [&](const std::vector<double>& in, bool along_rows) {
    std::vector<double> out(in.size());
    const std::size_t lines = along_rows ? cols : rows;
    const std::size_t count = along_rows ? rows : cols;
    const std::size_t stride = along_rows ? cols : 1;
    const std::size_t step = along_rows ? 1 : cols;
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t base = l * step;
      for (std::size_t k = 0; k < count; ++k) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
          const auto idx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k) + i, 0,
                                                      static_cast<std::ptrdiff_t>(count) - 1);
          acc += kernel[static_cast<std::size_t>(i + radius)] * in[base + static_cast<std::size_t>(idx) * stride];
        }
        out[base + k * stride] = acc;
      }
    }
    return out;
  };
  std::vector<double> v(profile.values().begin(), profile.values().end());
  v = pass(v, false);
  if (profile.is_2d()) {
    v = pass(v, true);
    return ToaProfile::grid(rows, cols, std::move(v));
  }
  return ToaProfile::line(std::move(v));
}

GradientField gradient(const ToaProfile& profile) {
  GradientField g;
  const auto v = profile.values();
  const std::size_t rows = profile.rows();
  const std::size_t cols = profile.cols();
  if (cols < 2 || (profile.is_2d() && rows < 2))
    throw DomainError("gradient needs at least two grid points per axis");
  g.slope_x.resize(v.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = central_difference(v.subspan(r * cols), cols, 1, profile.dx());
    std::copy(row.begin(), row.end(), g.slope_x.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  double acc = 0.0;
  for (double s : g.slope_x) acc += s * s;
  if (profile.is_2d()) {
    g.slope_y.resize(v.size());
    for (std::size_t c = 0; c < cols; ++c) {
      const auto col = central_difference(v.subspan(c), rows, cols, profile.dy());
      for (std::size_t r = 0; r < rows; ++r) g.slope_y[r * cols + c] = col[r];
    }
    for (double s : g.slope_y) acc += s * s;
  }
  g.aggregate = acc / static_cast<double>(v.size());
  return g;
}

std::pair<std::size_t, std::size_t> pixel_cells(std::size_t cells, std::size_t n_pixels, std::size_t n) {
  auto first = [&](std::size_t p) { return (2 * p * cells + n_pixels - 1) / (2 * n_pixels); };
  return {first(n), n + 1 == n_pixels ? cells : first(n + 1)};
}

BinnedScene bin_scene(const ToaProfile& profile, const FluxModel& model, std::size_t n_pixels) {
  if (profile.is_2d()) throw ConfigError("bin_scene expects a 1D profile; use bin_scene_2d");
  if (n_pixels == 0) throw ConfigError("pixel count must be >= 1");
  if (n_pixels > profile.cols())
    throw ConfigError("pixel count " + std::to_string(n_pixels) + " exceeds the grid resolution " +
                      std::to_string(profile.cols()));
  const auto grad = gradient(profile);
  BinnedScene b;
  b.n = n_pixels;
  b.sigma_x = 1.0 / (std::sqrt(12.0) * static_cast<double>(n_pixels));
  b.midpoints.resize(n_pixels);
  b.tau.resize(n_pixels);
  b.slope.resize(n_pixels);
  for (std::size_t n = 0; n < n_pixels; ++n) {
    const auto [lo, hi] = pixel_cells(profile.cols(), n_pixels, n);
    b.midpoints[n] = (2.0 * static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(n_pixels));
    b.tau[n] = sample_axis(profile.values(), 1, profile.cols(), b.midpoints[n]);
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += grad.slope_x[k];
    b.slope[n] = s / static_cast<double>(hi - lo);
    b.c_sq += b.slope[n] * b.slope[n];
  }
  b.c_sq /= static_cast<double>(n_pixels);
  if (model.gaussian()) {
    const double st = model.sigma_t();
    b.sigma_n.resize(n_pixels);
    for (std::size_t n = 0; n < n_pixels; ++n)
      b.sigma_n[n] = std::sqrt(b.slope[n] * b.slope[n] * b.sigma_x * b.sigma_x + st * st);
  }
  return b;
}

BinnedScene2D bin_scene_2d(const ToaProfile& profile, const FluxModel& model, std::size_t rows_n,
                           std::size_t cols_n) {
  if (!profile.is_2d()) throw ConfigError("bin_scene_2d expects a 2D profile");
  if (rows_n != cols_n) throw ConfigError("2D binning requires square pixelization (M == N)");
  const std::size_t n_side = cols_n;
  if (n_side == 0) throw ConfigError("pixel count must be >= 1");
  if (n_side > profile.rows() || n_side > profile.cols())
    throw ConfigError("pixel count exceeds the depth-map resolution");
  const auto grad = gradient(profile);
  BinnedScene2D b;
  b.n = n_side;
  b.sigma_s = 1.0 / (std::sqrt(12.0) * static_cast<double>(n_side));
  b.tau.resize(n_side * n_side);
  b.c_norm_sq.resize(n_side * n_side);
  const std::size_t cols = profile.cols();
  for (std::size_t m = 0; m < n_side; ++m) {
    const auto [r0, r1] = pixel_cells(profile.rows(), n_side, m);
    const double y = (2.0 * static_cast<double>(m) + 1.0) / (2.0 * static_cast<double>(n_side));
    for (std::size_t n = 0; n < n_side; ++n) {
      const auto [c0, c1] = pixel_cells(cols, n_side, n);
      const double x = (2.0 * static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(n_side));
      // bilinear sample at the pixel centre
      const double pr = y * static_cast<double>(profile.rows()) - 0.5;
      const auto r_lo = static_cast<std::size_t>(std::clamp(std::floor(pr), 0.0, static_cast<double>(profile.rows() - 1)));
      const std::size_t r_hi = std::min(r_lo + 1, profile.rows() - 1);
      const double wr = std::clamp(pr - static_cast<double>(r_lo), 0.0, 1.0);
      const double v_lo = sample_axis(profile.values().subspan(r_lo * cols), 1, cols, x);
      const double v_hi = sample_axis(profile.values().subspan(r_hi * cols), 1, cols, x);
      b.tau[m * n_side + n] = v_lo + wr * (v_hi - v_lo);

      double gx = 0.0;
      double gy = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) {
          gx += grad.slope_x[r * cols + c];
          gy += grad.slope_y[r * cols + c];
        }
      const double count = static_cast<double>((r1 - r0) * (c1 - c0));
      gx /= count;
      gy /= count;
      b.c_norm_sq[m * n_side + n] = gx * gx + gy * gy;
      b.c_norm_sq_mean += gx * gx + gy * gy;
    }
  }
  b.c_norm_sq_mean /= static_cast<double>(n_side * n_side);
  if (model.gaussian()) {
    const double st = model.sigma_t();
    b.sigma_n.resize(b.c_norm_sq.size());
    for (std::size_t i = 0; i < b.c_norm_sq.size(); ++i)
      b.sigma_n[i] = std::sqrt(b.c_norm_sq[i] * b.sigma_s * b.sigma_s + st * st);
  }
  return b;
}

double EffectivePulse::signal_mass() const {
  double m = 0.0;
  for (std::size_t k = 0; k < signal.size(); ++k)
    m += (k == 0 || k + 1 == signal.size() ? 0.5 : 1.0) * signal[k];
  return m * grid.dt;
}

double EffectivePulse::value(double t) const {
  double s = 0.0;
  if (t >= grid.t0 && t <= grid.back()) {
    const double pos = (t - grid.t0) / grid.dt;
    const auto i = std::min(static_cast<std::size_t>(pos), grid.size - 2);
    const double w = pos - static_cast<double>(i);
    s = signal[i] + w * (signal[i + 1] - signal[i]);
  }
  return s + floor(t);
}

double EffectivePulse::width() const {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < signal.size(); ++k) {
    const double t = grid.at(k);
    m0 += signal[k];
    m1 += signal[k] * t;
    m2 += signal[k] * t * t;
  }
  if (!(m0 > 0.0)) return 0.0;
  const double mean = m1 / m0;
  return std::sqrt(std::max(m2 / m0 - mean * mean, 0.0));
}

double GaussianEffectivePulse::value(double t) const {
  const double d = (t - tau) / sigma;
  return alpha * std::exp(-0.5 * d * d) / (std::sqrt(2.0 * std::numbers::pi) * sigma) + pixel_model.floor(t);
}

EffectivePulse effective_pulse_exact(const ToaProfile& profile, const FluxModel& model,
                                     std::size_t n_pixels, std::size_t n,
                                     const ObservationWindow& window, double dt) {
  if (profile.is_2d()) throw ConfigError("effective_pulse_exact expects a 1D profile");
  if (n_pixels == 0 || n_pixels > profile.cols()) throw ConfigError("invalid pixel count");
  if (n >= n_pixels) throw DomainError("pixel index out of range");
  EffectivePulse out;
  out.grid = TimeGrid::over(window, dt);
  out.pixel_model = model.per_pixel(n_pixels);
  out.signal.assign(out.grid.size, 0.0);
  out.reference_tau =
      sample_axis(profile.values(), 1, profile.cols(),
                  (2.0 * static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(n_pixels)));

  const auto [lo, hi] = pixel_cells(profile.cols(), n_pixels, n);
  const double weight = out.pixel_model.alpha / static_cast<double>(hi - lo);
  const auto& kern = kernels::active();
  for (std::size_t k = lo; k < hi; ++k) {
    const double center = profile[k];
    if (const auto* g = std::get_if<GaussianPulse>(&model.pulse)) {
      const double s = g->sigma_t;
      const double reach = 12.0 * s;
      const double first = std::clamp(std::floor((center - reach - out.grid.t0) / dt), 0.0,
                                       static_cast<double>(out.grid.size));
      const double last = std::clamp(std::ceil((center + reach - out.grid.t0) / dt) + 1.0, 0.0,
                                     static_cast<double>(out.grid.size));
      const auto a = static_cast<std::size_t>(first);
      const auto b = static_cast<std::size_t>(last);
      if (b > a)
        kern.accumulate_gaussian(std::span<double>(out.signal).subspan(a, b - a), out.grid.at(a), dt, center, s,
                                 weight / (std::sqrt(2.0 * std::numbers::pi) * s));
    } else {
      for (std::size_t i = 0; i < out.grid.size; ++i)
        out.signal[i] += weight * pulse_value(model.pulse, out.grid.at(i) - center);
    }
  }
  out.derivative = time_derivative(out.signal, dt);
  return out;
}

GaussianEffectivePulse effective_pulse_gaussian(const BinnedScene& binned, const FluxModel& model,
                                                std::size_t n) {
  if (!model.gaussian())
    throw UnsupportedModel("closed-form effective pulse needs a Gaussian pulse; use effective_pulse_exact");
  if (n >= binned.n) throw DomainError("pixel index out of range");
  const FluxModel pixel = model.per_pixel(binned.n);
  return GaussianEffectivePulse{pixel.alpha, binned.tau[n], binned.sigma_n[n], pixel};
}

EffectivePulse effective_pulse_tabulated_gaussian(const BinnedScene& binned, const FluxModel& model,
                                                  std::size_t n, const ObservationWindow& window,
                                                  double dt) {
  const auto g = effective_pulse_gaussian(binned, model, n);
  EffectivePulse out;
  out.grid = TimeGrid::over(window, dt);
  out.pixel_model = g.pixel_model;
  out.reference_tau = g.tau;
  out.signal.assign(out.grid.size, 0.0);
  kernels::active().accumulate_gaussian(out.signal, out.grid.t0, dt, g.tau, g.sigma,
                                        g.alpha / (std::sqrt(2.0 * std::numbers::pi) * g.sigma));
  out.derivative = time_derivative(out.signal, dt);
  return out;
}

ToaProfile piecewise_reconstruction(std::span<const double> estimates, std::size_t cells) {
  const std::size_t n_pixels = estimates.size();
  if (n_pixels == 0 || n_pixels > cells) throw DomainError("reconstruction needs 1 <= N <= cells");
  std::vector<double> v(cells);
  for (std::size_t n = 0; n < n_pixels; ++n) {
    const auto [lo, hi] = pixel_cells(cells, n_pixels, n);
    std::fill(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi), estimates[n]);
  }
  return ToaProfile::line(std::move(v));
}

ToaProfile piecewise_reconstruction_2d(std::span<const double> estimates, std::size_t n_pixels,
                                       std::size_t rows, std::size_t cols) {
  if (estimates.size() != n_pixels * n_pixels) throw DomainError("2D reconstruction expects N*N estimates");
  std::vector<double> v(rows * cols);
  for (std::size_t m = 0; m < n_pixels; ++m) {
    const auto [r0, r1] = pixel_cells(rows, n_pixels, m);
    for (std::size_t n = 0; n < n_pixels; ++n) {
      const auto [c0, c1] = pixel_cells(cols, n_pixels, n);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) v[r * cols + c] = estimates[m * n_pixels + n];
    }
  }
  return ToaProfile::grid(rows, cols, std::move(v));
}

ToaProfile read_profile(std::istream& in) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (!(in >> rows >> cols) || rows == 0 || cols == 0) throw ParseError("profile: expected `H W` header");
  std::vector<double> v(rows * cols);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(in >> v[i])) throw ParseError("profile: expected " + std::to_string(v.size()) + " values");
  std::string extra;
  if (in >> extra) throw ParseError("profile: trailing data after the grid");
  if (rows == 1) return ToaProfile::line(std::move(v));
  return ToaProfile::grid(rows, cols, std::move(v));
}

ToaProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile: " + path);
  return read_profile(in);
}

void write_profile(std::ostream& out, const ToaProfile& profile) {
  out << profile.rows() << ' ' << profile.cols() << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < profile.rows(); ++r) {
    for (std::size_t c = 0; c < profile.cols(); ++c) out << (c ? " " : "") << profile.at(r, c);
    out << '\n';
  }
}

}  // namespace photon_limits
