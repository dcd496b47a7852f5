#pragma once

// Ground-truth time-of-arrival profiles on the unit interval/square, their
// gradients, N-pixel binning and the effective per-pixel return pulses.
//
// Profiles are cell-centred: a 1D profile with K cells samples x_k = (k + 1/2)/K.
// Cell k belongs to pixel floor(x_k * N).

#include "photon_limits/pulse.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace photon_limits {

class ToaProfile {
 public:
  ToaProfile() = default;
  static ToaProfile line(std::vector<double> values);
  static ToaProfile grid(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool is_2d() const { return two_d_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  double dx() const { return 1.0 / static_cast<double>(cols_); }
  double dy() const { return 1.0 / static_cast<double>(rows_); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double min() const;
  double max() const;

 private:
  ToaProfile(std::size_t rows, std::size_t cols, std::vector<double> values, bool two_d);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  bool two_d_ = false;
};

struct GradientField {
  std::vector<double> slope_x;  // d tau / dx per cell
  std::vector<double> slope_y;  // d tau / dy per cell (2D only)
  // Mean squared gradient magnitude over the grid, i.e. the grid integral of
  // |grad tau|^2 over the unit domain.
  double aggregate = 0.0;
};

struct BinnedScene {
  std::size_t n = 0;
  std::vector<double> midpoints;  // x_n = (2n+1)/(2N)
  std::vector<double> tau;        // tau(x_n)
  std::vector<double> slope;      // c_n, mean slope over the pixel
  std::vector<double> sigma_n;    // sqrt(c_n^2 sigma_x^2 + sigma_t^2); empty for tabulated pulses
  double sigma_x = 0.0;           // 1/(sqrt(12) N)
  double c_sq = 0.0;              // (1/N) sum c_n^2
};

struct BinnedScene2D {
  std::size_t n = 0;               // pixels per side
  std::vector<double> tau;         // row-major N x N, tau at pixel centres
  std::vector<double> c_norm_sq;   // |c_mn|^2 per pixel
  std::vector<double> sigma_n;     // empty for tabulated pulses
  double sigma_s = 0.0;
  double c_norm_sq_mean = 0.0;
};

// Per-pixel return flux after integrating lambda(x, t) over the pixel footprint.
struct EffectivePulse {
  TimeGrid grid;
  std::vector<double> signal;      // alpha_n * s_n(t) on the grid
  std::vector<double> derivative;  // d signal / dt (central differences)
  double reference_tau = 0.0;      // tau_n; the table is the return for this delay
  FluxModel pixel_model;           // floor terms of the per-pixel model

  double signal_mass() const;
  double floor(double t) const { return pixel_model.floor(t); }
  double value(double t) const;
  double width() const;  // rms width of the signal part
};

struct GaussianEffectivePulse {
  double alpha = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  FluxModel pixel_model;

  double value(double t) const;
};

double sigmoid_toa(double x);
ToaProfile make_sigmoid_profile(double dx);
ToaProfile make_ramp_profile(double dx, double slope, double offset = 0.0);
ToaProfile make_flat_profile(double dx, double value);
// Smooth synthetic 2D scene (two bumps over a tilted plane) scaled to [10, 20].
ToaProfile make_smooth_depth_map(std::size_t size);
// Separable Gaussian blur with replicated edges; sigma in grid cells.
ToaProfile gaussian_blur(const ToaProfile& profile, double sigma_cells);

GradientField gradient(const ToaProfile& profile);

// Cells [first, last) of a K-cell axis that belong to pixel n of N.
std::pair<std::size_t, std::size_t> pixel_cells(std::size_t cells, std::size_t n_pixels, std::size_t n);

BinnedScene bin_scene(const ToaProfile& profile, const FluxModel& model, std::size_t n_pixels);
// Throws ConfigError unless rows_n == cols_n.
BinnedScene2D bin_scene_2d(const ToaProfile& profile, const FluxModel& model,
                           std::size_t rows_n, std::size_t cols_n);

// model.alpha and the floor terms are scene totals; pixel n receives 1/N of them.
EffectivePulse effective_pulse_exact(const ToaProfile& profile, const FluxModel& model,
                                     std::size_t n_pixels, std::size_t n,
                                     const ObservationWindow& window, double dt);
// The same table for the Gaussian approximation (alpha_n N(t | tau_n, sigma_n^2)).
EffectivePulse effective_pulse_tabulated_gaussian(const BinnedScene& binned, const FluxModel& model,
                                                  std::size_t n, const ObservationWindow& window,
                                                  double dt);
GaussianEffectivePulse effective_pulse_gaussian(const BinnedScene& binned, const FluxModel& model,
                                                std::size_t n);

ToaProfile piecewise_reconstruction(std::span<const double> estimates, std::size_t cells);
ToaProfile piecewise_reconstruction_2d(std::span<const double> estimates, std::size_t n_pixels,
                                       std::size_t rows, std::size_t cols);

// Text grid: first line `H W`, then H rows of W values. H == 1 reads as 1D.
ToaProfile read_profile(std::istream& in);
ToaProfile load_profile(const std::string& path);
void write_profile(std::ostream& out, const ToaProfile& profile);

}  // namespace photon_limits
