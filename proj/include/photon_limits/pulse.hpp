#pragma once

// Pulse shapes s(t) and the return-flux model
//   lambda(t) = alpha * s(t - tau) + beta * gamma * exp(-gamma t) + lambda_b + lambda_dark / n_pixels
// where the pile-up and dark-count terms are optional.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace photon_limits {

struct ObservationWindow {
  double t_min = 0.0;
  double t_max = 10.0;

  double length() const { return t_max - t_min; }
  bool contains(double t) const { return t >= t_min && t <= t_max; }
  // Throws DomainError unless t_max > t_min.
  void validate() const;
  // True when six standard deviations of the pulse do not fit in the window.
  // Callers warn; the configuration is still accepted.
  bool too_narrow_for(double sigma_t) const { return 6.0 * sigma_t > length(); }
};

// Uniform temporal grid t_k = t0 + k dt, k = 0..size-1.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t size = 0;

  static TimeGrid over(const ObservationWindow& window, double dt);
  double at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double back() const { return at(size - 1); }
};

struct GaussianPulse {
  double sigma_t = 0.5;
};

// Pulse sampled on a uniform grid, centred so that s(t) is the pulse for a
// zero delay. Normalised to unit trapezoidal mass on construction.
class TabulatedPulse {
 public:
  // Throws DomainError on a non-ascending/non-uniform grid, negative or
  // non-finite values, or zero mass.
  TabulatedPulse(std::span<const double> t_grid, std::span<const double> s_values);
  TabulatedPulse(TimeGrid grid, std::vector<double> s_values);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> derivatives() const { return derivatives_; }
  // Set when the input mass was off by more than 1e-6 and got rescaled.
  bool renormalized() const { return renormalized_; }

  // Linear interpolation; zero outside the grid.
  double value(double t) const;
  // Finite-difference derivative (central inside, one-sided at the ends),
  // linearly interpolated. Throws DomainError outside the grid.
  double derivative(double t) const;
  double mean() const;
  double variance() const;

 private:
  void finish();

  TimeGrid grid_;
  std::vector<double> values_;
  std::vector<double> derivatives_;
  bool renormalized_ = false;
};

using PulseShape = std::variant<GaussianPulse, TabulatedPulse>;

struct PileUp {
  double beta = 0.0;   // photons
  double gamma = 1.0;  // 1/time
};

struct DarkCount {
  double lambda_dark = 0.0;  // photons/time over the whole array
  std::size_t n_pixels = 1;
};

struct FluxModel {
  double alpha = 1.0;     // signal photons
  double lambda_b = 0.0;  // photons/time
  PulseShape pulse = GaussianPulse{};
  std::optional<PileUp> pileup;
  std::optional<DarkCount> dark;

  // Throws DomainError when an invariant is violated.
  void validate() const;
  bool gaussian() const { return std::holds_alternative<GaussianPulse>(pulse); }
  // Throws UnsupportedModel for tabulated pulses.
  double sigma_t() const;
  // Time-invariant part of the flux (everything except alpha * s).
  double floor(double t) const;
  // Constant part of the floor: lambda_b plus the dark-count share.
  double constant_floor() const;
  // Model seen by one of n pixels sharing the scene: signal, ambient floor,
  // pile-up mass and dark count all split n ways.
  FluxModel per_pixel(std::size_t n) const;
};

double pulse_value(const PulseShape& shape, double t);
double pulse_derivative(const PulseShape& shape, double t);
// Second moment width of the pulse (sigma_t for Gaussians).
double pulse_width(const PulseShape& shape);

double eval_flux(const FluxModel& model, double tau, double t);
// Expected photon count over the window.
double pulse_energy(const FluxModel& model, const ObservationWindow& window);
// Mass of the pile-up component inside the window.
double pileup_mass(const PileUp& pileup, const ObservationWindow& window);

// Two-column `t s(t)` text; blank lines and '#' comments are skipped.
TabulatedPulse read_tabulated_pulse(std::istream& in);
TabulatedPulse load_tabulated_pulse(const std::string& path);

}  // namespace photon_limits
