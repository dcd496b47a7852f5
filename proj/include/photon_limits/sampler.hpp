#pragma once

// Photon time-stamp generation for inhomogeneous Poisson fluxes.

#include "photon_limits/pulse.hpp"

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace photon_limits {

struct EffectivePulse;

// Derives an independent 64-bit stream key from (seed, key...). The same
// inputs give the same stream regardless of thread scheduling.
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {});

  std::mt19937_64& engine() { return engine_; }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

 private:
  std::mt19937_64 engine_;
};

struct ComponentCounts {
  std::size_t signal = 0;
  std::size_t background = 0;
  std::size_t pileup = 0;
};

struct TimeStamps {
  std::vector<double> times;  // ascending
  ComponentCounts counts;
  bool tracked = false;  // counts are meaningful

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

// Poisson(rate). Throws DomainError for negative or non-finite rates.
std::size_t draw_count(double rate, RngStream& rng);

// Two-step sampling: Poisson(alpha) stamps from N(tau, sigma_t^2) and
// Poisson(|window| * floor) uniform background stamps. Signal stamps that fall
// outside the window are kept unless strict_window is set, in which case they
// are redrawn. Throws UnsupportedModel for tabulated pulses or pile-up.
TimeStamps sample_gaussian(const FluxModel& model, double tau, const ObservationWindow& window,
                           RngStream& rng, bool strict_window = false);

// Cumulative (trapezoid) table of a nonnegative flux sampled on a grid.
class InverseCdfTable {
 public:
  // Throws DomainError on a size mismatch, negative or non-finite flux.
  InverseCdfTable(const TimeGrid& grid, std::span<const double> flux);

  double mass() const { return cdf_.back(); }
  const TimeGrid& grid() const { return grid_; }
  // Grid time whose cumulative value is nearest to u * mass, u in [0, 1).
  double invert(double u) const;

 private:
  TimeGrid grid_;
  std::vector<double> cdf_;
};

// M ~ Poisson(mass), each stamp drawn by table inversion.
TimeStamps sample_inverse_cdf(const InverseCdfTable& table, RngStream& rng);
TimeStamps sample_inverse_cdf(const TimeGrid& grid, std::span<const double> flux, RngStream& rng);

// Three independent components: pulse (Gaussian draw or table inversion),
// pile-up Exponential(gamma) truncated to the window by rejection, and a
// uniform floor. The pile-up count is Poisson with the in-window mass.
TimeStamps sample_pileup(const FluxModel& model, double tau, const ObservationWindow& window,
                         RngStream& rng);

// Same mixture for a pixel whose signal part is a tabulated effective pulse
// (shifted by `shift` relative to its reference delay).
TimeStamps sample_components(const EffectivePulse& pulse, const InverseCdfTable& signal_table,
                             const ObservationWindow& window, RngStream& rng, double shift = 0.0);

// `# seed=<u64> N=<n> trial=<k>` then `pixel_index t` per stamp.
void write_stamp_dump(std::ostream& out, std::uint64_t seed, std::size_t n_pixels, std::size_t trial,
                      std::span<const TimeStamps> pixels);

struct StampDump {
  std::uint64_t seed = 0;
  std::size_t n_pixels = 0;
  std::size_t trial = 0;
  std::vector<TimeStamps> pixels;
};

// Throws ParseError on a missing header or malformed lines.
StampDump read_stamp_dump(std::istream& in);

}  // namespace photon_limits
