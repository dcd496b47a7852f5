#pragma once

// Monte Carlo sweeps over the pixel count N. Every (N, trial, pixel) triple
// draws from its own RNG stream, so results do not depend on thread count.

#include "photon_limits/config.hpp"
#include "photon_limits/scene.hpp"
#include "photon_limits/theory.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace photon_limits {

// Grid integral of (a - b)^2 over the unit domain. Throws DomainError when the
// grids differ.
double empirical_mse(const ToaProfile& reconstruction, const ToaProfile& truth);

struct TrialRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::vector<double> estimates;  // one per pixel (row-major N x N in 2D)
  double mse = 0.0;
  std::size_t empty_pixels = 0;
  std::size_t fallbacks = 0;  // zero solver runs that fell back to the search
};

// Per-pixel cell statistics of the truth, enough to integrate (a - tau)^2
// over any pixel for a constant a.
class PixelPartition {
 public:
  PixelPartition(const ToaProfile& truth, std::size_t n);

  std::size_t pixels() const { return count_.size(); }
  // Grid integral of (reconstruction - truth)^2 for piecewise-constant values.
  double mse(std::span<const double> estimates) const;
  // Integral of (a - tau)^2 over pixel p, divided by the total cell count.
  double pixel_error(std::size_t p, double a) const;
  double weight(std::size_t p) const { return count_[p] / total_; }

 private:
  std::vector<double> count_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  double total_ = 0.0;
};

struct Decomposition {
  double bias = 0.0;      // integral of (mean reconstruction - truth)^2
  double variance = 0.0;  // mean integral of (reconstruction - mean reconstruction)^2
  double mse = 0.0;       // mean empirical MSE
  double gap = 0.0;       // |bias + variance - mse| / mse
};

Decomposition decompose_empirical(std::span<const TrialRecord> trials, const ToaProfile& truth, std::size_t n);

enum class TheoryKind { closed_form, numerical };

struct SweepSettings {
  LikelihoodKind likelihood = LikelihoodKind::gaussian;
  InitKind init = InitKind::mean;
  Solver solver = Solver::zero;
  TheoryKind theory = TheoryKind::closed_form;
  bool keep_trials = false;
};

struct SweepResult {
  SweepCurve curve;
  std::vector<std::vector<TrialRecord>> trials;  // per N; filled when keep_trials
  std::size_t fallbacks = 0;
  std::size_t empty_pixels = 0;
};

// Generic 1D sweep: exact effective pulses, inverse-CDF sampling (signal) plus
// pile-up and floor components, per-pixel ML estimation.
SweepResult simulate_1d(const ExperimentConfig& cfg, const ToaProfile& truth, const FluxModel& model,
                        const SweepSettings& settings);

// Gaussian-model likelihood, configured solver and init, closed-form theory
// (numerical theory when the model has a floor, pile-up or tabulated pulse).
SweepResult run_1d_sweep(const ExperimentConfig& cfg);

struct AblationResult {
  SweepCurve full;
  SweepCurve simplified;
};
AblationResult run_ablation(const ExperimentConfig& cfg);

// Square N x N binning with per-pixel flux alpha0 / N^2. Gaussian pulse with
// no floor uses the mean estimator; anything else goes through the
// configured solver with the Gaussian effective-pulse likelihood.
SweepResult run_2d_sweep(const ExperimentConfig& cfg, const ToaProfile& depth_map);

// Pile-up sampler, exact tabulated likelihood, oracle init, numerical theory.
SweepResult run_pileup(const ExperimentConfig& cfg);

// One sweep per floor value: exact likelihood, oracle init, numerical theory.
std::vector<std::pair<double, SweepResult>> run_noise_floor_sweep(const ExperimentConfig& cfg);

struct PhysicalSetup {
  double array_mm = 10.0;
  std::size_t grid_points = 1024;
  std::size_t group = 32;
  double window_ns = 100.0;
  std::size_t time_points = 2048;
  double sigma_t_points = 20.0;
};

struct UnitConversion {
  double dx_unit = 0.0;  // 1 / grid_points
  double dx_um = 0.0;
  double sigma_x_unit = 0.0;
  double sigma_x_cells = 0.0;
  double sigma_x_um = 0.0;
  double dt_unit = 0.0;  // 1 / time_points
  double dt_ns = 0.0;
  double sigma_t_unit = 0.0;
  double sigma_t_ns = 0.0;
  double pulse_width_ns = 0.0;  // 6 sigma_t
};

UnitConversion convert_units(const PhysicalSetup& setup);

}  // namespace photon_limits
