#pragma once

// Bias / variance / MSE predictions for N-pixel reconstructions.
//
// 1D:  MSE(N) = c^2 / (12 N^2) + (N / alpha0) (c^2 sigma_x^2 + sigma_t^2)
// 2D:  MSE(N) = |c|^2 / (12 N^2) + (N^2 / alpha0) (|c|^2 sigma_s^2 + sigma_t^2)
// with sigma_x = sigma_s = 1 / (sqrt(12) N). alpha0 is the scene total.

#include "photon_limits/pulse.hpp"
#include "photon_limits/scene.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace photon_limits {

enum class PredictionMode { closed_form, numerical, simplified };
std::string_view mode_name(PredictionMode m);

struct MsePrediction {
  std::size_t n = 0;
  double bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
  PredictionMode mode = PredictionMode::closed_form;
};

MsePrediction make_prediction(std::size_t n, double bias, double variance, PredictionMode mode);

struct SimulatedPoint {
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  std::size_t trials = 0;
  std::size_t empty_pixels = 0;  // pixels that received no stamps, summed over trials
};

struct SweepCurve {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<MsePrediction> theory;
  std::vector<SimulatedPoint> simulated;  // empty or one per theory point

  // Throws DomainError unless N is strictly ascending and sizes agree.
  void validate() const;
};

struct FisherResult {
  double information = 0.0;
  double variance = 0.0;  // 1 / information, +inf when information is 0
  bool infinite = false;
};

// [int (d signal/dt)^2 / (signal + floor) dt]^-1 by the trapezoid rule on the
// pulse grid. Points where the flux is below 1e-300 contribute nothing.
FisherResult single_pixel_variance(const EffectivePulse& pulse);
// Same integral for alpha * s(t - tau) + floor with the analytic derivative.
FisherResult single_pixel_variance(const FluxModel& model, double tau, const ObservationWindow& window,
                                   double dt);

double optimal_boxcar_sigma(double width);

double bias_1d(double c_sq, std::size_t n);
double variance_1d(double c_sq, double sigma_x, double sigma_t, double alpha0, std::size_t n);
MsePrediction mse_1d(double c_sq, double sigma_t, double alpha0, std::size_t n);
MsePrediction mse_1d(const BinnedScene& binned, double sigma_t, double alpha0);
// Variance without the c^2 sigma_x^2 term.
MsePrediction mse_1d_simplified(double c_sq, double sigma_t, double alpha0, std::size_t n);

enum class NumericalPulse { exact, gaussian_approx };
enum class NumericalAveraging { per_pixel, representative };

struct NumericalOptions {
  NumericalPulse pulse = NumericalPulse::exact;
  NumericalAveraging averaging = NumericalAveraging::per_pixel;
};

// Bias c^2 / (12 N^2) plus the mean over pixels of the single-pixel variance
// of each effective pulse (pixel flux alpha0 / N, floors split N ways).
MsePrediction mse_numerical(const ToaProfile& profile, const FluxModel& model, std::size_t n,
                            const ObservationWindow& window, double dt, const NumericalOptions& opt = {});

double bias_2d(double c_norm_sq, std::size_t n);
double variance_2d(double c_norm_sq, double sigma_s, double sigma_t, double alpha0, std::size_t n);
MsePrediction mse_2d(double c_norm_sq, double sigma_t, double alpha0, std::size_t n);

// Positive root of sigma_t^2 N^3 / alpha0 - c^2 N / (12 alpha0) - c^2 / 6 = 0.
double optimal_n_1d(double c_sq, double sigma_t, double alpha0);
// (sqrt(alpha0) |c| / (sqrt(12) sigma_t))^(1/2); +inf when sigma_t == 0.
double optimal_n_2d(double alpha0, double c_norm, double sigma_t);

double noisy_bias_correction(double c_sq_clean, std::size_t n, double sigma_e_sq);

// Grid integral of (tau - tau_bar)^2 where tau_bar is the per-pixel average.
double binned_bias(const ToaProfile& profile, std::size_t n);

}  // namespace photon_limits
