#include "photon_limits/theory.hpp"

#include "photon_limits/errors.hpp"

#include <cmath>
#include <limits>

namespace photon_limits {

std::string_view mode_name(PredictionMode m) {
  switch (m) {
    case PredictionMode::closed_form: return "closed_form";
    case PredictionMode::numerical: return "numerical";
    case PredictionMode::simplified: return "simplified";
  }
  return "?";
}

MsePrediction make_prediction(std::size_t n, double bias, double variance, PredictionMode mode) {
  if (!(bias >= 0.0) || !(variance >= 0.0)) throw DomainError("prediction: bias and variance must be >= 0");
  return {n, bias, variance, bias + variance, mode};
}

void SweepCurve::validate() const {
  for (std::size_t i = 1; i < theory.size(); ++i)
    if (theory[i].n <= theory[i - 1].n) throw DomainError("sweep: N values must be strictly ascending");
  if (!simulated.empty() && simulated.size() != theory.size())
    throw DomainError("sweep: simulated points do not match theory points");
}

namespace {

FisherResult finish_fisher(double info) {
  FisherResult r;
  r.information = info;
  if (info > 0.0) {
    r.variance = 1.0 / info;
  } else {
    r.variance = std::numeric_limits<double>::infinity();
    r.infinite = true;
  }
  return r;
}

void check_alpha0(double alpha0) {
  if (!(alpha0 > 0.0)) throw DomainError("alpha0 must be > 0");
}

void check_n(std::size_t n) {
  if (n == 0) throw DomainError("pixel count must be >= 1");
}

}  // namespace

FisherResult single_pixel_variance(const EffectivePulse& pulse) {
  const std::size_t k = pulse.signal.size();
  double info = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lambda = pulse.signal[i] + pulse.floor(pulse.grid.at(i));
    if (lambda < 1e-300) continue;
    const double w = (i == 0 || i + 1 == k) ? 0.5 : 1.0;
    info += w * pulse.derivative[i] * pulse.derivative[i] / lambda;
  }
  return finish_fisher(info * pulse.grid.dt);
}

FisherResult single_pixel_variance(const FluxModel& model, double tau, const ObservationWindow& window, double dt) {
  const auto grid = TimeGrid::over(window, dt);
  double info = 0.0;
  for (std::size_t i = 0; i < grid.size; ++i) {
    const double t = grid.at(i);
    const double lambda = eval_flux(model, tau, t);
    if (lambda < 1e-300) continue;
    const double d = model.alpha * pulse_derivative(model.pulse, t - tau);
    const double w = (i == 0 || i + 1 == grid.size) ? 0.5 : 1.0;
    info += w * d * d / lambda;
  }
  return finish_fisher(info * dt);
}

double optimal_boxcar_sigma(double width) {
  if (!(width > 0.0)) throw DomainError("boxcar width must be > 0");
  return width / std::sqrt(12.0);
}

double bias_1d(double c_sq, std::size_t n) {
  check_n(n);
  const double nn = static_cast<double>(n);
  return c_sq / (12.0 * nn * nn);
}

double variance_1d(double c_sq, double sigma_x, double sigma_t, double alpha0, std::size_t n) {
  check_n(n);
  check_alpha0(alpha0);
  return static_cast<double>(n) / alpha0 * (c_sq * sigma_x * sigma_x + sigma_t * sigma_t);
}

MsePrediction mse_1d(double c_sq, double sigma_t, double alpha0, std::size_t n) {
  const double sigma_x = 1.0 / (std::sqrt(12.0) * static_cast<double>(n));
  return make_prediction(n, bias_1d(c_sq, n), variance_1d(c_sq, sigma_x, sigma_t, alpha0, n),
                         PredictionMode::closed_form);
}

MsePrediction mse_1d(const BinnedScene& binned, double sigma_t, double alpha0) {
  return mse_1d(binned.c_sq, sigma_t, alpha0, binned.n);
}

MsePrediction mse_1d_simplified(double c_sq, double sigma_t, double alpha0, std::size_t n) {
  return make_prediction(n, bias_1d(c_sq, n), variance_1d(c_sq, 0.0, sigma_t, alpha0, n),
                         PredictionMode::simplified);
}

MsePrediction mse_numerical(const ToaProfile& profile, const FluxModel& model, std::size_t n,
                            const ObservationWindow& window, double dt, const NumericalOptions& opt) {
  const BinnedScene binned = bin_scene(profile, model, n);
  std::vector<std::size_t> pixels;
  if (opt.averaging == NumericalAveraging::representative) {
    pixels.push_back(n / 2);
  } else {
    for (std::size_t i = 0; i < n; ++i) pixels.push_back(i);
  }
  double var = 0.0;
  for (std::size_t p : pixels) {
    const EffectivePulse pulse = opt.pulse == NumericalPulse::exact
                                     ? effective_pulse_exact(profile, model, n, p, window, dt)
                                     : effective_pulse_tabulated_gaussian(binned, model, p, window, dt);
    var += single_pixel_variance(pulse).variance;
  }
  var /= static_cast<double>(pixels.size());
  return make_prediction(n, bias_1d(binned.c_sq, n), var, PredictionMode::numerical);
}

double bias_2d(double c_norm_sq, std::size_t n) { return bias_1d(c_norm_sq, n); }

double variance_2d(double c_norm_sq, double sigma_s, double sigma_t, double alpha0, std::size_t n) {
  check_n(n);
  check_alpha0(alpha0);
  const double nn = static_cast<double>(n);
  return nn * nn / alpha0 * (c_norm_sq * sigma_s * sigma_s + sigma_t * sigma_t);
}

MsePrediction mse_2d(double c_norm_sq, double sigma_t, double alpha0, std::size_t n) {
  const double sigma_s = 1.0 / (std::sqrt(12.0) * static_cast<double>(n));
  return make_prediction(n, bias_2d(c_norm_sq, n), variance_2d(c_norm_sq, sigma_s, sigma_t, alpha0, n),
                         PredictionMode::closed_form);
}

double optimal_n_1d(double c_sq, double sigma_t, double alpha0) {
  check_alpha0(alpha0);
  if (c_sq <= 0.0) return 1.0;
  if (sigma_t <= 0.0) return std::numeric_limits<double>::infinity();
  const double s2 = sigma_t * sigma_t;
  auto g = [&](double n) { return s2 * n * n * n / alpha0 - c_sq * n / (12.0 * alpha0) - c_sq / 6.0; };
  double lo = 0.0;
  double hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double optimal_n_2d(double alpha0, double c_norm, double sigma_t) {
  check_alpha0(alpha0);
  if (sigma_t <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(std::sqrt(alpha0) * c_norm / (std::sqrt(12.0) * sigma_t));
}

double noisy_bias_correction(double c_sq_clean, std::size_t n, double sigma_e_sq) {
  return bias_1d(c_sq_clean, n) + sigma_e_sq;
}

double binned_bias(const ToaProfile& profile, std::size_t n) {
  check_n(n);
  const auto v = profile.values();
  double total = 0.0;
  if (!profile.is_2d()) {
    if (n > profile.cols()) throw ConfigError("pixel count exceeds the grid resolution");
    for (std::size_t p = 0; p < n; ++p) {
      const auto [lo, hi] = pixel_cells(profile.cols(), n, p);
      double mean = 0.0;
      for (std::size_t k = lo; k < hi; ++k) mean += v[k];
      mean /= static_cast<double>(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) total += (v[k] - mean) * (v[k] - mean);
    }
    return total / static_cast<double>(v.size());
  }
  if (n > profile.rows() || n > profile.cols()) throw ConfigError("pixel count exceeds the grid resolution");
  const std::size_t cols = profile.cols();
  for (std::size_t m = 0; m < n; ++m) {
    const auto [r0, r1] = pixel_cells(profile.rows(), n, m);
    for (std::size_t p = 0; p < n; ++p) {
      const auto [c0, c1] = pixel_cells(cols, n, p);
      double mean = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) mean += v[r * cols + c];
      mean /= static_cast<double>((r1 - r0) * (c1 - c0));
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) total += (v[r * cols + c] - mean) * (v[r * cols + c] - mean);
    }
  }
  return total / static_cast<double>(v.size());
}

}  // namespace photon_limits
