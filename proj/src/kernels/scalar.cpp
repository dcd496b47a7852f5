#include "kernels_internal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace photon_limits::kernels {

namespace {

void accumulate_gaussian_scalar(std::span<double> out, double t0, double dt,
                                double center, double sigma, double weight) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double d = t0 + static_cast<double>(k) * dt - center;
    out[k] += weight * std::exp(-d * d * inv);
  }
}

}  // namespace

LikelihoodTerms gaussian_likelihood_scalar(const GaussianLikelihoodArgs& a) {
  const double inv_sigma = 1.0 / a.sigma;
  const double norm = a.amplitude / (std::sqrt(2.0 * std::numbers::pi) * a.sigma);
  const double log_norm = std::log(norm);
  LikelihoodTerms acc;
  for (std::size_t j = 0; j < a.stamps.size(); ++j) {
    const double u = (a.stamps[j] - a.tau) * inv_sigma;
    const double f = a.floor[j];
    if (f == 0.0) {
      acc.value += log_norm - 0.5 * u * u;
      acc.first += u * inv_sigma;
      acc.second -= inv_sigma * inv_sigma;
      continue;
    }
    const double g = norm * std::exp(-0.5 * u * u);
    const double lambda = g + f;
    if (!(lambda > 0.0)) {
      acc.value = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double r = g / lambda;
    const double s = r * u * inv_sigma;
    acc.value += std::log(lambda);
    acc.first += s;
    acc.second += r * (u * u - 1.0) * inv_sigma * inv_sigma - s * s;
  }
  return acc;
}

LikelihoodTerms tabulated_likelihood_scalar(const TabulatedLikelihoodArgs& a) {
  const std::size_t n = a.signal.size();
  const double last = static_cast<double>(n - 1);
  const double inv_dt = 1.0 / a.dt;
  LikelihoodTerms acc;
  for (std::size_t j = 0; j < a.stamps.size(); ++j) {
    const double pos = (a.stamps[j] - a.shift - a.t0) * inv_dt;
    double s = 0.0;
    double d = 0.0;
    if (pos <= 0.0) {
      s = a.signal[0];
    } else if (pos >= last) {
      s = a.signal[n - 1];
    } else {
      const auto i = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(i);
      s = a.signal[i] + w * (a.signal[i + 1] - a.signal[i]);
      d = a.derivative[i] + w * (a.derivative[i + 1] - a.derivative[i]);
    }
    const double lambda = s + a.floor[j];
    if (!(lambda > 0.0)) {
      acc.value = -std::numeric_limits<double>::infinity();
      continue;
    }
    acc.value += std::log(lambda);
    acc.first -= d / lambda;
  }
  return acc;
}

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, accumulate_gaussian_scalar,
                                 gaussian_likelihood_scalar,
                                 tabulated_likelihood_scalar};
  return table;
}

}  // namespace photon_limits::kernels
