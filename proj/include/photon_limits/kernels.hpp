#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2+FMA variant. The active table is chosen once at runtime
// (CPU feature probe, overridable with PHOTON_LIMITS_SIMD=scalar|avx2).

#include <cstddef>
#include <span>
#include <string_view>

namespace photon_limits::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Log-likelihood and its first two derivatives with respect to the delay.
struct LikelihoodTerms {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

// Gaussian return pulse with a per-stamp (time-invariant) floor:
//   lambda_j(tau) = amplitude * N(t_j | tau, sigma^2) + floor_j.
// Stamps with floor_j == 0 are evaluated in the log domain so that far-tail
// stamps never produce log(0).
struct GaussianLikelihoodArgs {
  std::span<const double> stamps;
  std::span<const double> floor;
  double tau = 0.0;
  double sigma = 1.0;
  double amplitude = 1.0;
};

// Tabulated signal on a uniform grid (t0, dt), shifted by `shift`, plus a
// per-stamp floor. Linear interpolation, replicate padding past the ends.
// `derivative` holds d(signal)/dt on the same grid.
struct TabulatedLikelihoodArgs {
  std::span<const double> stamps;
  std::span<const double> floor;
  std::span<const double> signal;
  std::span<const double> derivative;
  double t0 = 0.0;
  double dt = 1.0;
  double shift = 0.0;
};

struct KernelTable {
  Isa isa;
  // out[k] += weight * exp(-(t0 + k*dt - center)^2 / (2 sigma^2))
  void (*accumulate_gaussian)(std::span<double> out, double t0, double dt,
                              double center, double sigma, double weight);
  // value = sum log lambda_j; first = dL/dtau; second = d2L/dtau2.
  // value is -inf when any lambda_j <= 0.
  LikelihoodTerms (*gaussian_likelihood)(const GaussianLikelihoodArgs& args);
  // value and first derivative only; second is left at 0.
  LikelihoodTerms (*tabulated_likelihood)(const TabulatedLikelihoodArgs& args);
};

const KernelTable& scalar_table();
bool avx2_supported();
// Throws std::runtime_error if the ISA is unavailable on this build/CPU.
const KernelTable& table_for(Isa isa);
// The table selected for this process.
const KernelTable& active();

}  // namespace photon_limits::kernels
