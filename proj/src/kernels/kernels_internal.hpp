#pragma once

#include "photon_limits/kernels.hpp"

namespace photon_limits::kernels {

// Scalar bodies are reused by the vector variants for loop tails.
LikelihoodTerms gaussian_likelihood_scalar(const GaussianLikelihoodArgs& args);
LikelihoodTerms tabulated_likelihood_scalar(const TabulatedLikelihoodArgs& args);

#if defined(PHOTON_LIMITS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace photon_limits::kernels
