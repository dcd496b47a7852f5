#include "kernels_internal.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace photon_limits::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool avx2_supported() {
#if defined(PHOTON_LIMITS_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Isa isa) {
  if (isa == Isa::scalar) return scalar_table();
#if defined(PHOTON_LIMITS_HAVE_AVX2)
  if (avx2_supported()) return avx2_table();
#endif
  throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("PHOTON_LIMITS_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_table();
  if (want == "avx2") return table_for(Isa::avx2);
  return avx2_supported() ? table_for(Isa::avx2) : scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace photon_limits::kernels
