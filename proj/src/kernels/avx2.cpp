// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime probe in dispatch.cpp succeeds.

#include "kernels_internal.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace photon_limits::kernels {

namespace {

inline __m256d splat(double v) { return _mm256_set1_pd(v); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) with |error| ~ 1 ulp over [-708, 709]; returns 0 below -708.
inline __m256d exp_pd(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, splat(-708.0), _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, splat(-708.0)), splat(709.0));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, splat(std::numbers::log2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, splat(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(k, splat(1.90821492927058770002e-10), r);

  // Taylor series of e^r to degree 13; |r| <= ln2/2 keeps the remainder < 1e-17.
  __m256d p = splat(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, splat(0.5));
  p = _mm256_fmadd_pd(p, r, splat(1.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0));

  // 2^k via the 1.5*2^52 rounding trick; k is integral and |k| < 1100.
  const __m256d magic = splat(6755399441055744.0);
  __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k, magic)),
                                _mm256_castpd_si256(magic));
  ki = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(ki));
  return _mm256_andnot_pd(underflow, result);
}

// Natural log for finite x > 0 (subnormals included). Other lanes are garbage
// and must be masked by the caller.
inline __m256d log_pd(__m256d x) {
  const __m256d subnormal = _mm256_cmp_pd(x, splat(std::numeric_limits<double>::min()), _CMP_LT_OQ);
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, splat(18014398509481984.0)), subnormal);  // 2^54
  const __m256d exp_bias = _mm256_blendv_pd(splat(1023.0), splat(1023.0 + 54.0), subnormal);

  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i ebits = _mm256_srli_epi64(bits, 52);
  const __m256d two52 = splat(4503599627370496.0);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(ebits, _mm256_castpd_si256(two52))), two52);
  e = _mm256_sub_pd(e, exp_bias);

  const __m256i mant = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant);
  const __m256d big = _mm256_cmp_pd(m, splat(std::numbers::sqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, splat(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, splat(1.0)));

  // log(m) = 2 atanh(z), z = (m-1)/(m+1), |z| <= 0.1716.
  const __m256d z = _mm256_div_pd(_mm256_sub_pd(m, splat(1.0)), _mm256_add_pd(m, splat(1.0)));
  const __m256d z2 = _mm256_mul_pd(z, z);
  __m256d p = splat(2.0 / 21.0);
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 19.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 17.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 15.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 13.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 11.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 9.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 7.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 5.0));
  p = _mm256_fmadd_pd(p, z2, splat(2.0 / 3.0));
  p = _mm256_mul_pd(_mm256_mul_pd(p, z2), z);
  // log m = 2z + p; fold the exponent in with a split ln2.
  __m256d result = _mm256_fmadd_pd(e, splat(1.90821492927058770002e-10), p);
  result = _mm256_add_pd(result, _mm256_add_pd(z, z));
  return _mm256_fmadd_pd(e, splat(6.93147180369123816490e-01), result);
}

void accumulate_gaussian_avx2(std::span<double> out, double t0, double dt,
                              double center, double sigma, double weight) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const __m256d vneg_inv = splat(-inv);
  const __m256d vweight = splat(weight);
  const __m256d vdt = splat(dt);
  const __m256d vbase = splat(t0 - center);
  const __m256d lane = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const std::size_t n = out.size();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d idx = _mm256_add_pd(splat(static_cast<double>(k)), lane);
    const __m256d d = _mm256_fmadd_pd(idx, vdt, vbase);
    const __m256d e = exp_pd(_mm256_mul_pd(_mm256_mul_pd(d, d), vneg_inv));
    _mm256_storeu_pd(out.data() + k, _mm256_fmadd_pd(vweight, e, _mm256_loadu_pd(out.data() + k)));
  }
  for (; k < n; ++k) {
    const double d = t0 + static_cast<double>(k) * dt - center;
    out[k] += weight * std::exp(-d * d * inv);
  }
}

LikelihoodTerms gaussian_likelihood_avx2(const GaussianLikelihoodArgs& a) {
  const double inv_sigma = 1.0 / a.sigma;
  const double norm = a.amplitude / (std::sqrt(2.0 * std::numbers::pi) * a.sigma);
  const __m256d vinv = splat(inv_sigma);
  const __m256d vinv2 = splat(inv_sigma * inv_sigma);
  const __m256d vnorm = splat(norm);
  const __m256d vlog_norm = splat(std::log(norm));
  const __m256d vtau = splat(a.tau);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d half = splat(0.5);
  const __m256d one = splat(1.0);

  __m256d acc_v = zero, acc_d = zero, acc_h = zero, bad = zero;
  const std::size_t n = a.stamps.size();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(a.stamps.data() + j), vtau), vinv);
    const __m256d f = _mm256_loadu_pd(a.floor.data() + j);
    const __m256d u2 = _mm256_mul_pd(u, u);
    const __m256d log_domain = _mm256_cmp_pd(f, zero, _CMP_EQ_OQ);

    const __m256d g = _mm256_mul_pd(vnorm, exp_pd(_mm256_mul_pd(u2, splat(-0.5))));
    const __m256d lambda = _mm256_add_pd(g, f);
    const __m256d positive = _mm256_cmp_pd(lambda, zero, _CMP_GT_OQ);
    bad = _mm256_or_pd(bad, _mm256_andnot_pd(_mm256_or_pd(positive, log_domain), _mm256_cmp_pd(zero, zero, _CMP_EQ_OQ)));

    const __m256d r = _mm256_div_pd(g, _mm256_blendv_pd(one, lambda, positive));
    const __m256d s = _mm256_mul_pd(_mm256_mul_pd(r, u), vinv);
    const __m256d h = _mm256_fmsub_pd(_mm256_mul_pd(r, _mm256_sub_pd(u2, one)), vinv2, _mm256_mul_pd(s, s));
    const __m256d lv = log_pd(_mm256_blendv_pd(one, lambda, positive));

    const __m256d v0 = _mm256_fnmadd_pd(half, u2, vlog_norm);
    const __m256d s0 = _mm256_mul_pd(u, vinv);
    const __m256d h0 = _mm256_sub_pd(zero, vinv2);

    acc_v = _mm256_add_pd(acc_v, _mm256_blendv_pd(lv, v0, log_domain));
    acc_d = _mm256_add_pd(acc_d, _mm256_blendv_pd(s, s0, log_domain));
    acc_h = _mm256_add_pd(acc_h, _mm256_blendv_pd(h, h0, log_domain));
  }

  LikelihoodTerms out{hsum(acc_v), hsum(acc_d), hsum(acc_h)};
  if (_mm256_movemask_pd(bad) != 0) out.value = -std::numeric_limits<double>::infinity();
  if (j < n) {
    GaussianLikelihoodArgs tail = a;
    tail.stamps = a.stamps.subspan(j);
    tail.floor = a.floor.subspan(j);
    const LikelihoodTerms t = gaussian_likelihood_scalar(tail);
    out.value += t.value;
    out.first += t.first;
    out.second += t.second;
  }
  return out;
}

LikelihoodTerms tabulated_likelihood_avx2(const TabulatedLikelihoodArgs& a) {
  const std::size_t size = a.signal.size();
  const double last = static_cast<double>(size - 1);
  const __m256d vinv_dt = splat(1.0 / a.dt);
  const __m256d voffset = splat(a.shift + a.t0);
  const __m256d vlast = splat(last);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = splat(1.0);
  const __m128i max_index = _mm_set1_epi32(static_cast<int>(size) - 2);

  __m256d acc_v = zero, acc_d = zero, bad = zero;
  const std::size_t n = a.stamps.size();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d pos = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(a.stamps.data() + j), voffset), vinv_dt);
    const __m256d outside = _mm256_or_pd(_mm256_cmp_pd(pos, zero, _CMP_LE_OQ),
                                         _mm256_cmp_pd(pos, vlast, _CMP_GE_OQ));
    const __m256d clamped = _mm256_min_pd(_mm256_max_pd(pos, zero), vlast);
    const __m128i idx = _mm_min_epi32(_mm256_cvttpd_epi32(clamped), max_index);
    const __m256d w = _mm256_sub_pd(clamped, _mm256_cvtepi32_pd(idx));

    const __m256d s0 = _mm256_i32gather_pd(a.signal.data(), idx, 8);
    const __m256d s1 = _mm256_i32gather_pd(a.signal.data() + 1, idx, 8);
    const __m256d d0 = _mm256_i32gather_pd(a.derivative.data(), idx, 8);
    const __m256d d1 = _mm256_i32gather_pd(a.derivative.data() + 1, idx, 8);
    const __m256d s = _mm256_fmadd_pd(w, _mm256_sub_pd(s1, s0), s0);
    const __m256d d = _mm256_andnot_pd(outside, _mm256_fmadd_pd(w, _mm256_sub_pd(d1, d0), d0));

    const __m256d lambda = _mm256_add_pd(s, _mm256_loadu_pd(a.floor.data() + j));
    const __m256d positive = _mm256_cmp_pd(lambda, zero, _CMP_GT_OQ);
    bad = _mm256_or_pd(bad, _mm256_andnot_pd(positive, _mm256_cmp_pd(zero, zero, _CMP_EQ_OQ)));
    const __m256d safe = _mm256_blendv_pd(one, lambda, positive);
    acc_v = _mm256_add_pd(acc_v, log_pd(safe));
    acc_d = _mm256_sub_pd(acc_d, _mm256_div_pd(d, safe));
  }

  LikelihoodTerms out{hsum(acc_v), hsum(acc_d), 0.0};
  if (_mm256_movemask_pd(bad) != 0) out.value = -std::numeric_limits<double>::infinity();
  if (j < n) {
    TabulatedLikelihoodArgs tail = a;
    tail.stamps = a.stamps.subspan(j);
    tail.floor = a.floor.subspan(j);
    const LikelihoodTerms t = tabulated_likelihood_scalar(tail);
    out.value += t.value;
    out.first += t.first;
  }
  return out;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2, accumulate_gaussian_avx2,
                                 gaussian_likelihood_avx2, tabulated_likelihood_avx2};
  return table;
}

}  // namespace photon_limits::kernels
