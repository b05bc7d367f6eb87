#include "timewalk/kernels.hpp"

#if defined(TW_HAVE_AVX2)

#include <immintrin.h>

#include "kernel_elements.hpp"

namespace tw::kernels::detail {

namespace {

const __m256i kMagicBits = _mm256_set1_epi64x(kRoundMagicBits);
const __m256d kMagic = _mm256_set1_pd(kRoundMagic);

// int64 -> double, exact for |v| < 2^51.
inline __m256d i64_to_f64(__m256i v) {
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(v, kMagicBits)),
                       kMagic);
}

// double -> nearest int64, ties to even, |d| < 2^51.
inline __m256i f64_round_to_i64(__m256d d) {
  return _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(d, kMagic)),
                          kMagicBits);
}

} // namespace

void correct_tags_avx2(const int64_t* t, size_t n, const DelayLut& lut,
                       int64_t* out) {
  if (n == 0) return;
  LutView lv(lut);
  out[0] = t[0];

  const __m256d origin = _mm256_set1_pd(lv.origin);
  const __m256d inv_step = _mm256_set1_pd(lv.inv_step);
  const __m256d last_node = _mm256_set1_pd(lv.last_node);
  const __m256d last_seg = _mm256_set1_pd(lv.last_seg);
  const __m256d zero = _mm256_setzero_pd();
  const __m128i one32 = _mm_set1_epi32(1);

  size_t i = 1;
  for (; i + 4 <= n; i += 4) {
    __m256i tv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    __m256i pv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i - 1));
    __m256d dt = i64_to_f64(_mm256_sub_epi64(tv, pv));

    __m256d u = _mm256_mul_pd(_mm256_sub_pd(dt, origin), inv_step);
    __m256d uc = _mm256_min_pd(_mm256_max_pd(u, zero), last_node);
    __m256d i0 = _mm256_min_pd(_mm256_floor_pd(uc), last_seg);
    __m256d frac = _mm256_sub_pd(uc, i0);

    __m128i k = _mm256_cvttpd_epi32(i0);
    __m256d v0 = _mm256_i32gather_pd(lv.nodes, k, 8);
    __m256d v1 = _mm256_i32gather_pd(lv.nodes, _mm_add_epi32(k, one32), 8);
    __m256d d = _mm256_add_pd(v0, _mm256_mul_pd(frac, _mm256_sub_pd(v1, v0)));

    __m256i corr = f64_round_to_i64(d);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i),
                        _mm256_sub_epi64(tv, corr));
  }
  for (; i < n; ++i) {
    out[i] = correct_element(t[i], t[i - 1], lv);
  }
}

void clock_residuals_avx2(const int64_t* t, size_t n, double phase_ps,
                          double period_ps, int64_t* tick, double* resid) {
  double inv = 1.0 / period_ps;
  const __m256d phase = _mm256_set1_pd(phase_ps);
  const __m256d period = _mm256_set1_pd(period_ps);
  const __m256d inv_period = _mm256_set1_pd(inv);
  const __m256d half = _mm256_set1_pd(0.5);

  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i tv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    __m256d td = i64_to_f64(tv);
    __m256d x = _mm256_mul_pd(_mm256_sub_pd(td, phase), inv_period);
    __m256d nd = _mm256_ceil_pd(_mm256_sub_pd(x, half));
    __m256d pred = _mm256_add_pd(phase, _mm256_mul_pd(nd, period));
    _mm256_storeu_pd(resid + i, _mm256_sub_pd(td, pred));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(tick + i),
                        f64_round_to_i64(nd));
  }
  for (; i < n; ++i) {
    residual_element(t[i], phase_ps, inv, period_ps, &tick[i], &resid[i]);
  }
}

void bin_indices_avx2(const double* x, size_t n, double origin, double width,
                      int32_t nbins, int32_t* idx) {
  double inv = 1.0 / width;
  double nb1d = static_cast<double>(nbins - 1);
  const __m256d origin_v = _mm256_set1_pd(origin);
  const __m256d inv_width = _mm256_set1_pd(inv);
  const __m256d nb1 = _mm256_set1_pd(nb1d);
  const __m256d zero = _mm256_setzero_pd();

  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, origin_v), inv_width);
    __m256d c = _mm256_min_pd(_mm256_max_pd(_mm256_floor_pd(u), zero), nb1);
    __m128i k = _mm256_cvttpd_epi32(c);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(idx + i), k);
  }
  for (; i < n; ++i) {
    idx[i] = bin_index_element(x[i], origin, inv, nb1d);
  }
}

} // namespace tw::kernels::detail

#endif // TW_HAVE_AVX2
