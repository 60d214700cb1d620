#include "kernels_impl.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace llt::kernels::avx2 {
namespace {

constexpr double kExpFloor = -708.0;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

// Range reduction x = n ln2 + r, |r| <= ln2/2, Taylor polynomial to degree 13
// (truncation below 1e-17 relative), then scaling by 2^n through the exponent bits.
inline __m256d exp4(__m256d x) {
  const __m256d floor_mask = _mm256_cmp_pd(x, _mm256_set1_pd(kExpFloor), _CMP_GE_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(kExpFloor));
  x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double c[14] = {1.0,
                                   1.0,
                                   1.0 / 2.0,
                                   1.0 / 6.0,
                                   1.0 / 24.0,
                                   1.0 / 120.0,
                                   1.0 / 720.0,
                                   1.0 / 5040.0,
                                   1.0 / 40320.0,
                                   1.0 / 362880.0,
                                   1.0 / 3628800.0,
                                   1.0 / 39916800.0,
                                   1.0 / 479001600.0,
                                   1.0 / 6227020800.0};
  __m256d p = _mm256_set1_pd(c[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[k]));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  const __m256d scale = _mm256_castsi256_pd(n64);
  return _mm256_and_pd(_mm256_mul_pd(p, scale), floor_mask);
}

inline double exp1(double x) {
  alignas(32) double buf[4] = {x, x, x, x};
  _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
  return buf[0];
}

inline __m256d affine4(const double* base, const AffineTilt& t, std::size_t i) {
  __m256d v = _mm256_loadu_pd(base + i);
  for (int k = 0; k < t.dim; ++k)
    v = _mm256_fmadd_pd(_mm256_set1_pd(t.slopes[k]), _mm256_loadu_pd(t.coords[k].data() + i), v);
  return v;
}

inline double affine1(const double* base, const AffineTilt& t, std::size_t i) {
  double v = base[i];
  for (int k = 0; k < t.dim; ++k) v = std::fma(t.slopes[k], t.coords[k][i], v);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_affine(std::span<const double> base, const AffineTilt& t) {
  const std::size_t n = base.size();
  __m256d m = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, affine4(base.data(), t, i));
  double out = hmax(m);
  for (; i < n; ++i) out = std::max(out, affine1(base.data(), t, i));
  return out;
}

double exp_affine(std::span<const double> base, const AffineTilt& t, double shift,
                  std::span<double> out) {
  const std::size_t n = base.size();
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp4(_mm256_sub_pd(affine4(base.data(), t, i), vs));
    _mm256_storeu_pd(out.data() + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    out[i] = exp1(affine1(base.data(), t, i) - shift);
    s += out[i];
  }
  return s;
}

Moments4 weighted_moments(std::span<const double> z, std::span<const double> logv,
                          std::span<const double> w, double center, double shift) {
  const std::size_t n = z.size();
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vc = _mm256_set1_pd(center);
  __m256d a0 = _mm256_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i),
                                    exp4(_mm256_sub_pd(_mm256_loadu_pd(logv.data() + i), vs)));
    const __m256d u = _mm256_sub_pd(_mm256_loadu_pd(z.data() + i), vc);
    const __m256d eu = _mm256_mul_pd(e, u);
    const __m256d euu = _mm256_mul_pd(eu, u);
    a0 = _mm256_add_pd(a0, e);
    a1 = _mm256_add_pd(a1, eu);
    a2 = _mm256_add_pd(a2, euu);
    a3 = _mm256_fmadd_pd(euu, u, a3);
  }
  Moments4 m{hsum(a0), hsum(a1), hsum(a2), hsum(a3)};
  for (; i < n; ++i) {
    const double e = w[i] * exp1(logv[i] - shift);
    const double u = z[i] - center;
    m.m0 += e;
    m.m1 += e * u;
    m.m2 += e * u * u;
    m.m3 += e * u * u * u;
  }
  return m;
}

void vexp(std::span<const double> in, std::span<double> out) {
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out.data() + i, exp4(_mm256_loadu_pd(in.data() + i)));
  for (; i < n; ++i) out[i] = exp1(in[i]);
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{&dot, &max_affine, &exp_affine, &weighted_moments, &vexp};
  return &t;
}

}  // namespace llt::kernels::avx2

#else

namespace llt::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace llt::kernels::avx2

#endif
