// AVX2+FMA variants. Functions carry target attributes instead of compiling
// the translation unit with -mavx2, so no AVX2 code leaks into inline
// functions shared with the scalar path.

#include "kernels_impl.hpp"

#if defined(MKV_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>

#define MKV_AVX2 __attribute__((target("avx2,fma")))

namespace mkv::kernels::detail {
namespace {

MKV_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

MKV_AVX2 double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + j));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + j + 4));
  }
  for (; j + 4 <= n; j += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + j));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; j < n; ++j) s += x[j];
  return s;
}

MKV_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 4), _mm256_loadu_pd(y + j + 4), a1);
  }
  for (; j + 4 <= n; j += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), a0);
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; j < n; ++j) s += x[j] * y[j];
  return s;
}

MKV_AVX2 double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; j < n; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

MKV_AVX2 void euler_step_avx2(double* out, const double* x, const double* drift, const double* dw,
                              double dt, double sigma, std::size_t n) {
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vs = _mm256_set1_pd(sigma);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d r = _mm256_fmadd_pd(_mm256_loadu_pd(drift + j), vdt, _mm256_loadu_pd(x + j));
    r = _mm256_fmadd_pd(_mm256_loadu_pd(dw + j), vs, r);
    _mm256_storeu_pd(out + j, r);
  }
  for (; j < n; ++j) out[j] = x[j] + drift[j] * dt + sigma * dw[j];
}

MKV_AVX2 void blend_avx2(double* out, const double* a, const double* b, double wa, double wb,
                         std::size_t n) {
  const __m256d va = _mm256_set1_pd(wa);
  const __m256d vb = _mm256_set1_pd(wb);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d r = _mm256_fmadd_pd(_mm256_loadu_pd(b + j), vb,
                                      _mm256_mul_pd(_mm256_loadu_pd(a + j), va));
    _mm256_storeu_pd(out + j, r);
  }
  for (; j < n; ++j) out[j] = wa * a[j] + wb * b[j];
}

MKV_AVX2 void standardize_avx2(double* out, const double* x, double shift, double scale,
                               std::size_t n) {
  const __m256d vshift = _mm256_set1_pd(shift);
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(out + j, _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + j), vshift), vscale));
  }
  for (; j < n; ++j) out[j] = (x[j] - shift) * scale;
}

MKV_AVX2 void joint_moments_avx2(const double* u, const double* w, const double* v, std::size_t n,
                                 std::size_t degree, JointMoments& m) {
  const std::size_t n_pow = 2 * degree + 1;
  __m256d s0[kMaxPowers], s1[kMaxPowers], s2[kMaxPowers];
  __m256d t0[kMaxDegree + 1], t1[kMaxDegree + 1];
  for (std::size_t k = 0; k < kMaxPowers; ++k) {
    s0[k] = s1[k] = s2[k] = _mm256_setzero_pd();
  }
  for (std::size_t k = 0; k <= kMaxDegree; ++k) t0[k] = t1[k] = _mm256_setzero_pd();

  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vu = _mm256_loadu_pd(u + j);
    const __m256d vw = _mm256_loadu_pd(w + j);
    const __m256d vv = _mm256_loadu_pd(v + j);
    const __m256d ww = _mm256_mul_pd(vw, vw);
    const __m256d vw_ = _mm256_mul_pd(vv, vw);
    __m256d p = _mm256_set1_pd(1.0);
    for (std::size_t k = 0; k < n_pow; ++k) {
      s0[k] = _mm256_add_pd(s0[k], p);
      s1[k] = _mm256_fmadd_pd(p, vw, s1[k]);
      s2[k] = _mm256_fmadd_pd(p, ww, s2[k]);
      if (k <= degree) {
        t0[k] = _mm256_fmadd_pd(p, vv, t0[k]);
        t1[k] = _mm256_fmadd_pd(p, vw_, t1[k]);
      }
      p = _mm256_mul_pd(p, vu);
    }
  }

  JointMoments tail{};
  joint_moments_scalar(u + j, w + j, v + j, n - j, degree, tail);
  std::fill(std::begin(m.s0), std::end(m.s0), 0.0);
  std::fill(std::begin(m.s1), std::end(m.s1), 0.0);
  std::fill(std::begin(m.s2), std::end(m.s2), 0.0);
  std::fill(std::begin(m.t0), std::end(m.t0), 0.0);
  std::fill(std::begin(m.t1), std::end(m.t1), 0.0);
  for (std::size_t k = 0; k < n_pow; ++k) {
    m.s0[k] = hsum(s0[k]) + tail.s0[k];
    m.s1[k] = hsum(s1[k]) + tail.s1[k];
    m.s2[k] = hsum(s2[k]) + tail.s2[k];
  }
  for (std::size_t k = 0; k <= degree; ++k) {
    m.t0[k] = hsum(t0[k]) + tail.t0[k];
    m.t1[k] = hsum(t1[k]) + tail.t1[k];
  }
}

MKV_AVX2 void polyval_avx2(double* out, const double* c, std::size_t n_coeffs, const double* u,
                           std::size_t n) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vu = _mm256_loadu_pd(u + j);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = n_coeffs; k-- > 0;) acc = _mm256_fmadd_pd(acc, vu, _mm256_set1_pd(c[k]));
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = n_coeffs; k-- > 0;) acc = acc * u[j] + c[k];
    out[j] = acc;
  }
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::avx2,        "avx2",          sum_avx2,           dot_avx2,
    sum_sq_diff_avx2, euler_step_avx2, blend_avx2,         standardize_avx2,
    joint_moments_avx2, polyval_avx2,
};

}  // namespace mkv::kernels::detail

#endif  // MKV_HAVE_AVX2
