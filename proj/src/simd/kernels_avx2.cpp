// Compiled with -mavx2 -mfma. Nothing in here may be called unless
// dispatch.cpp has confirmed CPU support.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace unlearn::simd::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* x, std::size_t n, std::size_t p, const double* v, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot_avx2(x + i * p, v, p);
}

void gram_accumulate_avx2(const double* x, const double* y, std::size_t n, std::size_t p,
                          double* gram, double* cross) {
  const bool with_cross = y != nullptr && cross != nullptr;
  std::size_t r = 0;
  for (; r + 4 <= n; r += 4) {
    const double* x0 = x + r * p;
    const double* x1 = x0 + p;
    const double* x2 = x1 + p;
    const double* x3 = x2 + p;
    for (std::size_t j = 0; j < p; ++j) {
      const __m256d a0 = _mm256_set1_pd(x0[j]);
      const __m256d a1 = _mm256_set1_pd(x1[j]);
      const __m256d a2 = _mm256_set1_pd(x2[j]);
      const __m256d a3 = _mm256_set1_pd(x3[j]);
      double* g = gram + j * p;
      std::size_t k = j;
      for (; k + 4 <= p; k += 4) {
        __m256d acc = _mm256_loadu_pd(g + k);
        acc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(x0 + k), acc);
        acc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(x1 + k), acc);
        acc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(x2 + k), acc);
        acc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(x3 + k), acc);
        _mm256_storeu_pd(g + k, acc);
      }
      for (; k < p; ++k) {
        g[k] += (x0[j] * x0[k] + x1[j] * x1[k]) + (x2[j] * x2[k] + x3[j] * x3[k]);
      }
    }
    if (with_cross) {
      const __m256d b0 = _mm256_set1_pd(y[r]);
      const __m256d b1 = _mm256_set1_pd(y[r + 1]);
      const __m256d b2 = _mm256_set1_pd(y[r + 2]);
      const __m256d b3 = _mm256_set1_pd(y[r + 3]);
      std::size_t k = 0;
      for (; k + 4 <= p; k += 4) {
        __m256d acc = _mm256_loadu_pd(cross + k);
        acc = _mm256_fmadd_pd(b0, _mm256_loadu_pd(x0 + k), acc);
        acc = _mm256_fmadd_pd(b1, _mm256_loadu_pd(x1 + k), acc);
        acc = _mm256_fmadd_pd(b2, _mm256_loadu_pd(x2 + k), acc);
        acc = _mm256_fmadd_pd(b3, _mm256_loadu_pd(x3 + k), acc);
        _mm256_storeu_pd(cross + k, acc);
      }
      for (; k < p; ++k) {
        cross[k] += (y[r] * x0[k] + y[r + 1] * x1[k]) + (y[r + 2] * x2[k] + y[r + 3] * x3[k]);
      }
    }
  }
  for (; r < n; ++r) {
    const double* xr = x + r * p;
    for (std::size_t j = 0; j < p; ++j) axpy_avx2(xr[j], xr + j, gram + j * p + j, p - j);
    if (with_cross) axpy_avx2(y[r], xr, cross, p);
  }
}

}  // namespace

const Kernels& avx2_table() noexcept {
  static const Kernels table{"avx2", &dot_avx2, &axpy_avx2, &matvec_avx2, &gram_accumulate_avx2};
  return table;
}

}  // namespace unlearn::simd::detail
