#include "kernels_impl.hpp"

namespace unlearn::simd::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* x, std::size_t n, std::size_t p, const double* v, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot_scalar(x + i * p, v, p);
}

void gram_accumulate_scalar(const double* x, const double* y, std::size_t n, std::size_t p,
                            double* gram, double* cross) {
  const bool with_cross = y != nullptr && cross != nullptr;
  std::size_t r = 0;
  // Four rows per sweep so each gram entry is loaded and stored once per block.
  for (; r + 4 <= n; r += 4) {
    const double* x0 = x + r * p;
    const double* x1 = x0 + p;
    const double* x2 = x1 + p;
    const double* x3 = x2 + p;
    for (std::size_t j = 0; j < p; ++j) {
      const double a0 = x0[j], a1 = x1[j], a2 = x2[j], a3 = x3[j];
      double* g = gram + j * p;
      for (std::size_t k = j; k < p; ++k) {
        g[k] += (a0 * x0[k] + a1 * x1[k]) + (a2 * x2[k] + a3 * x3[k]);
      }
    }
    if (with_cross) {
      const double b0 = y[r], b1 = y[r + 1], b2 = y[r + 2], b3 = y[r + 3];
      for (std::size_t k = 0; k < p; ++k) {
        cross[k] += (b0 * x0[k] + b1 * x1[k]) + (b2 * x2[k] + b3 * x3[k]);
      }
    }
  }
  for (; r < n; ++r) {
    const double* xr = x + r * p;
    for (std::size_t j = 0; j < p; ++j) {
      const double a = xr[j];
      double* g = gram + j * p;
      for (std::size_t k = j; k < p; ++k) g[k] += a * xr[k];
    }
    if (with_cross) axpy_scalar(y[r], xr, cross, p);
  }
}

}  // namespace

const Kernels& scalar_table() noexcept {
  static const Kernels table{"scalar", &dot_scalar, &axpy_scalar, &matvec_scalar,
                             &gram_accumulate_scalar};
  return table;
}

}  // namespace unlearn::simd::detail
