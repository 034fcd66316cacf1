#pragma once

// Inner-loop kernels for dense double-precision arithmetic.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2/FMA variant is compiled into a separate translation unit and selected
// at runtime when the CPU reports support. The two are equivalence-tested;
// they are not bit-identical because FMA contraction and lane-wise partial
// sums change rounding.
//
// The active table is fixed on first use. Setting ULS_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace unlearn::simd {

struct Kernels {
  std::string_view name;

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// out[i] = <row i of x, v> for row-major x (n x p).
  void (*matvec)(const double* x, std::size_t n, std::size_t p, const double* v, double* out);

  /// Adds sum_r x_r x_r^T into the upper triangle (k >= j) of the row-major
  /// p x p buffer `gram`, and sum_r y_r x_r into `cross` when both y and cross
  /// are non-null. x is row-major n x p.
  void (*gram_accumulate)(const double* x, const double* y, std::size_t n, std::size_t p,
                          double* gram, double* cross);
};

const Kernels& scalar_kernels() noexcept;

/// nullptr when the variant was not compiled in or the CPU lacks AVX2+FMA.
const Kernels* avx2_kernels() noexcept;

const Kernels& active() noexcept;

}  // namespace unlearn::simd
