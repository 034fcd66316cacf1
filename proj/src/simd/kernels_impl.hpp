#pragma once

#include "unlearn/simd.hpp"

namespace unlearn::simd::detail {

const Kernels& scalar_table() noexcept;

#if defined(UNLEARN_HAVE_AVX2)
const Kernels& avx2_table() noexcept;
#endif

}  // namespace unlearn::simd::detail
