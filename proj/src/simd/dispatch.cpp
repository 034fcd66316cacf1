#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace unlearn::simd {

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(UNLEARN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& select() noexcept {
  if (const char* forced = std::getenv("ULS_SIMD")) {
    if (std::string_view(forced) == "scalar") return detail::scalar_table();
  }
  if (const Kernels* k = avx2_kernels()) return *k;
  return detail::scalar_table();
}

}  // namespace

const Kernels& scalar_kernels() noexcept { return detail::scalar_table(); }

const Kernels* avx2_kernels() noexcept {
#if defined(UNLEARN_HAVE_AVX2)
  static const bool supported = cpu_has_avx2_fma();
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active() noexcept {
  static const Kernels& table = select();
  return table;
}

}  // namespace unlearn::simd
