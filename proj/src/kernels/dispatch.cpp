#include <atomic>
#include <cstdlib>
#include <string_view>

#include "fourn/kernels/kernels.hpp"

namespace fourn::kernels {

#ifdef FOURN_HAVE_AVX2_KERNELS
const KernelTable& avx2_table_unchecked() noexcept;
#endif

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(FOURN_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* resolve() noexcept {
  const char* forced = std::getenv("FOURN_KERNELS");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{resolve()};
  return current;
}

}  // namespace

const KernelTable* avx2_table() noexcept {
#ifdef FOURN_HAVE_AVX2_KERNELS
  static const bool ok = cpu_has_avx2_fma();
  return ok ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool use(std::string_view name) noexcept {
  const KernelTable* t = nullptr;
  if (name == "scalar")
    t = &scalar_table();
  else if (name == "avx2")
    t = avx2_table();
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace fourn::kernels
