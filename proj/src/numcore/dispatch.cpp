#include <atomic>

#include "rareda/numcore/kernels.hpp"
#include "rareda/numcore/matrix.hpp"

namespace rareda::kernels {
namespace {

constexpr KernelTable kScalar{Backend::scalar, detail::dot_scalar, detail::axpy_scalar,
                              detail::scale_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{Backend::avx2, detail::dot_avx2, detail::axpy_avx2,
                            detail::scale_avx2};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{Backend::neon, detail::dot_neon, detail::axpy_neon,
                            detail::scale_neon};
#endif

const KernelTable* detect() noexcept {
#if defined(__aarch64__)
  return &kNeon;
#elif (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
  return &kScalar;
#else
  return &kScalar;
#endif
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Backend b) {
  if (!backend_available(b)) {
    throw Error("kernel backend '" + std::string(backend_name(b)) +
                "' is not available on this CPU");
  }
  switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Backend::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() noexcept {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = detect();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Backend active_backend() noexcept { return active().backend; }

void select_backend(Backend b) { g_active.store(&table_for(b), std::memory_order_release); }

void reset_backend() noexcept { g_active.store(detect(), std::memory_order_release); }

}  // namespace rareda::kernels
