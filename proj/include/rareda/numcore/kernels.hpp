#pragma once

// Inner-loop arithmetic used by the dense matrix routines. Each kernel has a
// portable scalar reference and, where the target allows, an AVX2+FMA (x86-64)
// or NEON (aarch64) variant. The widest variant supported by the running CPU
// is chosen on first use; tests can pin a backend to compare against the
// scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace rareda::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b) noexcept;

struct KernelTable {
  Backend backend;
  /// Σ a[i]·b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha·x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  /// y[i] = alpha·x[i]
  void (*scale)(std::size_t n, double alpha, const double* x, double* y);
};

bool backend_available(Backend b) noexcept;
const KernelTable& table_for(Backend b);

/// Table used by the matrix routines. Resolved once from CPU features.
const KernelTable& active() noexcept;
Backend active_backend() noexcept;

/// Pins the active backend. Not thread-safe; intended for tests and
/// benchmarks that run before any worker threads start.
void select_backend(Backend b);
/// Restores the CPU-detected default.
void reset_backend() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(x.size(), alpha, x.data(), y.data());
}
inline void scale(double alpha, std::span<const double> x, std::span<double> y) {
  active().scale(x.size(), alpha, x.data(), y.data());
}

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(std::size_t n, double alpha, const double* x, double* y);
void scale_scalar(std::size_t n, double alpha, const double* x, double* y);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(std::size_t n, double alpha, const double* x, double* y);
void scale_avx2(std::size_t n, double alpha, const double* x, double* y);
#endif

#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(std::size_t n, double alpha, const double* x, double* y);
void scale_neon(std::size_t n, double alpha, const double* x, double* y);
#endif
}  // namespace detail

}  // namespace rareda::kernels
