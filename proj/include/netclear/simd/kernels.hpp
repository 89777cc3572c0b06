#pragma once

// Data-parallel inner loops shared by the Picard clearing iteration and the
// simplex pivot. Every backend implements the same table; the active one is
// picked once at startup from the CPU features and can be overridden with
// NETCLEAR_SIMD=scalar|avx2|neon or set_backend().
//
// axpy, min_affine and the max/min reductions are exact elementwise
// operations (no FMA contraction), so all backends agree bit for bit on them.
// dot/sum_abs_diff reassociate the sum and agree only to rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace netclear::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);
  // out[i] = min(cap[i], base[i] + shift[i])
  void (*min_affine)(const double* cap, const double* base, const double* shift, double* out,
                     std::size_t n);
  // max_i |a[i] - b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  // sum_i |a[i] - b[i]|
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

std::string_view backend_name(Backend b) noexcept;

/// Backends compiled into this binary and supported by the running CPU.
std::vector<Backend> available_backends();

const KernelTable& table_for(Backend b);
const KernelTable& active();

/// Switches the process-wide backend. Throws if it is not available.
void set_backend(Backend b);

// Convenience wrappers over the active table.
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }
inline void min_affine(std::span<const double> cap, std::span<const double> base,
                       std::span<const double> shift, std::span<double> out) {
  active().min_affine(cap.data(), base.data(), shift.data(), out.data(), out.size());
}
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}
inline double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().sum_abs_diff(a.data(), b.data(), a.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(NETCLEAR_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(NETCLEAR_HAVE_NEON)
extern const KernelTable neon_table;
#endif
} // namespace detail

} // namespace netclear::simd
