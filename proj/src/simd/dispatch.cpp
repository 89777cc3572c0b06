#include "netclear/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace netclear::simd {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
  case Backend::scalar:
    return true;
  case Backend::avx2:
#if defined(NETCLEAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
  case Backend::neon:
#if defined(NETCLEAR_HAVE_NEON)
    return true;
#else
    return false;
#endif
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("NETCLEAR_SIMD")) {
    const std::string want(env);
    for (Backend b : available_backends())
      if (backend_name(b) == want) return &table_for(b);
  }
  auto avail = available_backends();
  return &table_for(avail.back());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

} // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
  case Backend::scalar:
    return "scalar";
  case Backend::avx2:
    return "avx2";
  case Backend::neon:
    return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (cpu_supports(Backend::avx2)) out.push_back(Backend::avx2);
  if (cpu_supports(Backend::neon)) out.push_back(Backend::neon);
  return out;
}

const KernelTable& table_for(Backend b) {
  if (!cpu_supports(b))
    throw std::invalid_argument("simd backend not available: " + std::string(backend_name(b)));
  switch (b) {
#if defined(NETCLEAR_HAVE_AVX2)
  case Backend::avx2:
    return detail::avx2_table;
#endif
#if defined(NETCLEAR_HAVE_NEON)
  case Backend::neon:
    return detail::neon_table;
#endif
  default:
    return detail::scalar_table;
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend b) { current().store(&table_for(b), std::memory_order_release); }

} // namespace netclear::simd
