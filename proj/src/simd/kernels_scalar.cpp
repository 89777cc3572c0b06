#include "netclear/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace netclear::simd::detail {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void min_affine(const double* cap, const double* base, const double* shift, double* out,
                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = base[i] + shift[i];
    out[i] = v < cap[i] ? v : cap[i];
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

} // namespace

const KernelTable scalar_table{Backend::scalar, axpy,         scale, min_affine,
                               max_abs_diff,    sum_abs_diff, dot};

} // namespace netclear::simd::detail
