#include "netclear/simd/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace netclear::simd::detail {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    // vmulq + vaddq, not vfmaq, to match the scalar rounding
    float64x2_t v = vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i)));
    vst1q_f64(y + i, v);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale(double a, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void min_affine(const double* cap, const double* base, const double* shift, double* out,
                std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vaddq_f64(vld1q_f64(base + i), vld1q_f64(shift + i));
    const float64x2_t c = vld1q_f64(cap + i);
    const uint64x2_t lt = vcltq_f64(v, c);
    vst1q_f64(out + i, vbslq_f64(lt, v, c));
  }
  for (; i < n; ++i) {
    const double v = base[i] + shift[i];
    out[i] = v < cap[i] ? v : cap[i];
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double r = vaddvq_f64(s);
  for (; i < n; ++i) r += std::abs(a[i] - b[i]);
  return r;
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double r = vaddvq_f64(s);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

} // namespace

const KernelTable neon_table{Backend::neon, axpy,         scale, min_affine,
                             max_abs_diff,  sum_abs_diff, dot};

} // namespace netclear::simd::detail
