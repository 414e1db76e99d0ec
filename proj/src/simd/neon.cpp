// AArch64 only; Advanced SIMD is part of the base ISA there.

#include <arm_neon.h>

#include "pcb/simd/kernels.hpp"

namespace pcb::simd::neon {

void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out) {
  std::size_t i = 0;
  for (; i + 2 <= rows; i += 2) {
    const double* r0 = m + i * cols;
    const double* r1 = r0 + cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      const float64x2_t a0 = vld1q_f64(r0 + j);
      const float64x2_t a1 = vld1q_f64(r1 + j);
      // {r0[j], r1[j]} and {r0[j+1], r1[j+1]}
      const float64x2_t c0 = vzip1q_f64(a0, a1);
      const float64x2_t c1 = vzip2q_f64(a0, a1);
      acc = vaddq_f64(acc, vmulq_f64(c0, vdupq_n_f64(v[j])));
      acc = vaddq_f64(acc, vmulq_f64(c1, vdupq_n_f64(v[j + 1])));
    }
    for (; j < cols; ++j) {
      const double pair[2] = {r0[j], r1[j]};
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(pair), vdupq_n_f64(v[j])));
    }
    vst1q_f64(out + i, acc);
  }
  if (i < rows) scalar::matvec_rows(m + i * cols, rows - i, cols, v, out + i);
}

double sqrt_complement_sum(const double* u, std::size_t n, double acc) {
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(u + i);
    const float64x2_t t = vsqrtq_f64(vsubq_f64(one, vmulq_f64(x, x)));
    acc += vgetq_lane_f64(t, 0);
    acc += vgetq_lane_f64(t, 1);
  }
  return scalar::sqrt_complement_sum(u + i, n - i, acc);
}

}  // namespace pcb::simd::neon
