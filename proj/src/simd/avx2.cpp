// Compiled with -mavx2. Only reached after a runtime CPU check.

#include <immintrin.h>

#include "pcb/simd/kernels.hpp"

namespace pcb::simd::avx2 {

namespace {

// Columns j..j+3 of four consecutive rows, one column per register.
inline void load_transposed(const double* r0, const double* r1, const double* r2,
                            const double* r3, std::size_t j, __m256d& c0, __m256d& c1,
                            __m256d& c2, __m256d& c3) {
  const __m256d a0 = _mm256_loadu_pd(r0 + j);
  const __m256d a1 = _mm256_loadu_pd(r1 + j);
  const __m256d a2 = _mm256_loadu_pd(r2 + j);
  const __m256d a3 = _mm256_loadu_pd(r3 + j);
  const __m256d t0 = _mm256_unpacklo_pd(a0, a1);
  const __m256d t1 = _mm256_unpackhi_pd(a0, a1);
  const __m256d t2 = _mm256_unpacklo_pd(a2, a3);
  const __m256d t3 = _mm256_unpackhi_pd(a2, a3);
  c0 = _mm256_permute2f128_pd(t0, t2, 0x20);
  c1 = _mm256_permute2f128_pd(t1, t3, 0x20);
  c2 = _mm256_permute2f128_pd(t0, t2, 0x31);
  c3 = _mm256_permute2f128_pd(t1, t3, 0x31);
}

inline __m256d mul_add(__m256d acc, __m256d column, double vj) {
  return _mm256_add_pd(acc, _mm256_mul_pd(column, _mm256_set1_pd(vj)));
}

}  // namespace

void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* r0 = m + i * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d c0, c1, c2, c3;
      load_transposed(r0, r1, r2, r3, j, c0, c1, c2, c3);
      acc = mul_add(acc, c0, v[j]);
      acc = mul_add(acc, c1, v[j + 1]);
      acc = mul_add(acc, c2, v[j + 2]);
      acc = mul_add(acc, c3, v[j + 3]);
    }
    for (; j < cols; ++j) {
      acc = mul_add(acc, _mm256_set_pd(r3[j], r2[j], r1[j], r0[j]), v[j]);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < rows) scalar::matvec_rows(m + i * cols, rows - i, cols, v, out + i);
}

double sqrt_complement_sum(const double* u, std::size_t n, double acc) {
  const __m256d one = _mm256_set1_pd(1.0);
  alignas(32) double terms[4];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(u + i);
    _mm256_store_pd(terms, _mm256_sqrt_pd(_mm256_sub_pd(one, _mm256_mul_pd(x, x))));
    acc += terms[0];
    acc += terms[1];
    acc += terms[2];
    acc += terms[3];
  }
  return scalar::sqrt_complement_sum(u + i, n - i, acc);
}

}  // namespace pcb::simd::avx2
