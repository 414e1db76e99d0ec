#include <cmath>

#include "pcb/simd/kernels.hpp"

namespace pcb::simd::scalar {

void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

double sqrt_complement_sum(const double* u, std::size_t n, double acc) {
  for (std::size_t i = 0; i < n; ++i) acc += std::sqrt(1.0 - u[i] * u[i]);
  return acc;
}

}  // namespace pcb::simd::scalar
