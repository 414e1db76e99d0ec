#pragma once

// Inner loops of the two compute tasks, in a scalar reference form and
// SIMD variants selected at runtime. Every variant produces results that are
// bit-identical to the scalar reference:
//  - matvec lanes run over rows, so each row's dot product is still
//    accumulated left to right with a separately rounded multiply and add;
//  - Monte Carlo terms sqrt(1 - u*u) are computed lane-wise (sub, mul and
//    sqrt are correctly rounded) and then summed sequentially.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pcb::simd {

enum class SimdLevel { scalar, avx2, neon };

std::string_view to_string(SimdLevel level) noexcept;
/// Accepts "scalar", "avx2", "neon"; throws std::invalid_argument otherwise.
SimdLevel parse_simd_level(std::string_view name);

/// out[i] = sum_j m[i*cols + j] * v[j] for i in [0, rows), accumulated in
/// increasing j.
using MatvecRowsFn = void (*)(const double* m, std::size_t rows, std::size_t cols,
                              const double* v, double* out);
/// Returns acc + t_0 + t_1 + ... (left to right) with t_i = sqrt(1 - u_i^2).
using SqrtComplementSumFn = double (*)(const double* u, std::size_t n, double acc);

struct KernelTable {
  SimdLevel level;
  MatvecRowsFn matvec_rows;
  SqrtComplementSumFn sqrt_complement_sum;
};

/// Compiled in and supported by the running CPU.
bool is_available(SimdLevel level) noexcept;
std::vector<SimdLevel> available_levels();
SimdLevel best_available_level() noexcept;

/// Throws std::invalid_argument if `level` is not available on this host.
const KernelTable& kernel_table(SimdLevel level);

/// Table used by the kernels module. Chosen once per process: the
/// PCB_SIMD environment variable, if set, overrides the best available level.
const KernelTable& active_kernels();

namespace scalar {
void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
double sqrt_complement_sum(const double* u, std::size_t n, double acc);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
double sqrt_complement_sum(const double* u, std::size_t n, double acc);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void matvec_rows(const double* m, std::size_t rows, std::size_t cols, const double* v,
                 double* out);
double sqrt_complement_sum(const double* u, std::size_t n, double acc);
}  // namespace neon
#endif

}  // namespace pcb::simd
