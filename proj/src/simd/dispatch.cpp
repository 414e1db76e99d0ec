#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pcb/simd/kernels.hpp"

namespace pcb::simd {

namespace {

constexpr KernelTable kScalar{SimdLevel::scalar, &scalar::matvec_rows,
                              &scalar::sqrt_complement_sum};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{SimdLevel::avx2, &avx2::matvec_rows, &avx2::sqrt_complement_sum};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{SimdLevel::neon, &neon::matvec_rows, &neon::sqrt_complement_sum};
#endif

const KernelTable& select_active() {
  if (const char* forced = std::getenv("PCB_SIMD"); forced != nullptr && *forced != '\0') {
    return kernel_table(parse_simd_level(forced));
  }
  return kernel_table(best_available_level());
}

}  // namespace

std::string_view to_string(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::scalar: return "scalar";
    case SimdLevel::avx2: return "avx2";
    case SimdLevel::neon: return "neon";
  }
  return "unknown";
}

SimdLevel parse_simd_level(std::string_view name) {
  if (name == "scalar") return SimdLevel::scalar;
  if (name == "avx2") return SimdLevel::avx2;
  if (name == "neon") return SimdLevel::neon;
  throw std::invalid_argument("unknown SIMD level '" + std::string(name) + "'");
}

bool is_available(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::scalar: return true;
    case SimdLevel::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case SimdLevel::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<SimdLevel> available_levels() {
  std::vector<SimdLevel> levels;
  for (auto level : {SimdLevel::scalar, SimdLevel::avx2, SimdLevel::neon}) {
    if (is_available(level)) levels.push_back(level);
  }
  return levels;
}

SimdLevel best_available_level() noexcept {
  if (is_available(SimdLevel::avx2)) return SimdLevel::avx2;
  if (is_available(SimdLevel::neon)) return SimdLevel::neon;
  return SimdLevel::scalar;
}

const KernelTable& kernel_table(SimdLevel level) {
  if (!is_available(level)) {
    throw std::invalid_argument("SIMD level '" + std::string(to_string(level)) +
                                "' is not available on this host");
  }
  switch (level) {
#if defined(__x86_64__) || defined(_M_X64)
    case SimdLevel::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case SimdLevel::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_active();
  return table;
}

}  // namespace pcb::simd
