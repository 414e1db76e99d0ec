#pragma once

// Sequential and multithreaded versions of the two compute tasks:
// row-partitioned matrix-vector multiply and average-value Monte Carlo
// estimation of pi, plus combination of per-shard estimates.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pcb/compute_pool.hpp"
#include "pcb/core.hpp"
#include "pcb/simd/kernels.hpp"

namespace pcb {

/// Stream ids are worker_index * kWorkerStreamStride + thread_index.
inline constexpr std::uint64_t kWorkerStreamStride = std::uint64_t{1} << 16;

struct RngStreamSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
  friend bool operator==(const RngStreamSpec&, const RngStreamSpec&) = default;
};

constexpr RngStreamSpec stream_for(std::uint64_t base_seed, std::uint64_t worker_index,
                                   std::uint64_t thread_index) {
  return {base_seed, worker_index * kWorkerStreamStride + thread_index};
}

/// xoshiro256** 1.0 whose state is filled by four SplitMix64 outputs, the
/// SplitMix64 counter starting at base_seed XOR mix64(stream_id), where mix64
/// is the SplitMix64 output function. Uniform doubles take the top 53 bits:
/// (x >> 11) * 2^-53, so they lie in [0, 1).
class StreamRng {
 public:
  explicit StreamRng(RngStreamSpec spec) noexcept;

  std::uint64_t next() noexcept;
  double next_uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  void fill_uniform(std::span<double> out) noexcept {
    for (auto& u : out) u = next_uniform();
  }

 private:
  std::array<std::uint64_t, 4> state_;
};

/// Anything that can produce uniform [0,1) doubles in bulk.
template <class S>
concept UniformSource = requires(S& source, std::span<double> out) {
  source.fill_uniform(out);
};

struct PartialEstimate {
  double value = 0.0;
  std::uint64_t samples = 0;
};

DenseVector matvec_sequential(const Matrix& m, const DenseVector& v);

/// Rows are split with partition(); each shard is computed on its own thread
/// (pool threads if a pool is given). Bit-identical to matvec_sequential.
DenseVector matvec_parallel(const Matrix& m, const DenseVector& v, std::size_t threads,
                            ComputePool* pool = nullptr);

/// (4/n) * sum sqrt(1 - u_i^2) over a fixed list of uniforms.
PiEstimate mc_pi_from_uniforms(std::span<const double> uniforms);

namespace detail {
inline constexpr std::size_t kUniformBlock = 512;
}  // namespace detail

template <UniformSource Source>
PiEstimate mc_pi_sequential(std::uint64_t samples, Source& source) {
  if (samples == 0) throw std::invalid_argument("mc_pi: samples must be >= 1");
  const auto& kernels = simd::active_kernels();
  std::array<double, detail::kUniformBlock> block;
  double sum = 0.0;
  std::uint64_t remaining = samples;
  while (remaining > 0) {
    const auto n = static_cast<std::size_t>(
        std::min<std::uint64_t>(remaining, detail::kUniformBlock));
    source.fill_uniform(std::span<double>(block.data(), n));
    sum = kernels.sqrt_complement_sum(block.data(), n, sum);
    remaining -= n;
  }
  return {4.0 / static_cast<double>(samples) * sum, samples};
}

PiEstimate mc_pi_sequential(std::uint64_t samples, RngStreamSpec stream);

/// Shard k of partition(samples, threads) draws from stream
/// {base.base_seed, base.stream_id + k}. Empty shards are skipped.
PiEstimate mc_pi_parallel(std::uint64_t samples, std::size_t threads, RngStreamSpec base,
                          ComputePool* pool = nullptr);

/// Sample-count weighted mean; a single part is returned unchanged.
PiEstimate combine_estimates(std::span<const PartialEstimate> parts);

}  // namespace pcb
