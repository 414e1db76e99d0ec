#include "pcb/kernels.hpp"

#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace pcb {

namespace {

constexpr std::uint64_t splitmix64_next(std::uint64_t& counter) noexcept {
  std::uint64_t z = (counter += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

// Runs shard tasks concurrently; inline when there is only one.
void run_shards(std::vector<std::function<void()>> tasks, ComputePool* pool) {
  if (tasks.size() == 1) {
    tasks.front()();
    return;
  }
  if (pool != nullptr) {
    pool->run_all(std::move(tasks));
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> threads;
    threads.reserve(tasks.size());
    for (auto& task : tasks) {
      threads.emplace_back([&, fn = std::move(task)] {
        try {
          fn();
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

void check_dims(const Matrix& m, const DenseVector& v) {
  if (v.size() != m.cols()) {
    throw std::invalid_argument("matvec: vector length " + std::to_string(v.size()) +
                                " does not match matrix columns " + std::to_string(m.cols()));
  }
}

}  // namespace

StreamRng::StreamRng(RngStreamSpec spec) noexcept {
  std::uint64_t counter = spec.base_seed ^ mix64(spec.stream_id);
  for (auto& word : state_) word = splitmix64_next(counter);
}

std::uint64_t StreamRng::next() noexcept {
  auto& s = state_;
  const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

DenseVector matvec_sequential(const Matrix& m, const DenseVector& v) {
  check_dims(m, v);
  std::vector<double> out(m.rows());
  simd::active_kernels().matvec_rows(m.data().data(), m.rows(), m.cols(), v.data().data(),
                                     out.data());
  return DenseVector(std::move(out));
}

DenseVector matvec_parallel(const Matrix& m, const DenseVector& v, std::size_t threads,
                            ComputePool* pool) {
  check_dims(m, v);
  if (threads == 0) throw std::invalid_argument("matvec: thread count must be >= 1");
  const auto plan = partition(m.rows(), threads);
  const auto& kernels = simd::active_kernels();
  std::vector<double> out(m.rows());
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < plan.shard_count(); ++k) {
    const auto range = shard_row_range(plan, k);
    if (range.count == 0) continue;
    tasks.emplace_back([&, range] {
      kernels.matvec_rows(m.row_block(range.start, range.count).data(), range.count, m.cols(),
                          v.data().data(), out.data() + range.start);
    });
  }
  run_shards(std::move(tasks), pool);
  return DenseVector(std::move(out));
}

PiEstimate mc_pi_from_uniforms(std::span<const double> uniforms) {
  if (uniforms.empty()) throw std::invalid_argument("mc_pi: samples must be >= 1");
  const double sum =
      simd::active_kernels().sqrt_complement_sum(uniforms.data(), uniforms.size(), 0.0);
  return {4.0 / static_cast<double>(uniforms.size()) * sum, uniforms.size()};
}

PiEstimate mc_pi_sequential(std::uint64_t samples, RngStreamSpec stream) {
  StreamRng rng(stream);
  return mc_pi_sequential(samples, rng);
}

PiEstimate mc_pi_parallel(std::uint64_t samples, std::size_t threads, RngStreamSpec base,
                          ComputePool* pool) {
  if (samples == 0) throw std::invalid_argument("mc_pi: samples must be >= 1");
  const auto plan = partition(samples, threads);
  std::vector<PartialEstimate> parts(plan.shard_count());
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < plan.shard_count(); ++k) {
    const auto share = plan.shares[k];
    if (share == 0) continue;
    tasks.emplace_back([&parts, k, share, base] {
      const auto estimate = mc_pi_sequential(share, RngStreamSpec{base.base_seed, base.stream_id + k});
      parts[k] = {estimate.value, estimate.samples_used};
    });
  }
  run_shards(std::move(tasks), pool);
  // Leading shards hold the nonzero shares.
  std::erase_if(parts, [](const PartialEstimate& p) { return p.samples == 0; });
  return combine_estimates(parts);
}

PiEstimate combine_estimates(std::span<const PartialEstimate> parts) {
  if (parts.empty()) throw std::invalid_argument("combine_estimates: no partial estimates");
  for (const auto& p : parts) {
    if (p.samples == 0) throw std::invalid_argument("combine_estimates: part with zero samples");
  }
  if (parts.size() == 1) return {parts.front().value, parts.front().samples};
  double weighted = 0.0;
  std::uint64_t total = 0;
  for (const auto& p : parts) {
    weighted += p.value * static_cast<double>(p.samples);
    total += p.samples;
  }
  return {weighted / static_cast<double>(total), total};
}

}  // namespace pcb
