#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pcb {

/// Reusable pool of compute threads. Grows on demand and never shrinks, so
/// threads created for one request are reused by later ones.
class ComputePool {
 public:
  explicit ComputePool(std::size_t initial_threads = 0);
  ~ComputePool();

  ComputePool(const ComputePool&) = delete;
  ComputePool& operator=(const ComputePool&) = delete;

  void ensure_threads(std::size_t count);
  std::size_t thread_count() const;

  /// Runs every task concurrently (growing the pool to tasks.size() if
  /// needed) and blocks until all have finished. The first exception thrown by
  /// a task is rethrown after the batch completes. Safe to call from several
  /// threads at once; must not be called from inside a pool task.
  void run_all(std::vector<std::function<void()>> tasks);

 private:
  void worker_loop(std::stop_token stop);

  mutable std::mutex mutex_;
  std::condition_variable_any ready_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::jthread> threads_;
};

}  // namespace pcb
