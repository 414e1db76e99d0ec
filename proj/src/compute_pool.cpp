#include "pcb/compute_pool.hpp"

#include <exception>
#include <latch>

namespace pcb {

ComputePool::ComputePool(std::size_t initial_threads) { ensure_threads(initial_threads); }

ComputePool::~ComputePool() {
  for (auto& t : threads_) t.request_stop();
  ready_.notify_all();
  // jthread destructors join.
}

void ComputePool::ensure_threads(std::size_t count) {
  std::lock_guard lock(mutex_);
  while (threads_.size() < count) {
    threads_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
  }
}

std::size_t ComputePool::thread_count() const {
  std::lock_guard lock(mutex_);
  return threads_.size();
}

void ComputePool::run_all(std::vector<std::function<void()>> tasks) {
  if (tasks.empty()) return;
  ensure_threads(tasks.size());

  std::latch done(static_cast<std::ptrdiff_t>(tasks.size()));
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::lock_guard lock(mutex_);
    for (auto& task : tasks) {
      queue_.emplace_back([&done, &error_mutex, &first_error, fn = std::move(task)] {
        try {
          fn();
        } catch (...) {
          std::lock_guard guard(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
        done.count_down();
      });
    }
  }
  ready_.notify_all();
  done.wait();
  if (first_error) std::rethrow_exception(first_error);
}

void ComputePool::worker_loop(std::stop_token stop) {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(mutex_);
      if (!ready_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

}  // namespace pcb
