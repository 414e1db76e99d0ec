#pragma once

// Worker daemon: listens for protocol frames and executes kernel requests on
// a reusable compute pool.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <list>
#include <memory>
#include <mutex>
#include <stop_token>
#include <thread>

#include "pcb/compute_pool.hpp"
#include "pcb/core.hpp"
#include "pcb/net.hpp"
#include "pcb/protocol.hpp"

namespace pcb {

struct WorkerConfig {
  Endpoint listen{"0.0.0.0", 0};
  std::size_t max_threads = 4;
  std::size_t warmup_threads = 4;
  std::uint32_t max_payload = protocol::kMaxPayload;
};

class Worker {
 public:
  /// Binds the listening socket; bind failures surface here as net::NetError.
  /// Throws std::invalid_argument if max_threads == 0.
  explicit Worker(WorkerConfig config, std::ostream* log = nullptr);
  ~Worker();

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  std::uint16_t port() const noexcept { return listener_.port(); }
  const WorkerConfig& config() const noexcept { return config_; }

  /// One small matvec_parallel and one small mc_pi_parallel with
  /// warmup_threads threads. Results are discarded; failures are logged.
  void warmup();
  bool warmed_up() const noexcept { return warmed_up_.load(); }
  std::size_t pool_threads() const { return pool_.thread_count(); }

  /// Executes one request. Kernel and validation failures come back as
  /// ErrorReply; never throws for a well-formed message.
  protocol::Message handle(const protocol::Message& request);

  /// Warms up if needed, then accepts connections until `stop` is requested.
  /// Each connection is served serially on its own thread.
  void serve(std::stop_token stop);

  std::size_t clamp_threads(std::uint64_t requested) const noexcept;

 private:
  void serve_connection(net::Socket socket, std::stop_token stop);
  void log_line(std::string_view text);

  WorkerConfig config_;
  std::ostream* log_;
  std::mutex log_mutex_;
  net::Listener listener_;
  ComputePool pool_;
  std::atomic<bool> warmed_up_{false};
  std::mutex connections_mutex_;
  struct Connection {
    std::shared_ptr<std::atomic<bool>> finished;
    std::jthread thread;
  };
  std::list<Connection> connections_;
};

}  // namespace pcb
