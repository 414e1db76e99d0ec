#include "pcb/worker.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "pcb/kernels.hpp"

namespace pcb {

namespace {

using protocol::ErrorCode;
using protocol::ErrorReply;

constexpr auto kPollInterval = std::chrono::milliseconds(100);

ErrorReply error_reply(ErrorCode code, std::string text) {
  return {static_cast<std::uint16_t>(code), std::move(text)};
}

}  // namespace

Worker::Worker(WorkerConfig config, std::ostream* log)
    : config_(std::move(config)), log_(log), listener_(config_.listen) {
  if (config_.max_threads == 0) {
    throw std::invalid_argument("worker max_threads must be >= 1");
  }
}

Worker::~Worker() {
  std::lock_guard lock(connections_mutex_);
  for (auto& c : connections_) c.thread.request_stop();
  connections_.clear();
}

std::size_t Worker::clamp_threads(std::uint64_t requested) const noexcept {
  if (requested > config_.max_threads) return config_.max_threads;
  return static_cast<std::size_t>(requested);
}

void Worker::warmup() {
  const std::size_t threads = std::max<std::size_t>(config_.warmup_threads, 1);
  try {
    pool_.ensure_threads(threads);
    std::vector<double> cells(64 * 64);
    StreamRng rng({0x5eed, 0});
    rng.fill_uniform(cells);
    const Matrix m(64, 64, std::move(cells));
    const DenseVector v(std::vector<double>(64, 1.0));
    (void)matvec_parallel(m, v, threads, &pool_);
    (void)mc_pi_parallel(1 << 14, threads, {0x5eed, 0}, &pool_);
  } catch (const std::exception& e) {
    log_line(std::string("warmup failed: ") + e.what());
  }
  warmed_up_.store(true);
}

protocol::Message Worker::handle(const protocol::Message& request) {
  using namespace protocol;
  return std::visit(
      [this](const auto& msg) -> Message {
        using T = std::decay_t<decltype(msg)>;
        try {
          if constexpr (std::is_same_v<T, Ping>) {
            return Pong{};
          } else if constexpr (std::is_same_v<T, Warmup>) {
            warmup();
            return WarmupDone{};
          } else if constexpr (std::is_same_v<T, MatvecRequest>) {
            if (msg.rows == 0 || msg.cols == 0) {
              return error_reply(ErrorCode::invalid_request, "matvec shard must be at least 1x1");
            }
            const Matrix shard(msg.rows, msg.cols, msg.row_data);
            const DenseVector v(msg.vector);
            auto result = matvec_parallel(shard, v, config_.max_threads, &pool_);
            const auto values = result.data();
            return MatvecResponse{msg.start_row, msg.rows, {values.begin(), values.end()}};
          } else if constexpr (std::is_same_v<T, PiRequest>) {
            if (msg.samples == 0) return error_reply(ErrorCode::invalid_request, "samples must be >= 1");
            if (msg.threads == 0) return error_reply(ErrorCode::invalid_request, "threads must be >= 1");
            const auto estimate = mc_pi_parallel(msg.samples, clamp_threads(msg.threads),
                                                 {msg.base_seed, msg.stream_base}, &pool_);
            return PiResponse{estimate.value, estimate.samples_used};
          } else {
            return error_reply(ErrorCode::unsupported,
                               std::string(name_of(type_of(Message(msg)))) +
                                   " is not a request");
          }
        } catch (const std::exception& e) {
          return error_reply(ErrorCode::kernel_failure, e.what());
        }
      },
      request);
}

void Worker::serve(std::stop_token stop) {
  if (!warmed_up()) warmup();
  while (!stop.stop_requested()) {
    auto socket = listener_.accept_for(kPollInterval);
    if (!socket) continue;
    std::lock_guard lock(connections_mutex_);
    connections_.remove_if([](const Connection& c) { return c.finished->load(); });
    auto finished = std::make_shared<std::atomic<bool>>(false);
    connections_.push_back(
        {finished, std::jthread([this, finished, s = std::move(*socket)](std::stop_token st) mutable {
           serve_connection(std::move(s), st);
           finished->store(true);
         })});
  }
}

void Worker::serve_connection(net::Socket socket, std::stop_token stop) {
  try {
    while (!stop.stop_requested()) {
      if (!net::wait_readable(socket, kPollInterval)) continue;
      auto request = net::receive_message(socket, config_.max_payload);
      if (!request) return;
      const auto started = std::chrono::steady_clock::now();
      const auto type = protocol::type_of(*request);
      auto reply = handle(*request);
      net::send_message(socket, reply);
      const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
      char line[96];
      std::snprintf(line, sizeof(line), "msg_type=0x%02x (%s) duration_us=%lld",
                    static_cast<unsigned>(type), std::string(protocol::name_of(type)).c_str(),
                    static_cast<long long>(micros));
      log_line(line);
    }
  } catch (const protocol::ProtocolError& e) {
    log_line(std::string("closing connection: ") + e.what());
  } catch (const std::exception& e) {
    log_line(std::string("connection error: ") + e.what());
  }
}

void Worker::log_line(std::string_view text) {
  if (log_ == nullptr) return;
  std::lock_guard lock(log_mutex_);
  *log_ << text << '\n' << std::flush;
}

}  // namespace pcb
