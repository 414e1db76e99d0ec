#pragma once

// Blocking TCP transport for protocol frames (POSIX sockets).

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "pcb/core.hpp"
#include "pcb/protocol.hpp"

namespace pcb::net {

/// Socket-level failure: refused connection, reset, peer closed mid-frame.
class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept;

 private:
  int fd_ = -1;
};

/// Opens a TCP connection with TCP_NODELAY set.
Socket connect_to(const Endpoint& endpoint);

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port. Throws NetError.
  explicit Listener(const Endpoint& endpoint, int backlog = 64);

  std::uint16_t port() const noexcept { return port_; }
  /// Waits up to `timeout` for a connection; nullopt on timeout.
  std::optional<Socket> accept_for(std::chrono::milliseconds timeout);

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// True once `socket` has data (or EOF) to read; false after `timeout`.
bool wait_readable(const Socket& socket, std::chrono::milliseconds timeout);

void send_message(const Socket& socket, const protocol::Message& msg);

/// Reads exactly one frame. Returns nullopt on a clean EOF before any header
/// byte. Throws NetError on I/O failure and protocol::ProtocolError on a
/// malformed frame; the header is validated before the payload is buffered.
std::optional<protocol::Message> receive_message(
    const Socket& socket, std::uint32_t max_payload = protocol::kMaxPayload);

/// send_message followed by receive_message; EOF is reported as NetError.
protocol::Message call(const Socket& socket, const protocol::Message& request);

}  // namespace pcb::net
