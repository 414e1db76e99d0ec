#include "pcb/net.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <vector>

namespace pcb::net {

namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head != nullptr) freeaddrinfo(head);
  }
};

AddrInfo resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo info;
  const auto port = std::to_string(endpoint.port);
  if (int rc = getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &info.head); rc != 0) {
    throw NetError("cannot resolve " + endpoint.to_string() + ": " + gai_strerror(rc));
  }
  return info;
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("send failed: " + errno_text());
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Returns bytes read; fewer than `len` only on EOF.
std::size_t read_all(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("recv failed: " + errno_text());
    }
    if (n == 0) break;
    got += static_cast<std::size_t>(n);
  }
  return got;
}

}  // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket connect_to(const Endpoint& endpoint) {
  const auto info = resolve(endpoint, false);
  std::string last_error = "no addresses";
  for (auto* ai = info.head; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text();
      continue;
    }
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
    last_error = errno_text();
  }
  throw NetError("cannot connect to " + endpoint.to_string() + ": " + last_error);
}

Listener::Listener(const Endpoint& endpoint, int backlog) {
  const auto info = resolve(endpoint, true);
  std::string last_error = "no addresses";
  for (auto* ai = info.head; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text();
      continue;
    }
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
      last_error = errno_text();
      continue;
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6
                ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    socket_ = std::move(s);
    return;
  }
  throw NetError("cannot listen on " + endpoint.to_string() + ": " + last_error);
}

std::optional<Socket> Listener::accept_for(std::chrono::milliseconds timeout) {
  pollfd pfd{socket_.fd(), POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc < 0) {
    if (errno == EINTR) return std::nullopt;
    throw NetError("poll failed: " + errno_text());
  }
  if (rc == 0) return std::nullopt;
  const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) return std::nullopt;
    throw NetError("accept failed: " + errno_text());
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

bool wait_readable(const Socket& socket, std::chrono::milliseconds timeout) {
  pollfd pfd{socket.fd(), POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc < 0) {
    if (errno == EINTR) return false;
    throw NetError("poll failed: " + errno_text());
  }
  return rc > 0;
}

void send_message(const Socket& socket, const protocol::Message& msg) {
  const auto bytes = protocol::encode(msg);
  write_all(socket.fd(), bytes.data(), bytes.size());
}

std::optional<protocol::Message> receive_message(const Socket& socket,
                                                 std::uint32_t max_payload) {
  std::array<std::uint8_t, protocol::kHeaderSize> header{};
  const auto got = read_all(socket.fd(), header.data(), header.size());
  if (got == 0) return std::nullopt;
  if (got < header.size()) throw NetError("connection closed inside a frame header");
  const auto parsed = protocol::decode_header(header, max_payload);
  std::vector<std::uint8_t> payload(parsed.payload_len);
  if (read_all(socket.fd(), payload.data(), payload.size()) < payload.size()) {
    throw NetError("connection closed inside a frame payload");
  }
  return protocol::decode_payload(parsed.type, payload);
}

protocol::Message call(const Socket& socket, const protocol::Message& request) {
  send_message(socket, request);
  auto reply = receive_message(socket);
  if (!reply) throw NetError("peer closed the connection before replying");
  return std::move(*reply);
}

}  // namespace pcb::net
