#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>

#include "pcb/bench.hpp"
#include "pcb/net.hpp"

extern char** environ;

namespace pcb::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kAnnounce = "listening ";

struct Pipe {
  int read_end = -1;
  int write_end = -1;
  ~Pipe() {
    if (read_end >= 0) ::close(read_end);
    if (write_end >= 0) ::close(write_end);
  }
};

// Reads the worker's announce line ("listening <port>") within the deadline.
std::uint16_t read_announced_port(int fd, Clock::time_point deadline) {
  std::string line;
  while (line.find('\n') == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) throw std::runtime_error("worker did not announce its port in time");
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) throw std::runtime_error("poll on worker pipe failed");
    if (rc <= 0) continue;
    char buf[128];
    const ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n <= 0) throw std::runtime_error("worker exited before announcing its port");
    line.append(buf, static_cast<std::size_t>(n));
  }
  const auto at = line.find(kAnnounce);
  if (at == std::string::npos) throw std::runtime_error("unexpected worker output: " + line);
  const auto port = parse_endpoint("127.0.0.1:" + line.substr(at + kAnnounce.size(),
                                                              line.find('\n', at) - at - kAnnounce.size()))
                        .port;
  return port;
}

void wait_for_ping(const Endpoint& endpoint, Clock::time_point deadline) {
  std::string last_error;
  while (Clock::now() < deadline) {
    try {
      auto socket = net::connect_to(endpoint);
      if (std::holds_alternative<protocol::Pong>(net::call(socket, protocol::Ping{}))) return;
      last_error = "unexpected reply to Ping";
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  throw std::runtime_error("worker at " + endpoint.to_string() +
                           " did not answer Ping: " + last_error);
}

pid_t spawn_worker(const LoopbackOptions& options, std::uint16_t port, int stdout_fd) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, stdout_fd, STDOUT_FILENO);
  if (!options.forward_worker_logs) {
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  }
  std::vector<std::string> args = {options.worker_executable,
                                   "worker",
                                   "--listen",
                                   "127.0.0.1:" + std::to_string(port),
                                   "--max-threads",
                                   std::to_string(options.max_threads),
                                   "--warmup-threads",
                                   std::to_string(options.warmup_threads),
                                   "--announce"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, options.worker_executable.c_str(), &actions, nullptr,
                             argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw std::runtime_error("cannot spawn '" + options.worker_executable + "': " +
                             std::strerror(rc));
  }
  return pid;
}

}  // namespace

LoopbackCluster::LoopbackCluster(LoopbackCluster&& other) noexcept
    : topology_(std::move(other.topology_)), pids_(std::exchange(other.pids_, {})) {}

LoopbackCluster& LoopbackCluster::operator=(LoopbackCluster&& other) noexcept {
  if (this != &other) {
    shutdown();
    topology_ = std::move(other.topology_);
    pids_ = std::exchange(other.pids_, {});
  }
  return *this;
}

LoopbackCluster::~LoopbackCluster() { shutdown(); }

void LoopbackCluster::shutdown() noexcept {
  for (pid_t pid : pids_) ::kill(pid, SIGTERM);
  const auto deadline = Clock::now() + std::chrono::seconds(5);
  for (pid_t pid : pids_) {
    while (true) {
      const pid_t rc = ::waitpid(pid, nullptr, WNOHANG);
      if (rc == pid || (rc < 0 && errno != EINTR)) break;
      if (Clock::now() >= deadline) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, nullptr, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  pids_.clear();
}

LoopbackCluster spawn_loopback_cluster(std::size_t n_workers, std::uint16_t base_port,
                                       const LoopbackOptions& options) {
  if (n_workers == 0) throw std::invalid_argument("loopback cluster needs at least one worker");
  if (options.worker_executable.empty()) {
    throw std::invalid_argument("loopback cluster needs a worker executable");
  }
  if (base_port != 0 && base_port + n_workers - 1 > 65535) {
    throw std::invalid_argument("port range exceeds 65535");
  }
  LoopbackCluster cluster;  // tears down started children if we throw below
  const auto deadline = Clock::now() + options.startup_timeout;
  std::vector<WorkerEndpoint> workers;
  for (std::size_t i = 0; i < n_workers; ++i) {
    const auto port = static_cast<std::uint16_t>(base_port == 0 ? 0 : base_port + i);
    Pipe pipe;
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
    pipe.read_end = fds[0];
    pipe.write_end = fds[1];
    cluster.pids_.push_back(spawn_worker(options, port, pipe.write_end));
    ::close(pipe.write_end);
    pipe.write_end = -1;
    const auto actual = read_announced_port(pipe.read_end, deadline);
    workers.push_back({"w" + std::to_string(i + 1), {"127.0.0.1", actual}});
  }
  for (const auto& w : workers) wait_for_ping(w.endpoint, deadline);
  cluster.topology_ = ClusterTopology("loopback-master", std::move(workers));
  return cluster;
}

}  // namespace pcb::bench
