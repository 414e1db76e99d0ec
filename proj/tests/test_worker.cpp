#include <sys/socket.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "pcb/kernels.hpp"
#include "pcb/net.hpp"
#include "pcb/worker.hpp"
#include "test_util.hpp"

using namespace pcb;
using namespace pcb::protocol;

using testing::RunningWorker;

TEST_CASE("Ping is answered with Pong, after warm-up") {
  RunningWorker w;
  auto s = w.connect();
  CHECK(std::holds_alternative<Pong>(net::call(s, Ping{})));
  CHECK(w.worker.warmed_up());
  CHECK(w.worker.pool_threads() >= 2);
}

TEST_CASE("PiRequest is computed with the clamped thread count") {
  RunningWorker w(2);
  auto s = w.connect();
  const auto reply = net::call(s, PiRequest{100'000, 2, 11, 0});
  const auto& pi = std::get<PiResponse>(reply);
  CHECK(pi.samples == 100'000);
  CHECK(std::abs(pi.estimate - std::numbers::pi) <= 5e-2);
  CHECK(pi.estimate == mc_pi_parallel(100'000, 2, {11, 0}).value);

  // 16 threads requested, 2 allowed: same answer as asking for 2.
  const auto clamped = std::get<PiResponse>(net::call(s, PiRequest{100'000, 16, 11, 0}));
  CHECK(clamped == pi);
  CHECK(w.worker.clamp_threads(16) == 2);
  CHECK(w.worker.clamp_threads(1) == 1);
}

TEST_CASE("identical PiRequests give identical replies") {
  RunningWorker w;
  auto s = w.connect();
  const PiRequest req{54'321, 3, 99, 65536};
  const auto a = net::call(s, req);
  const auto b = net::call(s, req);
  CHECK(a == b);
  // Warm-up in between leaves results unchanged.
  CHECK(std::holds_alternative<WarmupDone>(net::call(s, Warmup{})));
  CHECK(net::call(s, req) == a);
}

TEST_CASE("MatvecRequest returns the shard product") {
  RunningWorker w;
  std::mt19937_64 gen(1);
  const auto m = testing::random_matrix(13, 9, gen);
  const auto v = testing::random_vector(9, gen);
  const auto data = m.data();
  const auto vec = v.data();
  auto s = w.connect();
  const auto reply = net::call(
      s, MatvecRequest{40, 13, 9, {data.begin(), data.end()}, {vec.begin(), vec.end()}});
  const auto& r = std::get<MatvecResponse>(reply);
  CHECK(r.start_row == 40);
  CHECK(r.rows == 13);
  CHECK(testing::bit_equal(r.result, matvec_sequential(m, v).data()));
}

TEST_CASE("invalid requests get ErrorReply and the connection stays open") {
  RunningWorker w;
  auto s = w.connect();
  const auto bad = net::call(s, PiRequest{0, 1, 1, 0});
  REQUIRE(std::holds_alternative<ErrorReply>(bad));
  CHECK(std::get<ErrorReply>(bad).code == static_cast<std::uint16_t>(ErrorCode::invalid_request));
  CHECK(std::holds_alternative<ErrorReply>(net::call(s, PiRequest{10, 0, 1, 0})));
  CHECK(std::holds_alternative<ErrorReply>(net::call(s, MatvecRequest{0, 0, 0, {}, {}})));
  CHECK(std::holds_alternative<ErrorReply>(net::call(s, Pong{})));
  CHECK(std::holds_alternative<Pong>(net::call(s, Ping{})));
}

TEST_CASE("a malformed frame closes the connection") {
  RunningWorker w;
  auto s = w.connect();
  const std::uint8_t junk[10] = {'N', 'O', 'P', 'E', 1, 1, 0, 0, 0, 0};
  REQUIRE(::send(s.fd(), junk, sizeof(junk), MSG_NOSIGNAL) == 10);
  CHECK_FALSE(net::receive_message(s).has_value());  // EOF
  // The daemon keeps serving new connections.
  auto again = w.connect();
  CHECK(std::holds_alternative<Pong>(net::call(again, Ping{})));
}

TEST_CASE("several connections are served independently") {
  RunningWorker w;
  std::vector<std::jthread> clients;
  std::atomic<int> ok{0};
  for (int i = 0; i < 4; ++i) {
    clients.emplace_back([&, i] {
      auto s = w.connect();
      const auto r = std::get<PiResponse>(net::call(s, PiRequest{20'000, 2, 5, std::uint64_t(i)}));
      if (r.samples == 20'000) ++ok;
    });
  }
  clients.clear();
  CHECK(ok == 4);
}

TEST_CASE("handle() works without a network") {
  Worker worker(WorkerConfig{{"127.0.0.1", 0}, 3, 3});
  CHECK_FALSE(worker.warmed_up());
  worker.warmup();
  CHECK(worker.warmed_up());
  CHECK(worker.pool_threads() >= 3);
  CHECK(std::holds_alternative<Pong>(worker.handle(Ping{})));
  const auto r = std::get<PiResponse>(worker.handle(PiRequest{1000, 3, 1, 0}));
  CHECK(r.estimate == mc_pi_parallel(1000, 3, {1, 0}).value);
}

TEST_CASE("startup errors") {
  CHECK_THROWS_AS(Worker(WorkerConfig{{"127.0.0.1", 0}, 0, 1}), std::invalid_argument);
  Worker first(WorkerConfig{{"127.0.0.1", 0}, 1, 1});
  CHECK_THROWS_AS(Worker(WorkerConfig{{"127.0.0.1", first.port()}, 1, 1}), net::NetError);
}

TEST_CASE("one log line per request with type and duration") {
  std::string log;
  {
    RunningWorker w;
    auto s = w.connect();
    (void)net::call(s, Ping{});
    (void)net::call(s, PiRequest{1000, 1, 1, 0});
    s.close();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    w.thread.request_stop();
    w.thread.join();
    log = w.log.str();
  }
  CHECK(log.find("msg_type=0x01 (Ping) duration_us=") != std::string::npos);
  CHECK(log.find("msg_type=0x20 (PiRequest) duration_us=") != std::string::npos);
}
