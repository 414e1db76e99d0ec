#include <random>

#include "doctest.h"
#include "pcb/costmodel.hpp"
#include "pcb/protocol.hpp"

using namespace pcb::costmodel;
using pcb::protocol::PayloadKind;
using pcb::protocol::payload_bits;

TEST_CASE("transfer_time examples") {
  const auto matrix_bits = payload_bits(PayloadKind::full_matrix_matvec_task, {1, 3000, 3000});
  const auto t = transfer_time(matrix_bits, 1e8);
  CHECK(t.seconds == 11.52);
  CHECK(t.bits == 1'152'000'000ULL);
  CHECK(transfer_time(0, 1e8).seconds == 0.0);
  CHECK(transfer_time(896, 1e8).seconds == doctest::Approx(8.96e-6).epsilon(1e-15));
}

TEST_CASE("transfer_time rejects non-positive bandwidth") {
  CHECK_THROWS_AS(transfer_time(1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(transfer_time(1, -5.0), std::invalid_argument);
}

TEST_CASE("property: transfer_time is linear in bits, inverse in bandwidth") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::uint64_t> bits(0, 1ULL << 40);
  std::uniform_real_distribution<double> bw(1e3, 1e11);
  std::uniform_int_distribution<std::uint64_t> k(1, 1000);
  for (int i = 0; i < 1000; ++i) {
    const auto b = bits(gen);
    const auto w = bw(gen);
    const auto s = k(gen);
    const double base = transfer_time(b, w).seconds;
    CHECK(transfer_time(b * s, w).seconds == doctest::Approx(base * s).epsilon(1e-12));
    CHECK(transfer_time(b, w * s).seconds == doctest::Approx(base / s).epsilon(1e-12));
  }
}

TEST_CASE("advise_offload: dense matvec over a 100 Mbps link stays local") {
  const auto advice = advise_offload(
      {payload_bits(PayloadKind::full_matrix_matvec_task, {1, 3000, 3000}), 1e8, 0.196, 28});
  CHECK_FALSE(advice.recommended);
  CHECK(advice.transfer_seconds == 11.52);
  CHECK(advice.ideal_remote_compute_seconds == doctest::Approx(0.007));
  CHECK(advice.rationale.find("11.52") != std::string::npos);
  CHECK(machine_line(advice).rfind("recommended=false transfer_s=11.52", 0) == 0);
}

TEST_CASE("advise_offload: pi estimation offloads") {
  const auto advice =
      advise_offload({payload_bits(PayloadKind::compact_pi_round_trip, {7, 0, 0}), 1e8, 179.72, 21});
  CHECK(advice.recommended);
  CHECK(advice.transfer_seconds == doctest::Approx(8.96e-6));
  CHECK(advice.ideal_remote_compute_seconds == doctest::Approx(179.72 / 21));
  CHECK(machine_line(advice).rfind("recommended=true", 0) == 0);
}

TEST_CASE("advise_offload: equality is not enough") {
  // transfer 1 s + remote 1 s == local 2 s
  const auto advice = advise_offload({100'000'000, 1e8, 2.0, 2.0});
  CHECK(advice.transfer_seconds + advice.ideal_remote_compute_seconds == advice.local_seconds);
  CHECK_FALSE(advice.recommended);
}

TEST_CASE("advise_offload: latency counts against offloading") {
  OffloadInputs in{896, 1e8, 1.0, 4.0, 0.0};
  CHECK(advise_offload(in).recommended);
  in.latency_seconds = 0.9;
  CHECK_FALSE(advise_offload(in).recommended);
}

TEST_CASE("advise_offload validates inputs") {
  CHECK_THROWS_AS(advise_offload({0, 1e8, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(advise_offload({1, 0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(advise_offload({1, 1e8, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(advise_offload({1, 1e8, 1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(advise_offload({1, 1e8, 1, 1, -0.1}), std::invalid_argument);
}

TEST_CASE("property: more bits never turns 'no' into 'yes'") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<std::uint64_t> bits(1, 1ULL << 36);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  for (int i = 0; i < 2000; ++i) {
    OffloadInputs in{bits(gen), pos(gen) * 1e6, pos(gen), pos(gen)};
    const bool before = advise_offload(in).recommended;
    in.task_bits *= 2;
    const bool after = advise_offload(in).recommended;
    CHECK_FALSE((!before && after));
  }
}
