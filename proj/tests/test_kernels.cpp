#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pcb/kernels.hpp"
#include "test_util.hpp"

using namespace pcb;

namespace {

// Emits the same value forever.
struct ConstantSource {
  double u;
  void fill_uniform(std::span<double> out) { std::fill(out.begin(), out.end(), u); }
};

// Replays a fixed list.
struct ListSource {
  std::span<const double> values;
  std::size_t pos = 0;
  void fill_uniform(std::span<double> out) {
    for (auto& x : out) x = values[pos++];
  }
};

// The plain formula, independent of the SIMD kernels.
double direct_estimate(std::span<const double> u) {
  double sum = 0.0;
  for (double x : u) sum += std::sqrt(1.0 - x * x);
  return 4.0 / static_cast<double>(u.size()) * sum;
}

bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("matvec_sequential examples") {
  CHECK(matvec_sequential(Matrix::identity(3), {1, 2, 3}) == DenseVector{1, 2, 3});
  CHECK(matvec_sequential(Matrix(2, 4), {5, 6, 7, 8}) == DenseVector{0, 0});
  CHECK(matvec_sequential(Matrix(2, 2, {1, 2, 3, 4}), {1, 1}) == DenseVector{3, 7});
}

TEST_CASE("matvec rejects bad arguments") {
  CHECK_THROWS_AS(matvec_sequential(Matrix(2, 3), {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(matvec_parallel(Matrix(2, 3), {1, 2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(matvec_parallel(Matrix(2, 2), {1, 2}, 0), std::invalid_argument);
}

TEST_CASE("matvec_parallel examples") {
  CHECK(matvec_parallel(Matrix::identity(3), {1, 2, 3}, 3) == DenseVector{1, 2, 3});
  std::mt19937_64 gen(100);
  const auto m = testing::random_matrix(100, 100, gen);
  const auto v = testing::random_vector(100, gen);
  const auto seq = matvec_sequential(m, v);
  CHECK(testing::bit_equal(matvec_parallel(m, v, 4).data(), seq.data()));
  CHECK(testing::bit_equal(matvec_parallel(m, v, 1).data(), seq.data()));
  // More threads than rows.
  const auto small = testing::random_matrix(3, 5, gen);
  const auto sv = testing::random_vector(5, gen);
  CHECK(testing::bit_equal(matvec_parallel(small, sv, 8).data(), matvec_sequential(small, sv).data()));
}

TEST_CASE("property: matvec_parallel is bit-identical to the oracle for 1..8 threads") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 200);
  ComputePool pool;
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = testing::random_matrix(dim(gen), dim(gen), gen);
    const auto v = testing::random_vector(m.cols(), gen);
    const auto expected = testing::reference_matvec(m, v);
    REQUIRE(testing::bit_equal(matvec_sequential(m, v).data(), expected));
    for (std::size_t k = 1; k <= 8; ++k) {
      CHECK(testing::bit_equal(matvec_parallel(m, v, k).data(), expected));
      CHECK(testing::bit_equal(matvec_parallel(m, v, k, &pool).data(), expected));
    }
  }
}

TEST_CASE("mc_pi_sequential boundary streams") {
  ConstantSource zero{0.0};
  CHECK(mc_pi_sequential(1, zero) == PiEstimate{4.0, 1});

  const double u = 1.0 - 0x1.0p-30;
  const double eps = 1.0 - u * u;  // 2^-29 after rounding
  ConstantSource near_one{u};
  const auto est = mc_pi_sequential(1, near_one);
  CHECK(est.value == doctest::Approx(4.0 * std::sqrt(eps)).epsilon(1e-12));
  CHECK(est.value > 0.0);

  ConstantSource any{0.5};
  CHECK_THROWS_AS(mc_pi_sequential(0, any), std::invalid_argument);
  CHECK_THROWS_AS(mc_pi_sequential(0, RngStreamSpec{1, 0}), std::invalid_argument);
}

TEST_CASE("mc_pi_sequential matches the direct formula over the same stream") {
  std::vector<double> u(5000);
  StreamRng(RngStreamSpec{42, 3}).fill_uniform(u);
  const auto est = mc_pi_sequential(u.size(), RngStreamSpec{42, 3});
  CHECK(est.value == doctest::Approx(direct_estimate(u)).epsilon(1e-14));
  ListSource replay{u};
  CHECK(mc_pi_sequential(u.size(), replay) == est);
}

TEST_CASE("mc_pi accuracy at one million samples") {
  // Standard error sqrt((16/3 - pi^2)/N) ~ 8.9e-4; bound is > 5 sigma.
  const auto seq = mc_pi_sequential(1'000'000, RngStreamSpec{2017, 0});
  CHECK(std::abs(seq.value - std::numbers::pi) <= 5e-3);
  CHECK(seq.samples_used == 1'000'000);
  const auto par = mc_pi_parallel(1'000'000, 4, RngStreamSpec{2017, 0});
  CHECK(std::abs(par.value - std::numbers::pi) <= 5e-3);
  CHECK(par.samples_used == 1'000'000);
}

TEST_CASE("mc_pi_parallel with one thread equals sequential exactly") {
  for (std::uint64_t n : {1ull, 17ull, 100000ull}) {
    CHECK(mc_pi_parallel(n, 1, {9, 0}) == mc_pi_sequential(n, RngStreamSpec{9, 0}));
  }
}

TEST_CASE("mc_pi_parallel is deterministic, pool or not") {
  ComputePool pool;
  const auto a = mc_pi_parallel(200'001, 3, {5, 65536});
  const auto b = mc_pi_parallel(200'001, 3, {5, 65536}, &pool);
  CHECK(a == b);
  CHECK(mc_pi_parallel(200'001, 3, {6, 65536}) != a);
}

TEST_CASE("mc_pi_parallel with more threads than samples") {
  const auto est = mc_pi_parallel(3, 8, {1, 0});
  CHECK(est.samples_used == 3);
  CHECK(est.value >= 0.0);
  CHECK(est.value <= 4.0);
  CHECK_THROWS_AS(mc_pi_parallel(0, 2, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(mc_pi_parallel(10, 0, {1, 0}), std::invalid_argument);
}

TEST_CASE("per-thread streams are the documented derived streams") {
  // Shard k draws from stream base + k, so recombining sequential runs on
  // those streams reproduces the parallel estimate.
  const auto plan = partition(10'007, 3);
  std::vector<PartialEstimate> parts;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto e = mc_pi_sequential(plan.shares[k], RngStreamSpec{77, 131072 + k});
    parts.push_back({e.value, e.samples_used});
  }
  CHECK(combine_estimates(parts) == mc_pi_parallel(10'007, 3, {77, 131072}));
  CHECK(stream_for(77, 2, 3) == RngStreamSpec{77, 2 * 65536 + 3});
}

TEST_CASE("combine_estimates examples") {
  const PartialEstimate equal[] = {{3.0, 1}, {3.2, 1}};
  CHECK(combine_estimates(equal).value == doctest::Approx(3.1).epsilon(1e-15));
  CHECK(combine_estimates(equal).samples_used == 2);
  const PartialEstimate weighted[] = {{3.0, 2}, {3.6, 1}};
  CHECK(combine_estimates(weighted).value == doctest::Approx(3.2).epsilon(1e-15));
  const PartialEstimate single[] = {{3.14159, 12345}};
  CHECK(combine_estimates(single) == PiEstimate{3.14159, 12345});
  CHECK_THROWS_AS(combine_estimates({}), std::invalid_argument);
  const PartialEstimate zero[] = {{3.0, 0}};
  CHECK_THROWS_AS(combine_estimates(zero), std::invalid_argument);
}

TEST_CASE("property: combine_estimates is permutation invariant") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> value(0.0, 4.0);
  std::uniform_int_distribution<std::uint64_t> count(1, 1'000'000);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<PartialEstimate> parts(1 + trial % 9);
    for (auto& p : parts) p = {value(gen), count(gen)};
    const auto base = combine_estimates(parts);
    std::shuffle(parts.begin(), parts.end(), gen);
    const auto shuffled = combine_estimates(parts);
    CHECK(shuffled.samples_used == base.samples_used);
    CHECK(rel_close(shuffled.value, base.value, 1e-12));
  }
}

TEST_CASE("block estimates recombine to the whole-list estimate") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u(10'000);
  for (auto& x : u) x = unit(gen);
  const double whole = direct_estimate(u);
  for (std::size_t t : {1u, 2u, 3u, 4u, 5u, 7u, 8u}) {
    const auto plan = partition(u.size(), t);
    std::vector<PartialEstimate> parts;
    for (std::size_t k = 0; k < t; ++k) {
      const auto r = shard_row_range(plan, k);
      const auto e = mc_pi_from_uniforms(std::span<const double>(u).subspan(r.start, r.count));
      parts.push_back({e.value, e.samples_used});
    }
    INFO("T=" << t);
    CHECK(rel_close(combine_estimates(parts).value, whole, 1e-12));
  }
}

TEST_CASE("property: estimates stay within [0, 4]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto e = mc_pi_parallel(1 + seed * 37, 1 + seed % 5, {seed, 0});
    CHECK(e.value >= 0.0);
    CHECK(e.value <= 4.0);
  }
}

TEST_CASE("StreamRng is reproducible and streams are distinct") {
  StreamRng a({1, 0});
  StreamRng b({1, 0});
  StreamRng c({1, 1});
  StreamRng d({2, 0});
  bool differs_c = false;
  bool differs_d = false;
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto x = a.next_uniform();
    CHECK_FALSE(x < 0.0);
    CHECK(x < 1.0);
    CHECK(b.next_uniform() == x);
    differs_c |= c.next_uniform() != x;
    differs_d |= d.next_uniform() != x;
    sum += x;
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("ComputePool grows on demand and propagates task failures") {
  ComputePool pool;
  CHECK(pool.thread_count() == 0);
  std::atomic<int> counter{0};
  std::vector<std::function<void()>> tasks(5, [&] { ++counter; });
  pool.run_all(tasks);
  CHECK(counter == 5);
  CHECK(pool.thread_count() == 5);
  pool.run_all({[] {}, [] {}});
  CHECK(pool.thread_count() == 5);
  CHECK_THROWS_AS(pool.run_all({[] {}, [] { throw std::runtime_error("boom"); }}), std::runtime_error);
}
