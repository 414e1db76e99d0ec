#include "pcb/master.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>

#include "pcb/kernels.hpp"

namespace pcb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class T>
const T& expect_reply(const protocol::Message& reply, const std::string& worker) {
  if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) {
    throw DispatchError(worker, "error reply " + std::to_string(err->code) + ": " + err->message);
  }
  if (const auto* value = std::get_if<T>(&reply)) return *value;
  throw DispatchError(worker, "unexpected reply " +
                                  std::string(protocol::name_of(protocol::type_of(reply))));
}

}  // namespace

double DispatchReport::max_worker_seconds() const noexcept {
  double best = 0.0;
  for (const auto& w : workers) best = std::max(best, w.seconds);
  return best;
}

double DispatchReport::sum_worker_seconds() const noexcept {
  double sum = 0.0;
  for (const auto& w : workers) sum += w.seconds;
  return sum;
}

DispatchError::DispatchError(std::string worker, const std::string& detail)
    : std::runtime_error("worker '" + worker + "': " + detail), worker_(std::move(worker)) {}

Master::Master(ClusterTopology topology)
    : topology_(std::move(topology)), connections_(topology_.size()) {}

void Master::require_workers() const {
  if (topology_.empty()) throw std::invalid_argument("topology has no workers");
}

void Master::connect() {
  for (std::size_t i = 0; i < topology_.size(); ++i) {
    if (connections_[i].valid()) continue;
    const auto& w = topology_.workers()[i];
    try {
      connections_[i] = net::connect_to(w.endpoint);
    } catch (const std::exception& e) {
      throw DispatchError(w.name, e.what());
    }
  }
}

void Master::disconnect() noexcept {
  for (auto& c : connections_) c.close();
}

void Master::ping_all() {
  require_workers();
  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < topology_.size(); ++i) lanes.push_back({i, protocol::Ping{}, "ping"});
  DispatchReport report;
  auto results = dispatch(lanes, report);
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    expect_reply<protocol::Pong>(results[k].reply, topology_.workers()[lanes[k].worker_index].name);
  }
}

std::vector<Master::LaneResult> Master::dispatch(std::vector<Lane>& lanes,
                                                 DispatchReport& report) {
  std::vector<LaneResult> results(lanes.size());
  std::vector<std::optional<std::string>> errors(lanes.size());
  const auto started = Clock::now();
  {
    std::vector<std::jthread> threads;
    threads.reserve(lanes.size());
    for (std::size_t k = 0; k < lanes.size(); ++k) {
      threads.emplace_back([this, &lanes, &results, &errors, k] {
        auto& conn = connections_[lanes[k].worker_index];
        const auto& endpoint = topology_.workers()[lanes[k].worker_index].endpoint;
        const auto lane_start = Clock::now();
        try {
          if (!conn.valid()) conn = net::connect_to(endpoint);
          results[k].reply = net::call(conn, lanes[k].request);
        } catch (const std::exception& e) {
          conn.close();
          errors[k] = e.what();
        }
        results[k].seconds = seconds_since(lane_start);
      });
    }
  }
  report.total_seconds = seconds_since(started);
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    const auto& name = topology_.workers()[lanes[k].worker_index].name;
    if (errors[k]) throw DispatchError(name, *errors[k]);
    report.workers.push_back({name, lanes[k].shard, results[k].seconds});
  }
  return results;
}

PiRun Master::pi_distributed(SampleBudget budget, std::size_t threads_per_worker) {
  require_workers();
  if (budget.total_samples == 0) throw std::invalid_argument("sample budget must be >= 1");
  if (threads_per_worker == 0 || threads_per_worker > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("threads_per_worker must be in [1, 2^32)");
  }
  const auto plan = partition(budget.total_samples, topology_.size());
  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < plan.shard_count(); ++i) {
    if (plan.shares[i] == 0) continue;
    protocol::PiRequest req{plan.shares[i], static_cast<std::uint32_t>(threads_per_worker),
                            budget.base_seed, i * kWorkerStreamStride};
    lanes.push_back({i, req, "samples=" + std::to_string(plan.shares[i])});
  }

  PiRun run;
  auto results = dispatch(lanes, run.report);
  std::vector<PartialEstimate> parts;
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    const auto& name = topology_.workers()[lanes[k].worker_index].name;
    const auto& reply = expect_reply<protocol::PiResponse>(results[k].reply, name);
    const auto expected = std::get<protocol::PiRequest>(lanes[k].request).samples;
    if (reply.samples != expected) {
      throw DispatchError(name, "computed " + std::to_string(reply.samples) + " samples, asked " +
                                    std::to_string(expected));
    }
    parts.push_back({reply.estimate, reply.samples});
  }
  run.estimate = combine_estimates(parts);
  const protocol::PayloadParams params{lanes.size(), 0, 0};
  run.report.request_bits = protocol::payload_bits(protocol::PayloadKind::compact_pi_request, params);
  run.report.reply_bits = protocol::payload_bits(protocol::PayloadKind::compact_pi_response, params);
  return run;
}

MatvecRun Master::matvec_distributed(const Matrix& m, const DenseVector& v) {
  require_workers();
  if (v.size() != m.cols()) {
    throw std::invalid_argument("matvec: vector length " + std::to_string(v.size()) +
                                " does not match matrix columns " + std::to_string(m.cols()));
  }
  constexpr auto kU32 = std::numeric_limits<std::uint32_t>::max();
  if (m.rows() > kU32 || m.cols() > kU32) {
    throw std::invalid_argument("matvec: dimensions exceed the 32-bit wire fields");
  }
  const auto plan = partition(m.rows(), topology_.size());
  const auto vec = v.data();
  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < plan.shard_count(); ++i) {
    const auto range = shard_row_range(plan, i);
    if (range.count == 0) continue;
    const auto block = m.row_block(range.start, range.count);
    protocol::MatvecRequest req{static_cast<std::uint32_t>(range.start),
                                static_cast<std::uint32_t>(range.count),
                                static_cast<std::uint32_t>(m.cols()),
                                {block.begin(), block.end()},
                                {vec.begin(), vec.end()}};
    lanes.push_back({i, std::move(req),
                     "rows=[" + std::to_string(range.start) + "," +
                         std::to_string(range.start + range.count) + ")"});
  }

  DispatchReport report;
  auto results = dispatch(lanes, report);
  std::vector<double> out(m.rows());
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    const auto& name = topology_.workers()[lanes[k].worker_index].name;
    const auto& req = std::get<protocol::MatvecRequest>(lanes[k].request);
    const auto& reply = expect_reply<protocol::MatvecResponse>(results[k].reply, name);
    if (reply.start_row != req.start_row || reply.rows != req.rows ||
        reply.result.size() != req.rows) {
      throw DispatchError(name, "reply rows do not match the requested shard");
    }
    std::copy(reply.result.begin(), reply.result.end(), out.begin() + req.start_row);
  }
  const protocol::PayloadParams params{lanes.size(), m.rows(), m.cols()};
  // matvec_task counts both directions; split it so request + reply add up.
  report.reply_bits = m.rows() * 64 + lanes.size() * 2 * 32;
  report.request_bits =
      protocol::payload_bits(protocol::PayloadKind::matvec_task, params) - report.reply_bits;
  return {DenseVector(std::move(out)), std::move(report)};
}

LocalPiRun pi_local(SampleBudget budget, std::size_t threads, ComputePool* pool) {
  const auto started = Clock::now();
  const auto estimate = mc_pi_parallel(budget.total_samples, threads, {budget.base_seed, 0}, pool);
  return {estimate, seconds_since(started)};
}

}  // namespace pcb
