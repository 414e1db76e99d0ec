#pragma once

// Master-side orchestration: split a task over the workers of a topology,
// call every worker concurrently (one dispatch lane per worker) and combine
// the replies.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcb/compute_pool.hpp"
#include "pcb/core.hpp"
#include "pcb/net.hpp"
#include "pcb/protocol.hpp"

namespace pcb {

struct WorkerTiming {
  std::string name;
  std::string shard;  // e.g. "samples=1000" or "rows=[0,429)"
  double seconds = 0.0;
};

struct DispatchReport {
  std::vector<WorkerTiming> workers;
  double total_seconds = 0.0;
  /// Logical request/reply payload for this call, in the compact accounting
  /// (pi) or the live protocol's fields (matvec). Framing excluded.
  std::uint64_t request_bits = 0;
  std::uint64_t reply_bits = 0;

  double max_worker_seconds() const noexcept;
  double sum_worker_seconds() const noexcept;
};

/// A worker was unreachable, broke the protocol, or answered with ErrorReply.
class DispatchError : public std::runtime_error {
 public:
  DispatchError(std::string worker, const std::string& detail);
  const std::string& worker() const noexcept { return worker_; }

 private:
  std::string worker_;
};

struct PiRun {
  PiEstimate estimate;
  DispatchReport report;
};

struct MatvecRun {
  DenseVector result;
  DispatchReport report;
};

struct LocalPiRun {
  PiEstimate estimate;
  double seconds = 0.0;
};

class Master {
 public:
  explicit Master(ClusterTopology topology);

  const ClusterTopology& topology() const noexcept { return topology_; }

  /// Opens any missing connections. Lanes also connect lazily, so this only
  /// moves connection setup out of timed calls.
  void connect();
  void disconnect() noexcept;

  /// Pings every worker; throws DispatchError on the first failure.
  void ping_all();

  /// Worker i gets share i of partition(total_samples, workers), the thread
  /// count, the base seed and stream_base = i * 2^16. Workers whose share is
  /// zero are not called.
  PiRun pi_distributed(SampleBudget budget, std::size_t threads_per_worker);

  /// Row-partitions `m` across the workers, sends every worker its rows plus
  /// the whole vector and reassembles the result in row order.
  MatvecRun matvec_distributed(const Matrix& m, const DenseVector& v);

 private:
  struct Lane {
    std::size_t worker_index;
    protocol::Message request;
    std::string shard;
  };
  struct LaneResult {
    protocol::Message reply;
    double seconds = 0.0;
  };

  std::vector<LaneResult> dispatch(std::vector<Lane>& lanes, DispatchReport& report);
  void require_workers() const;

  ClusterTopology topology_;
  std::vector<net::Socket> connections_;
};

/// In-process baseline: mc_pi_parallel on the master with stream base 0, so
/// it matches a single remote worker given the same seed and threads.
LocalPiRun pi_local(SampleBudget budget, std::size_t threads, ComputePool* pool = nullptr);

}  // namespace pcb
