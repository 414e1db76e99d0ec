#pragma once

// Benchmark harness: sweeps over worker/thread grids, repeated timed runs,
// arithmetic means, speedups against a single-thread local baseline, CSV
// output, and a loopback cluster of local worker processes.

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcb/compute_pool.hpp"
#include "pcb/core.hpp"
#include "pcb/master.hpp"

namespace pcb::bench {

enum class BenchTask { matvec_local, pi_local, pi_remote_single, pi_distributed };

std::string_view to_string(BenchTask task) noexcept;
/// "matvec-local", "pi-local", "pi-remote-single", "pi-distributed".
BenchTask parse_task(std::string_view name);
bool is_remote(BenchTask task) noexcept;

/// Inclusive integer range written "A..B" or "A".
struct Range {
  std::size_t first = 1;
  std::size_t last = 1;
  friend bool operator==(const Range&, const Range&) = default;
};
Range parse_range(std::string_view text);

struct SweepSpec {
  BenchTask task = BenchTask::pi_local;
  Range workers{1, 1};  // ignored by local tasks, fixed at 1 for pi-remote-single
  Range threads{1, 4};
  std::size_t runs = 10;
  std::uint64_t samples = 1'000'000;
  std::size_t rows = 3000;
  std::size_t cols = 3000;
  std::uint64_t seed = 1;
  bool discard_first = false;

  /// Throws std::invalid_argument on runs == 0, empty or zero-based ranges.
  void validate() const;
};

/// One grid point. Local tasks use workers == 0.
struct SweepCell {
  BenchTask task;
  std::size_t workers = 0;
  std::size_t threads = 1;
  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

/// Grid cells in run order: workers ascending, then threads ascending.
std::vector<SweepCell> sweep_cells(const SweepSpec& spec);

/// The single-thread local run that every speedup is measured against.
SweepCell baseline_cell(BenchTask task) noexcept;

struct BenchmarkRecord {
  BenchTask task = BenchTask::pi_local;
  std::size_t workers = 0;
  std::size_t threads_per_worker = 1;
  std::size_t total_threads = 1;
  double mean_seconds = 0.0;
  double baseline_seconds = 0.0;
  double speedup = 0.0;
};

/// Fills total_threads (workers x threads for remote tasks, threads for local
/// ones) and speedup = baseline_seconds / mean_seconds.
BenchmarkRecord make_record(const SweepCell& cell, double mean_seconds, double baseline_seconds);

/// Executes a cell once and returns its wall time in seconds.
class CellRunner {
 public:
  virtual ~CellRunner() = default;
  virtual void prepare(const SweepSpec& /*spec*/) {}
  virtual double run_once(const SweepCell& cell) = 0;
};

/// Times the real kernels (local cells) and the master (remote cells) with a
/// monotonic clock around the full call.
class LiveCellRunner : public CellRunner {
 public:
  /// `topology` may be empty when only local tasks are swept. One master per
  /// swept worker count (over the topology's leading workers) connects in
  /// prepare(), so connection setup stays out of the timings.
  explicit LiveCellRunner(ClusterTopology topology);

  void prepare(const SweepSpec& spec) override;
  double run_once(const SweepCell& cell) override;

 private:
  Master& master_for(std::size_t workers);

  ClusterTopology topology_;
  std::map<std::size_t, std::unique_ptr<Master>> masters_;
  SweepSpec spec_;
  std::optional<Matrix> matrix_;
  std::optional<DenseVector> vector_;
  ComputePool pool_;
};

struct SweepResult {
  std::vector<BenchmarkRecord> records;
  double baseline_seconds = 0.0;
  bool complete = true;
  std::string error;
};

/// Runs the baseline first, then each cell `runs` times consecutively. A
/// failure stops the sweep; the records gathered so far are kept and the
/// result is flagged incomplete.
SweepResult run_sweep(const SweepSpec& spec, CellRunner& runner);

inline constexpr std::string_view kCsvHeader =
    "task,workers,threads_per_worker,total_threads,mean_seconds,baseline_seconds,speedup";

/// Header plus one row per record, sorted by (task, workers, threads); floats
/// with 6 significant digits.
std::string emit_csv(std::vector<BenchmarkRecord> records);

/// Per worker count, the largest thread count up to which every added thread
/// raised speedup by at least `min_marginal_gain` times the speedup of the
/// one-thread cell.
struct ThreadGuidance {
  std::size_t workers = 0;
  std::size_t recommended_threads = 1;
  std::vector<double> marginal_gains;  // gain of thread t+2 over t+1, normalised
};
std::vector<ThreadGuidance> recommend_threads(const std::vector<BenchmarkRecord>& records,
                                              double min_marginal_gain = 0.5);

std::string format_table(const std::vector<BenchmarkRecord>& records);

// --- Loopback cluster --------------------------------------------------------

struct LoopbackOptions {
  std::string worker_executable;  // binary accepting `worker --listen ... --announce`
  std::size_t max_threads = 4;
  std::size_t warmup_threads = 4;
  std::chrono::milliseconds startup_timeout{15000};
  bool forward_worker_logs = false;
};

/// Worker daemons running as child processes on 127.0.0.1. The destructor
/// terminates and reaps every child.
class LoopbackCluster {
 public:
  LoopbackCluster(const LoopbackCluster&) = delete;
  LoopbackCluster& operator=(const LoopbackCluster&) = delete;
  LoopbackCluster(LoopbackCluster&&) noexcept;
  LoopbackCluster& operator=(LoopbackCluster&&) noexcept;
  ~LoopbackCluster();

  const ClusterTopology& topology() const noexcept { return topology_; }
  const std::vector<pid_t>& pids() const noexcept { return pids_; }

  /// SIGTERM, then SIGKILL after a grace period; waits for every child.
  void shutdown() noexcept;

 private:
  friend LoopbackCluster spawn_loopback_cluster(std::size_t, std::uint16_t,
                                                const LoopbackOptions&);
  LoopbackCluster() = default;

  ClusterTopology topology_;
  std::vector<pid_t> pids_;
};

/// Starts `n_workers` daemons on base_port, base_port+1, ... (ephemeral ports
/// when base_port is 0) and returns once each answers Ping. On failure the
/// already-started children are torn down and std::runtime_error is thrown.
LoopbackCluster spawn_loopback_cluster(std::size_t n_workers, std::uint16_t base_port,
                                       const LoopbackOptions& options);

}  // namespace pcb::bench
