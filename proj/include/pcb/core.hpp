#pragma once

// Domain types shared by every module: dense matrix/vector, partition plans,
// cluster topology and Monte Carlo budgets.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pcb {

/// Row-major matrix of doubles. Immutable after construction.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  /// Contiguous block of `count` rows starting at `first`.
  std::span<const double> row_block(std::size_t first, std::size_t count) const {
    return std::span<const double>(data_).subspan(first * cols_, count * cols_);
  }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

class DenseVector {
 public:
  explicit DenseVector(std::vector<double> data);
  DenseVector(std::initializer_list<double> values)
      : DenseVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> data_;
};

/// Shard sizes for splitting `total` items (rows or samples) over shards.
/// Shares are non-increasing and differ by at most one; remainder items go to
/// the leading shards.
struct PartitionPlan {
  std::vector<std::uint64_t> shares;
  std::uint64_t total = 0;

  std::size_t shard_count() const noexcept { return shares.size(); }
  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

struct RowRange {
  std::uint64_t start = 0;
  std::uint64_t count = 0;
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// Throws std::invalid_argument when shards == 0.
PartitionPlan partition(std::uint64_t total, std::size_t shards);

/// Contiguous range owned by shard `shard_index`; ranges tile [0, total).
RowRange shard_row_range(const PartitionPlan& plan, std::size_t shard_index);

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Parses `host:port` or `[v6addr]:port`.
Endpoint parse_endpoint(std::string_view text);

struct WorkerEndpoint {
  std::string name;
  Endpoint endpoint;
  friend bool operator==(const WorkerEndpoint&, const WorkerEndpoint&) = default;
};

/// Ordered worker list. May be empty (local-only mode); names are unique.
class ClusterTopology {
 public:
  ClusterTopology() = default;
  ClusterTopology(std::string master_name, std::vector<WorkerEndpoint> workers);

  const std::string& master_name() const noexcept { return master_name_; }
  const std::vector<WorkerEndpoint>& workers() const noexcept { return workers_; }
  std::size_t size() const noexcept { return workers_.size(); }
  bool empty() const noexcept { return workers_.empty(); }

  /// First `n` workers, in order.
  ClusterTopology prefix(std::size_t n) const;

 private:
  std::string master_name_ = "master";
  std::vector<WorkerEndpoint> workers_;
};

/// Reads the line-oriented topology format: `name host:port` per line, `#`
/// starts a comment, blank lines are skipped. Errors carry the line number.
ClusterTopology parse_topology(std::istream& in, std::string master_name = "master");
ClusterTopology load_topology(const std::string& path, std::string master_name = "master");

struct SampleBudget {
  std::uint64_t total_samples = 1;
  std::uint64_t base_seed = 0;

  SampleBudget() = default;
  SampleBudget(std::uint64_t total, std::uint64_t seed);
};

struct PiEstimate {
  double value = 0.0;
  std::uint64_t samples_used = 0;
  friend bool operator==(const PiEstimate&, const PiEstimate&) = default;
};

}  // namespace pcb
