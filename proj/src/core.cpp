#include "pcb/core.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pcb {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("matrix dimensions must be at least 1x1");
  }
  if (data_.size() / cols != rows || data_.size() % cols != 0) {
    throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : Matrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

Matrix Matrix::identity(std::size_t n) {
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
  return Matrix(n, n, std::move(data));
}

DenseVector::DenseVector(std::vector<double> data) : data_(std::move(data)) {
  if (data_.empty()) throw std::invalid_argument("vector length must be at least 1");
}

PartitionPlan partition(std::uint64_t total, std::size_t shards) {
  if (shards == 0) throw std::invalid_argument("partition: shard count must be >= 1");
  PartitionPlan plan;
  plan.total = total;
  plan.shares.reserve(shards);
  const std::uint64_t base = total / shards;
  const std::uint64_t extra = total % shards;
  for (std::size_t i = 0; i < shards; ++i) {
    plan.shares.push_back(base + (i < extra ? 1 : 0));
  }
  return plan;
}

RowRange shard_row_range(const PartitionPlan& plan, std::size_t shard_index) {
  if (shard_index >= plan.shares.size()) {
    throw std::invalid_argument("shard index " + std::to_string(shard_index) +
                                " out of range for " +
                                std::to_string(plan.shares.size()) + " shards");
  }
  std::uint64_t start = 0;
  for (std::size_t i = 0; i < shard_index; ++i) start += plan.shares[i];
  return {start, plan.shares[shard_index]};
}

std::string Endpoint::to_string() const {
  if (host.find(':') != std::string::npos) {
    return "[" + host + "]:" + std::to_string(port);
  }
  return host + ":" + std::to_string(port);
}

Endpoint parse_endpoint(std::string_view text) {
  std::string_view host;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw std::invalid_argument("malformed endpoint '" + std::string(text) + "'");
    }
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("endpoint '" + std::string(text) + "' lacks a port");
    }
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  if (host.empty()) {
    throw std::invalid_argument("endpoint '" + std::string(text) + "' lacks a host");
  }
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || end != port.data() + port.size() || value > 65535) {
    throw std::invalid_argument("invalid port in endpoint '" + std::string(text) + "'");
  }
  return {std::string(host), static_cast<std::uint16_t>(value)};
}

ClusterTopology::ClusterTopology(std::string master_name, std::vector<WorkerEndpoint> workers)
    : master_name_(std::move(master_name)), workers_(std::move(workers)) {
  std::set<std::string> seen;
  for (const auto& w : workers_) {
    if (w.name.empty()) throw std::invalid_argument("worker name must not be empty");
    if (!seen.insert(w.name).second) {
      throw std::invalid_argument("duplicate worker name '" + w.name + "'");
    }
  }
}

ClusterTopology ClusterTopology::prefix(std::size_t n) const {
  if (n > workers_.size()) {
    throw std::invalid_argument("topology has " + std::to_string(workers_.size()) +
                                " workers, " + std::to_string(n) + " requested");
  }
  return ClusterTopology(master_name_, {workers_.begin(), workers_.begin() + n});
}

ClusterTopology parse_topology(std::istream& in, std::string master_name) {
  std::vector<WorkerEndpoint> workers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name;
    std::string address;
    std::string extra;
    if (!(fields >> name)) continue;
    if (!(fields >> address) || (fields >> extra)) {
      throw std::invalid_argument("topology line " + std::to_string(line_no) +
                                  ": expected 'name host:port'");
    }
    try {
      workers.push_back({name, parse_endpoint(address)});
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("topology line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ClusterTopology(std::move(master_name), std::move(workers));
}

ClusterTopology load_topology(const std::string& path, std::string master_name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file '" + path + "'");
  return parse_topology(in, std::move(master_name));
}

SampleBudget::SampleBudget(std::uint64_t total, std::uint64_t seed)
    : total_samples(total), base_seed(seed) {
  if (total == 0) throw std::invalid_argument("sample budget must be >= 1");
}

}  // namespace pcb
