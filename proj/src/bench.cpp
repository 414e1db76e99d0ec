#include "pcb/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <tuple>

#include "pcb/kernels.hpp"

namespace pcb::bench {

namespace {

using Clock = std::chrono::steady_clock;

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::string g6(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

}  // namespace

std::string_view to_string(BenchTask task) noexcept {
  switch (task) {
    case BenchTask::matvec_local: return "matvec-local";
    case BenchTask::pi_local: return "pi-local";
    case BenchTask::pi_remote_single: return "pi-remote-single";
    case BenchTask::pi_distributed: return "pi-distributed";
  }
  return "unknown";
}

BenchTask parse_task(std::string_view name) {
  for (auto task : {BenchTask::matvec_local, BenchTask::pi_local, BenchTask::pi_remote_single,
                    BenchTask::pi_distributed}) {
    if (to_string(task) == name) return task;
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

bool is_remote(BenchTask task) noexcept {
  return task == BenchTask::pi_remote_single || task == BenchTask::pi_distributed;
}

Range parse_range(std::string_view text) {
  Range r;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    r.first = parse_count(text.substr(0, dots), "range");
    r.last = parse_count(text.substr(dots + 2), "range");
  } else {
    r.first = r.last = parse_count(text, "range");
  }
  if (r.first == 0 || r.first > r.last) {
    throw std::invalid_argument("range '" + std::string(text) + "' must be 1 <= A <= B");
  }
  return r;
}

void SweepSpec::validate() const {
  if (runs == 0) throw std::invalid_argument("runs must be >= 1");
  for (const auto& r : {workers, threads}) {
    if (r.first == 0 || r.first > r.last) throw std::invalid_argument("ranges must satisfy 1 <= A <= B");
  }
  if (samples == 0) throw std::invalid_argument("samples must be >= 1");
  if (rows == 0 || cols == 0) throw std::invalid_argument("matrix must be at least 1x1");
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec) {
  Range workers{0, 0};
  if (spec.task == BenchTask::pi_remote_single) workers = {1, 1};
  if (spec.task == BenchTask::pi_distributed) workers = spec.workers;
  std::vector<SweepCell> cells;
  for (std::size_t w = workers.first; w <= workers.last; ++w) {
    for (std::size_t t = spec.threads.first; t <= spec.threads.last; ++t) {
      cells.push_back({spec.task, w, t});
    }
  }
  return cells;
}

SweepCell baseline_cell(BenchTask task) noexcept {
  return {task == BenchTask::matvec_local ? BenchTask::matvec_local : BenchTask::pi_local, 0, 1};
}

BenchmarkRecord make_record(const SweepCell& cell, double mean_seconds, double baseline_seconds) {
  BenchmarkRecord r;
  r.task = cell.task;
  r.workers = cell.workers;
  r.threads_per_worker = cell.threads;
  r.total_threads = is_remote(cell.task) ? cell.workers * cell.threads : cell.threads;
  r.mean_seconds = mean_seconds;
  r.baseline_seconds = baseline_seconds;
  r.speedup = baseline_seconds / mean_seconds;
  return r;
}

LiveCellRunner::LiveCellRunner(ClusterTopology topology) : topology_(std::move(topology)) {}

Master& LiveCellRunner::master_for(std::size_t workers) {
  auto& slot = masters_[workers];
  if (!slot) slot = std::make_unique<Master>(topology_.prefix(workers));
  return *slot;
}

void LiveCellRunner::prepare(const SweepSpec& spec) {
  spec_ = spec;
  if (spec.task == BenchTask::matvec_local) {
    std::vector<double> cells(spec.rows * spec.cols);
    std::vector<double> vec(spec.cols);
    StreamRng rng({spec.seed, 0});
    rng.fill_uniform(cells);
    rng.fill_uniform(vec);
    matrix_.emplace(spec.rows, spec.cols, std::move(cells));
    vector_.emplace(std::move(vec));
  }
  pool_.ensure_threads(spec.threads.last);
  for (const auto& cell : sweep_cells(spec)) {
    if (is_remote(cell.task)) master_for(cell.workers).connect();
  }
}

double LiveCellRunner::run_once(const SweepCell& cell) {
  const SampleBudget budget(spec_.samples, spec_.seed);
  const auto started = Clock::now();
  switch (cell.task) {
    case BenchTask::matvec_local:
      (void)matvec_parallel(*matrix_, *vector_, cell.threads, &pool_);
      break;
    case BenchTask::pi_local:
      (void)pi_local(budget, cell.threads, &pool_);
      break;
    case BenchTask::pi_remote_single:
    case BenchTask::pi_distributed:
      (void)master_for(cell.workers).pi_distributed(budget, cell.threads);
      break;
  }
  return std::chrono::duration<double>(Clock::now() - started).count();
}

SweepResult run_sweep(const SweepSpec& spec, CellRunner& runner) {
  spec.validate();
  SweepResult result;
  const auto measure = [&](const SweepCell& cell) {
    if (spec.discard_first) (void)runner.run_once(cell);
    double total = 0.0;
    for (std::size_t i = 0; i < spec.runs; ++i) total += runner.run_once(cell);
    return total / static_cast<double>(spec.runs);
  };
  try {
    runner.prepare(spec);
    const auto baseline = baseline_cell(spec.task);
    result.baseline_seconds = measure(baseline);
    for (const auto& cell : sweep_cells(spec)) {
      const double mean = cell == baseline ? result.baseline_seconds : measure(cell);
      result.records.push_back(make_record(cell, mean, result.baseline_seconds));
    }
  } catch (const std::exception& e) {
    result.complete = false;
    result.error = e.what();
  }
  return result;
}

std::string emit_csv(std::vector<BenchmarkRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tuple(static_cast<int>(a.task), a.workers, a.threads_per_worker) <
           std::tuple(static_cast<int>(b.task), b.workers, b.threads_per_worker);
  });
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::string(to_string(r.task)) + ',' + std::to_string(r.workers) + ',' +
           std::to_string(r.threads_per_worker) + ',' + std::to_string(r.total_threads) + ',' +
           g6(r.mean_seconds) + ',' + g6(r.baseline_seconds) + ',' + g6(r.speedup) + '\n';
  }
  return out;
}

std::vector<ThreadGuidance> recommend_threads(const std::vector<BenchmarkRecord>& records,
                                              double min_marginal_gain) {
  std::map<std::size_t, std::map<std::size_t, double>> by_workers;
  for (const auto& r : records) by_workers[r.workers][r.threads_per_worker] = r.speedup;

  std::vector<ThreadGuidance> out;
  for (const auto& [workers, speedups] : by_workers) {
    const auto one = speedups.find(1);
    if (one == speedups.end() || !(one->second > 0.0)) continue;
    ThreadGuidance g;
    g.workers = workers;
    bool still_scaling = true;
    for (std::size_t t = 2; speedups.contains(t) && speedups.contains(t - 1); ++t) {
      const double gain = (speedups.at(t) - speedups.at(t - 1)) / one->second;
      g.marginal_gains.push_back(gain);
      if (still_scaling && gain >= min_marginal_gain) {
        g.recommended_threads = t;
      } else {
        still_scaling = false;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string format_table(const std::vector<BenchmarkRecord>& records) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %7s %7s %7s %12s %9s\n", "task", "workers", "threads",
                "total", "mean_s", "speedup");
  out += line;
  for (const auto& r : records) {
    std::snprintf(line, sizeof(line), "%-18s %7zu %7zu %7zu %12.6f %9.2f\n",
                  std::string(to_string(r.task)).c_str(), r.workers, r.threads_per_worker,
                  r.total_threads, r.mean_seconds, r.speedup);
    out += line;
  }
  return out;
}

}  // namespace pcb::bench
