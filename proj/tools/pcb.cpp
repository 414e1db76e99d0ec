// pcb: worker daemon, distributed task runner, offload advisor and benchmark
// harness in one binary.

#include <signal.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stop_token>
#include <thread>

#include "CLI11.hpp"
#include "pcb/bench.hpp"
#include "pcb/costmodel.hpp"
#include "pcb/kernels.hpp"
#include "pcb/master.hpp"
#include "pcb/protocol.hpp"
#include "pcb/simd/kernels.hpp"
#include "pcb/worker.hpp"

namespace {

std::string self_executable() {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) throw std::runtime_error("cannot locate own executable");
  return std::string(buf, static_cast<std::size_t>(n));
}

// Parses counts written as integers or in exponent form ("1.2e8").
std::uint64_t parse_count(const std::string& text, const char* what) {
  std::size_t used = 0;
  const double value = std::stod(text, &used);
  if (used != text.size() || !(value >= 0.0) || value > 1.8e19 || std::floor(value) != value) {
    throw std::invalid_argument(std::string(what) + " must be a non-negative integer: " + text);
  }
  return static_cast<std::uint64_t>(value);
}

int run_worker(const std::string& listen, std::size_t max_threads, std::size_t warmup_threads,
               bool announce) {
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  pcb::WorkerConfig config;
  config.listen = pcb::parse_endpoint(listen);
  config.max_threads = max_threads;
  config.warmup_threads = warmup_threads;
  pcb::Worker worker(config, &std::cerr);
  std::cerr << "worker listening on " << config.listen.host << ':' << worker.port()
            << " max_threads=" << max_threads
            << " simd=" << pcb::simd::to_string(pcb::simd::active_kernels().level) << std::endl;
  if (announce) std::cout << "listening " << worker.port() << std::endl;

  std::stop_source stop;
  std::jthread signal_waiter([&stop, stop_signals](std::stop_token self) {
    const timespec tick{0, 200'000'000};
    while (!self.stop_requested()) {
      if (sigtimedwait(&stop_signals, nullptr, &tick) > 0) {
        stop.request_stop();
        return;
      }
    }
  });
  worker.serve(stop.get_token());
  std::cerr << "worker shutting down" << std::endl;
  return 0;
}

void print_report(const pcb::DispatchReport& report) {
  for (const auto& w : report.workers) {
    std::printf("  %-12s %-24s %.6f s\n", w.name.c_str(), w.shard.c_str(), w.seconds);
  }
  std::printf("total_seconds=%.6f\n", report.total_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  ::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Master/worker cluster compute and benchmark tool"};
  app.require_subcommand(1);

  // worker
  auto* worker_cmd = app.add_subcommand("worker", "Run a worker daemon");
  std::string listen = "0.0.0.0:5000";
  std::size_t max_threads = 4;
  std::size_t warmup_threads = 4;
  bool announce = false;
  worker_cmd->add_option("--listen", listen, "HOST:PORT to listen on")->required();
  worker_cmd->add_option("--max-threads", max_threads, "Upper bound on threads per request")
      ->check(CLI::PositiveNumber);
  worker_cmd->add_option("--warmup-threads", warmup_threads, "Threads used by the warm-up pass")
      ->check(CLI::PositiveNumber);
  worker_cmd->add_flag("--announce", announce, "Print 'listening PORT' on stdout once bound");

  // run pi | run matvec
  auto* run_cmd = app.add_subcommand("run", "Run one distributed task");
  run_cmd->require_subcommand(1);
  std::string topology_path;
  std::string samples_text = "1e6";
  std::size_t threads_per_worker = 1;
  std::uint64_t seed = 1;
  std::size_t rows = 3000;
  std::size_t cols = 3000;
  auto* run_pi = run_cmd->add_subcommand("pi", "Monte Carlo pi estimate across the workers");
  run_pi->add_option("--topology", topology_path, "Topology file")->required();
  run_pi->add_option("--samples", samples_text, "Total samples (e.g. 1.2e8)");
  run_pi->add_option("--threads-per-worker", threads_per_worker)->check(CLI::PositiveNumber);
  run_pi->add_option("--seed", seed);
  auto* run_mv = run_cmd->add_subcommand("matvec", "Row-partitioned matrix-vector multiply");
  run_mv->add_option("--topology", topology_path, "Topology file")->required();
  run_mv->add_option("--rows", rows)->check(CLI::PositiveNumber);
  run_mv->add_option("--cols", cols)->check(CLI::PositiveNumber);
  run_mv->add_option("--threads-per-worker", threads_per_worker,
                     "Accepted for symmetry; workers use their --max-threads")
      ->check(CLI::PositiveNumber);
  run_mv->add_option("--seed", seed);

  // advise
  auto* advise_cmd = app.add_subcommand("advise", "Offload advice from the transfer-cost model");
  std::string bits_text;
  double bandwidth = 0.0;
  double local_seconds = 0.0;
  double speedup = 0.0;
  double latency = 0.0;
  advise_cmd->add_option("--bits", bits_text, "Payload bits for the whole task")->required();
  advise_cmd->add_option("--bandwidth-bps", bandwidth, "Link bandwidth, bits/s")->required();
  advise_cmd->add_option("--local-seconds", local_seconds, "Local compute time")->required();
  advise_cmd->add_option("--speedup", speedup, "Expected remote compute speedup")->required();
  advise_cmd->add_option("--latency-seconds", latency, "Fixed per-call latency (default 0)");

  // bits
  auto* bits_cmd = app.add_subcommand("bits", "Logical payload size of a message kind");
  std::string kind_text;
  std::uint64_t bits_workers = 1;
  std::uint64_t bits_rows = 0;
  std::uint64_t bits_cols = 0;
  bits_cmd->add_option("--kind", kind_text,
                       "compact-pi-request|compact-pi-response|compact-pi-round-trip|"
                       "full-matrix-matvec-task|pi-request|pi-response|matvec-task")
      ->required();
  bits_cmd->add_option("--workers", bits_workers);
  bits_cmd->add_option("--rows", bits_rows);
  bits_cmd->add_option("--cols", bits_cols);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Timing sweep over workers x threads");
  std::string task_text;
  std::string workers_text = "1";
  std::string threads_text = "1..4";
  std::size_t runs = 10;
  std::string bench_samples = "1e6";
  std::size_t loopback = 0;
  std::string out_path;
  bool discard_first = false;
  std::size_t loopback_threads = 4;
  bench_cmd->add_option("--task", task_text, "matvec-local|pi-local|pi-remote-single|pi-distributed")
      ->required();
  bench_cmd->add_option("--workers", workers_text, "Worker range A..B");
  bench_cmd->add_option("--threads", threads_text, "Threads-per-worker range A..B");
  bench_cmd->add_option("--runs", runs, "Timed runs per cell")->check(CLI::PositiveNumber);
  auto* samples_opt = bench_cmd->add_option("--samples", bench_samples, "Monte Carlo samples");
  auto* rows_opt = bench_cmd->add_option("--rows", rows)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--cols", cols)->check(CLI::PositiveNumber);
  samples_opt->excludes(rows_opt);
  auto* topo_opt = bench_cmd->add_option("--topology", topology_path, "Topology file");
  auto* loop_opt = bench_cmd->add_option("--loopback", loopback, "Spawn K local workers");
  topo_opt->excludes(loop_opt);
  bench_cmd->add_option("--loopback-max-threads", loopback_threads, "--max-threads for loopback workers");
  bench_cmd->add_option("--out", out_path, "CSV output path");
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_flag("--discard-first", discard_first, "Run one untimed pass per cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*worker_cmd) return run_worker(listen, max_threads, warmup_threads, announce);

    if (*run_pi) {
      pcb::Master master(pcb::load_topology(topology_path));
      const pcb::SampleBudget budget(parse_count(samples_text, "--samples"), seed);
      master.connect();
      const auto run = master.pi_distributed(budget, threads_per_worker);
      std::printf("estimate=%.15f error=%.3e samples=%llu\n", run.estimate.value,
                  run.estimate.value - std::numbers::pi,
                  static_cast<unsigned long long>(run.estimate.samples_used));
      print_report(run.report);
      std::printf("request_bits=%llu reply_bits=%llu (compact accounting)\n",
                  static_cast<unsigned long long>(run.report.request_bits),
                  static_cast<unsigned long long>(run.report.reply_bits));
      return 0;
    }

    if (*run_mv) {
      pcb::Master master(pcb::load_topology(topology_path));
      std::vector<double> cells(rows * cols);
      std::vector<double> vec(cols);
      pcb::StreamRng rng({seed, 0});
      rng.fill_uniform(cells);
      rng.fill_uniform(vec);
      const pcb::Matrix m(rows, cols, std::move(cells));
      const pcb::DenseVector v(std::move(vec));
      master.connect();
      const auto run = master.matvec_distributed(m, v);
      const auto local = pcb::matvec_sequential(m, v);
      double checksum = 0.0;
      for (double x : run.result.data()) checksum += x;
      std::printf("checksum=%.17g matches_local=%s\n", checksum,
                  run.result == local ? "true" : "false");
      print_report(run.report);
      std::printf("request_bits=%llu reply_bits=%llu\n",
                  static_cast<unsigned long long>(run.report.request_bits),
                  static_cast<unsigned long long>(run.report.reply_bits));
      return run.result == local ? 0 : 1;
    }

    if (*advise_cmd) {
      pcb::costmodel::OffloadInputs in;
      in.task_bits = parse_count(bits_text, "--bits");
      in.bandwidth_bps = bandwidth;
      in.local_seconds = local_seconds;
      in.speedup_factor = speedup;
      in.latency_seconds = latency;
      const auto advice = pcb::costmodel::advise_offload(in);
      std::printf("%s\n%s\n", advice.rationale.c_str(),
                  pcb::costmodel::machine_line(advice).c_str());
      return 0;
    }

    if (*bits_cmd) {
      const auto kind = pcb::protocol::parse_payload_kind(kind_text);
      std::printf("%llu\n", static_cast<unsigned long long>(pcb::protocol::payload_bits(
                                kind, {bits_workers, bits_rows, bits_cols})));
      return 0;
    }

    if (*bench_cmd) {
      pcb::bench::SweepSpec spec;
      spec.task = pcb::bench::parse_task(task_text);
      spec.workers = pcb::bench::parse_range(workers_text);
      spec.threads = pcb::bench::parse_range(threads_text);
      spec.runs = runs;
      spec.samples = parse_count(bench_samples, "--samples");
      spec.rows = rows;
      spec.cols = cols;
      spec.seed = seed;
      spec.discard_first = discard_first;
      spec.validate();

      std::optional<pcb::bench::LoopbackCluster> cluster;
      pcb::ClusterTopology topology;
      if (pcb::bench::is_remote(spec.task)) {
        if (loopback > 0) {
          pcb::bench::LoopbackOptions options;
          options.worker_executable = self_executable();
          options.max_threads = loopback_threads;
          cluster.emplace(pcb::bench::spawn_loopback_cluster(loopback, 0, options));
          topology = cluster->topology();
        } else if (!topology_path.empty()) {
          topology = pcb::load_topology(topology_path);
        } else {
          throw std::invalid_argument("remote tasks need --topology or --loopback");
        }
      }
      pcb::bench::LiveCellRunner runner(topology);
      const auto result = pcb::bench::run_sweep(spec, runner);
      std::printf("baseline: master-local single thread, mean %.6f s over %zu runs\n",
                  result.baseline_seconds, spec.runs);
      std::fputs(pcb::bench::format_table(result.records).c_str(), stdout);
      for (const auto& g : pcb::bench::recommend_threads(result.records)) {
        std::printf("guidance: workers=%zu threads_per_worker=%zu\n", g.workers,
                    g.recommended_threads);
      }
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << pcb::bench::emit_csv(result.records);
        if (!out) throw std::runtime_error("cannot write " + out_path);
      }
      if (!result.complete) {
        std::fprintf(stderr, "sweep incomplete: %s\n", result.error.c_str());
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
