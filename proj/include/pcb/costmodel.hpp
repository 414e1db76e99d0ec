#pragma once

// Ideal-link communication cost model and the offload decision built on it.

#include <cstdint>
#include <string>

namespace pcb::costmodel {

/// seconds == bits / bandwidth_bps, nothing else.
struct TransferEstimate {
  std::uint64_t bits = 0;
  double bandwidth_bps = 0.0;
  double seconds = 0.0;
};

/// Throws std::invalid_argument unless bandwidth_bps > 0.
TransferEstimate transfer_time(std::uint64_t bits, double bandwidth_bps);

struct OffloadInputs {
  std::uint64_t task_bits = 0;
  double bandwidth_bps = 0.0;
  double local_seconds = 0.0;
  /// Expected compute speedup of the remote side (e.g. workers x threads).
  double speedup_factor = 1.0;
  /// Fixed per-call latency added on top of the ideal transfer; 0 models a
  /// perfect link.
  double latency_seconds = 0.0;
};

struct OffloadAdvice {
  double local_seconds = 0.0;
  double transfer_seconds = 0.0;
  double ideal_remote_compute_seconds = 0.0;
  /// transfer_seconds + ideal_remote_compute_seconds < local_seconds
  bool recommended = false;
  std::string rationale;
};

OffloadAdvice advise_offload(const OffloadInputs& inputs);

/// `recommended=true transfer_s=... remote_s=... local_s=...`
std::string machine_line(const OffloadAdvice& advice);

}  // namespace pcb::costmodel
