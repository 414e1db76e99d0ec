#include "pcb/costmodel.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pcb::costmodel {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", s);
  return buf;
}

}  // namespace

TransferEstimate transfer_time(std::uint64_t bits, double bandwidth_bps) {
  require_positive(bandwidth_bps, "bandwidth_bps");
  return {bits, bandwidth_bps, static_cast<double>(bits) / bandwidth_bps};
}

OffloadAdvice advise_offload(const OffloadInputs& in) {
  if (in.task_bits == 0) throw std::invalid_argument("task_bits must be positive");
  require_positive(in.bandwidth_bps, "bandwidth_bps");
  require_positive(in.local_seconds, "local_seconds");
  require_positive(in.speedup_factor, "speedup_factor");
  if (!(in.latency_seconds >= 0.0) || !std::isfinite(in.latency_seconds)) {
    throw std::invalid_argument("latency_seconds must be non-negative and finite");
  }

  OffloadAdvice advice;
  advice.local_seconds = in.local_seconds;
  advice.transfer_seconds = transfer_time(in.task_bits, in.bandwidth_bps).seconds + in.latency_seconds;
  advice.ideal_remote_compute_seconds = in.local_seconds / in.speedup_factor;
  const double remote_total = advice.transfer_seconds + advice.ideal_remote_compute_seconds;
  advice.recommended = remote_total < in.local_seconds;
  advice.rationale =
      (advice.recommended ? "offload: transfer " : "compute locally: transfer ") +
      format_seconds(advice.transfer_seconds) + " s + ideal remote compute " +
      format_seconds(advice.ideal_remote_compute_seconds) + " s = " +
      format_seconds(remote_total) + " s " + (advice.recommended ? "<" : ">=") +
      " local compute " + format_seconds(in.local_seconds) + " s";
  return advice;
}

std::string machine_line(const OffloadAdvice& advice) {
  return std::string("recommended=") + (advice.recommended ? "true" : "false") +
         " transfer_s=" + format_seconds(advice.transfer_seconds) +
         " remote_s=" + format_seconds(advice.ideal_remote_compute_seconds) +
         " local_s=" + format_seconds(advice.local_seconds);
}

}  // namespace pcb::costmodel
