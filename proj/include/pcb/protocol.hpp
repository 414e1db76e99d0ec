#pragma once

// Binary master <-> worker wire protocol.
//
// Frame: magic "PCB1" | version (1 byte, = 1) | msg_type (1 byte) |
//        payload_len (u32 big-endian, <= 2^31) | payload.
// All integers are big-endian; doubles travel as their IEEE-754 bit pattern,
// big-endian. See docs/protocol.md for the per-message payload layouts.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pcb::protocol {

inline constexpr std::uint8_t kMagic[4] = {'P', 'C', 'B', '1'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = std::uint32_t{1} << 31;

enum class MsgType : std::uint8_t {
  ping = 0x01,
  pong = 0x02,
  warmup = 0x03,
  warmup_done = 0x04,
  matvec_request = 0x10,
  matvec_response = 0x11,
  pi_request = 0x20,
  pi_response = 0x21,
  error_reply = 0x7F,
};

struct Ping {
  friend bool operator==(const Ping&, const Ping&) = default;
};
struct Pong {
  friend bool operator==(const Pong&, const Pong&) = default;
};
struct Warmup {
  friend bool operator==(const Warmup&, const Warmup&) = default;
};
struct WarmupDone {
  friend bool operator==(const WarmupDone&, const WarmupDone&) = default;
};

/// A block of `rows` matrix rows starting at global row `start_row`, plus the
/// full vector (`cols` entries).
struct MatvecRequest {
  std::uint32_t start_row = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> row_data;
  std::vector<double> vector;
  friend bool operator==(const MatvecRequest&, const MatvecRequest&) = default;
};

struct MatvecResponse {
  std::uint32_t start_row = 0;
  std::uint32_t rows = 0;
  std::vector<double> result;
  friend bool operator==(const MatvecResponse&, const MatvecResponse&) = default;
};

struct PiRequest {
  std::uint64_t samples = 0;
  std::uint32_t threads = 0;
  std::uint64_t base_seed = 0;
  std::uint64_t stream_base = 0;
  friend bool operator==(const PiRequest&, const PiRequest&) = default;
};

struct PiResponse {
  double estimate = 0.0;
  std::uint64_t samples = 0;
  friend bool operator==(const PiResponse&, const PiResponse&) = default;
};

enum class ErrorCode : std::uint16_t {
  invalid_request = 1,
  kernel_failure = 2,
  unsupported = 3,
};

/// `message` is UTF-8 and occupies the rest of the payload after the code.
struct ErrorReply {
  std::uint16_t code = 0;
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<Ping, Pong, Warmup, WarmupDone, MatvecRequest, MatvecResponse,
                             PiRequest, PiResponse, ErrorReply>;

MsgType type_of(const Message& msg) noexcept;
std::string_view name_of(MsgType type) noexcept;

enum class ProtocolErrc {
  bad_magic,
  bad_version,
  unknown_type,
  truncated,        // fewer bytes available than the header announces
  length_mismatch,  // payload_len disagrees with the message's own layout
  oversize,         // payload_len above kMaxPayload (or a caller-set limit)
  bad_text,         // ErrorReply text is not valid UTF-8
  encode_error,     // message too large or internally inconsistent to encode
};

std::string_view to_string(ProtocolErrc code) noexcept;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ProtocolErrc code, const std::string& detail);
  ProtocolErrc code() const noexcept { return code_; }

 private:
  ProtocolErrc code_;
};

struct FrameHeader {
  MsgType type;
  std::uint32_t payload_len;
};

/// Encodes exactly one frame. Throws ProtocolError(encode_error) when the
/// payload would exceed kMaxPayload or the message is inconsistent (e.g.
/// row_data.size() != rows * cols).
std::vector<std::uint8_t> encode(const Message& msg);

/// Validates the fixed 10-byte header without touching the payload.
FrameHeader decode_header(std::span<const std::uint8_t> header,
                          std::uint32_t max_payload = kMaxPayload);

/// Decodes a payload whose header has already been validated.
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload);

struct Decoded {
  Message message;
  std::size_t consumed;
};

/// Decodes the first frame in `bytes`; `consumed` is that frame's length.
Decoded decode(std::span<const std::uint8_t> bytes);

/// Decodes a buffer of back-to-back frames.
std::vector<Message> decode_all(std::span<const std::uint8_t> bytes);

// --- Logical payload accounting --------------------------------------------

/// What payload_bits counts. Framing bytes are never included.
///  - compact_*: the minimal accounting where a pi request is two 32-bit
///    integers (iterations, threads) and a reply is one 64-bit double.
///  - full_matrix_matvec_task: the whole rows x cols matrix out plus an
///    equally sized result back, 64 bits per element.
///  - pi_request, pi_response, matvec_task: the live protocol's logical
///    payload fields.
enum class PayloadKind {
  compact_pi_request,
  compact_pi_response,
  compact_pi_round_trip,
  full_matrix_matvec_task,
  pi_request,
  pi_response,
  matvec_task,
};

struct PayloadParams {
  std::uint64_t workers = 1;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

std::uint64_t payload_bits(PayloadKind kind, const PayloadParams& params);

/// Accepts the enumerator names with '-' or '_' ("compact-pi-request").
PayloadKind parse_payload_kind(std::string_view name);

}  // namespace pcb::protocol
