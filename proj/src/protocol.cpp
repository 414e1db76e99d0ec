#include "pcb/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

namespace pcb::protocol {

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put_be(v, 2); }
  void u32(std::uint32_t v) { put_be(v, 4); }
  void u64(std::uint64_t v) { put_be(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& values) {
    for (double v : values) f64(v);
  }
  void raw(std::string_view text) { bytes_.insert(bytes_.end(), text.begin(), text.end()); }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put_be(std::uint64_t v, int width) {
    for (int shift = (width - 1) * 8; shift >= 0; shift -= 8) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> payload, MsgType type) : data_(payload), type_(type) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(get_be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_be(4)); }
  std::uint64_t u64() { return get_be(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t count) {
    need(count * 8);
    std::vector<double> out(count);
    for (auto& v : out) v = f64();
    return out;
  }
  std::string_view rest() {
    auto tail = data_.subspan(pos_);
    pos_ = data_.size();
    return {reinterpret_cast<const char*>(tail.data()), tail.size()};
  }
  std::size_t remaining() const { return data_.size() - pos_; }

  void finish() const {
    if (pos_ != data_.size()) {
      throw ProtocolError(ProtocolErrc::length_mismatch,
                          std::string(name_of(type_)) + " payload has " +
                              std::to_string(data_.size() - pos_) + " trailing bytes");
    }
  }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw ProtocolError(ProtocolErrc::length_mismatch,
                          std::string(name_of(type_)) + " payload too short");
    }
  }

 private:
  std::uint64_t get_be(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  MsgType type_;
};

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLen[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

bool known_type(std::uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::ping:
    case MsgType::pong:
    case MsgType::warmup:
    case MsgType::warmup_done:
    case MsgType::matvec_request:
    case MsgType::matvec_response:
    case MsgType::pi_request:
    case MsgType::pi_response:
    case MsgType::error_reply:
      return true;
  }
  return false;
}

[[noreturn]] void encode_fail(const std::string& what) {
  throw ProtocolError(ProtocolErrc::encode_error, what);
}

// Payload size in bytes, validated before any allocation.
std::uint64_t payload_size(const Message& msg) {
  struct Sizer {
    std::uint64_t operator()(const Ping&) const { return 0; }
    std::uint64_t operator()(const Pong&) const { return 0; }
    std::uint64_t operator()(const Warmup&) const { return 0; }
    std::uint64_t operator()(const WarmupDone&) const { return 0; }
    std::uint64_t operator()(const MatvecRequest& m) const {
      if (m.vector.size() != m.cols) encode_fail("MatvecRequest vector length != cols");
      if (m.row_data.size() != static_cast<std::uint64_t>(m.rows) * m.cols) {
        encode_fail("MatvecRequest row_data length != rows * cols");
      }
      return 12 + 8 * (static_cast<std::uint64_t>(m.row_data.size()) + m.vector.size());
    }
    std::uint64_t operator()(const MatvecResponse& m) const {
      if (m.result.size() != m.rows) encode_fail("MatvecResponse result length != rows");
      return 8 + 8 * static_cast<std::uint64_t>(m.result.size());
    }
    std::uint64_t operator()(const PiRequest&) const { return 28; }
    std::uint64_t operator()(const PiResponse&) const { return 16; }
    std::uint64_t operator()(const ErrorReply& m) const {
      if (!valid_utf8(m.message)) encode_fail("ErrorReply message is not valid UTF-8");
      return 2 + static_cast<std::uint64_t>(m.message.size());
    }
  };
  return std::visit(Sizer{}, msg);
}

}  // namespace

ProtocolError::ProtocolError(ProtocolErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

std::string_view to_string(ProtocolErrc code) noexcept {
  switch (code) {
    case ProtocolErrc::bad_magic: return "bad magic";
    case ProtocolErrc::bad_version: return "unknown version";
    case ProtocolErrc::unknown_type: return "unknown message type";
    case ProtocolErrc::truncated: return "truncated frame";
    case ProtocolErrc::length_mismatch: return "length mismatch";
    case ProtocolErrc::oversize: return "payload too large";
    case ProtocolErrc::bad_text: return "invalid UTF-8";
    case ProtocolErrc::encode_error: return "encode error";
  }
  return "protocol error";
}

MsgType type_of(const Message& msg) noexcept {
  static constexpr MsgType kTypes[] = {
      MsgType::ping,           MsgType::pong,        MsgType::warmup,
      MsgType::warmup_done,    MsgType::matvec_request, MsgType::matvec_response,
      MsgType::pi_request,     MsgType::pi_response, MsgType::error_reply,
  };
  static_assert(std::size(kTypes) == std::variant_size_v<Message>);
  return kTypes[msg.index()];
}

std::string_view name_of(MsgType type) noexcept {
  switch (type) {
    case MsgType::ping: return "Ping";
    case MsgType::pong: return "Pong";
    case MsgType::warmup: return "Warmup";
    case MsgType::warmup_done: return "WarmupDone";
    case MsgType::matvec_request: return "MatvecRequest";
    case MsgType::matvec_response: return "MatvecResponse";
    case MsgType::pi_request: return "PiRequest";
    case MsgType::pi_response: return "PiResponse";
    case MsgType::error_reply: return "ErrorReply";
  }
  return "Unknown";
}

std::vector<std::uint8_t> encode(const Message& msg) {
  const std::uint64_t size = payload_size(msg);
  if (size > kMaxPayload) {
    encode_fail("payload of " + std::to_string(size) + " bytes exceeds 2^31");
  }
  Writer w(kHeaderSize + size);
  for (auto b : kMagic) w.u8(b);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(type_of(msg)));
  w.u32(static_cast<std::uint32_t>(size));

  struct Body {
    Writer& w;
    void operator()(const Ping&) const {}
    void operator()(const Pong&) const {}
    void operator()(const Warmup&) const {}
    void operator()(const WarmupDone&) const {}
    void operator()(const MatvecRequest& m) const {
      w.u32(m.start_row);
      w.u32(m.rows);
      w.u32(m.cols);
      w.f64s(m.row_data);
      w.f64s(m.vector);
    }
    void operator()(const MatvecResponse& m) const {
      w.u32(m.start_row);
      w.u32(m.rows);
      w.f64s(m.result);
    }
    void operator()(const PiRequest& m) const {
      w.u64(m.samples);
      w.u32(m.threads);
      w.u64(m.base_seed);
      w.u64(m.stream_base);
    }
    void operator()(const PiResponse& m) const {
      w.f64(m.estimate);
      w.u64(m.samples);
    }
    void operator()(const ErrorReply& m) const {
      w.u16(m.code);
      w.raw(m.message);
    }
  };
  std::visit(Body{w}, msg);
  return std::move(w.bytes());
}

FrameHeader decode_header(std::span<const std::uint8_t> header, std::uint32_t max_payload) {
  if (header.size() < kHeaderSize) {
    throw ProtocolError(ProtocolErrc::truncated,
                        "header needs 10 bytes, have " + std::to_string(header.size()));
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), header.begin())) {
    throw ProtocolError(ProtocolErrc::bad_magic, "frame does not start with PCB1");
  }
  if (header[4] != kVersion) {
    throw ProtocolError(ProtocolErrc::bad_version, "version " + std::to_string(header[4]));
  }
  if (!known_type(header[5])) {
    throw ProtocolError(ProtocolErrc::unknown_type, "type byte " + std::to_string(header[5]));
  }
  const std::uint32_t len = (std::uint32_t{header[6]} << 24) | (std::uint32_t{header[7]} << 16) |
                            (std::uint32_t{header[8]} << 8) | std::uint32_t{header[9]};
  if (len > std::min(max_payload, kMaxPayload)) {
    throw ProtocolError(ProtocolErrc::oversize, "payload_len " + std::to_string(len));
  }
  return {static_cast<MsgType>(header[5]), len};
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload, type);
  Message msg;
  switch (type) {
    case MsgType::ping: msg = Ping{}; break;
    case MsgType::pong: msg = Pong{}; break;
    case MsgType::warmup: msg = Warmup{}; break;
    case MsgType::warmup_done: msg = WarmupDone{}; break;
    case MsgType::matvec_request: {
      MatvecRequest m;
      m.start_row = r.u32();
      m.rows = r.u32();
      m.cols = r.u32();
      // Check the announced dimensions against the bytes present before
      // allocating anything.
      const std::uint64_t doubles = r.remaining() / 8;
      const std::uint64_t cells = static_cast<std::uint64_t>(m.rows) * m.cols;
      if (r.remaining() % 8 != 0 || doubles < m.cols || cells != doubles - m.cols) {
        throw ProtocolError(ProtocolErrc::length_mismatch,
                            "MatvecRequest dimensions do not match payload_len");
      }
      m.row_data = r.f64s(static_cast<std::size_t>(cells));
      m.vector = r.f64s(m.cols);
      msg = std::move(m);
      break;
    }
    case MsgType::matvec_response: {
      MatvecResponse m;
      m.start_row = r.u32();
      m.rows = r.u32();
      if (r.remaining() != static_cast<std::uint64_t>(m.rows) * 8) {
        throw ProtocolError(ProtocolErrc::length_mismatch,
                            "MatvecResponse rows do not match payload_len");
      }
      m.result = r.f64s(m.rows);
      msg = std::move(m);
      break;
    }
    case MsgType::pi_request: {
      PiRequest m;
      m.samples = r.u64();
      m.threads = r.u32();
      m.base_seed = r.u64();
      m.stream_base = r.u64();
      msg = m;
      break;
    }
    case MsgType::pi_response: {
      PiResponse m;
      m.estimate = r.f64();
      m.samples = r.u64();
      msg = m;
      break;
    }
    case MsgType::error_reply: {
      ErrorReply m;
      m.code = r.u16();
      const auto text = r.rest();
      if (!valid_utf8(text)) throw ProtocolError(ProtocolErrc::bad_text, "ErrorReply message");
      m.message = std::string(text);
      msg = std::move(m);
      break;
    }
    default:
      throw ProtocolError(ProtocolErrc::unknown_type,
                          "type byte " + std::to_string(static_cast<int>(type)));
  }
  r.finish();
  return msg;
}

Decoded decode(std::span<const std::uint8_t> bytes) {
  const auto header = decode_header(bytes);
  const std::uint64_t frame_len = kHeaderSize + std::uint64_t{header.payload_len};
  if (bytes.size() < frame_len) {
    throw ProtocolError(ProtocolErrc::truncated,
                        std::string(name_of(header.type)) + " announces " +
                            std::to_string(header.payload_len) + " payload bytes, have " +
                            std::to_string(bytes.size() - kHeaderSize));
  }
  auto msg = decode_payload(header.type, bytes.subspan(kHeaderSize, header.payload_len));
  return {std::move(msg), static_cast<std::size_t>(frame_len)};
}

std::vector<Message> decode_all(std::span<const std::uint8_t> bytes) {
  std::vector<Message> out;
  while (!bytes.empty()) {
    auto decoded = decode(bytes);
    out.push_back(std::move(decoded.message));
    bytes = bytes.subspan(decoded.consumed);
  }
  return out;
}

std::uint64_t payload_bits(PayloadKind kind, const PayloadParams& p) {
  constexpr std::uint64_t kInt32 = 32;
  constexpr std::uint64_t kWord = 64;
  switch (kind) {
    case PayloadKind::compact_pi_request: return p.workers * 2 * kInt32;
    case PayloadKind::compact_pi_response: return p.workers * kWord;
    case PayloadKind::compact_pi_round_trip: return p.workers * (2 * kInt32 + kWord);
    case PayloadKind::full_matrix_matvec_task: return 2 * p.rows * p.cols * kWord;
    case PayloadKind::pi_request:
      // samples, threads, base_seed, stream_base
      return p.workers * (kWord + kInt32 + kWord + kWord);
    case PayloadKind::pi_response: return p.workers * (kWord + kWord);
    case PayloadKind::matvec_task:
      // Every row once, the full vector to each worker, every result once,
      // plus the per-request (start_row, rows, cols) and per-response
      // (start_row, rows) headers.
      return p.rows * p.cols * kWord + p.workers * p.cols * kWord + p.rows * kWord +
             p.workers * 5 * kInt32;
  }
  throw std::invalid_argument("payload_bits: unknown payload kind");
}

PayloadKind parse_payload_kind(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  static constexpr std::pair<std::string_view, PayloadKind> kNames[] = {
      {"compact_pi_request", PayloadKind::compact_pi_request},
      {"compact_pi_response", PayloadKind::compact_pi_response},
      {"compact_pi_round_trip", PayloadKind::compact_pi_round_trip},
      {"full_matrix_matvec_task", PayloadKind::full_matrix_matvec_task},
      {"pi_request", PayloadKind::pi_request},
      {"pi_response", PayloadKind::pi_response},
      {"matvec_task", PayloadKind::matvec_task},
  };
  for (const auto& [n, kind] : kNames) {
    if (n == key) return kind;
  }
  throw std::invalid_argument("unknown payload kind '" + std::string(name) + "'");
}

}  // namespace pcb::protocol
