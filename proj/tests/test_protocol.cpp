#include <random>

#include "doctest.h"
#include "pcb/protocol.hpp"
#include "protocol_gen.hpp"

using namespace pcb::protocol;
using Bytes = std::vector<std::uint8_t>;

namespace {

ProtocolErrc decode_error(const Bytes& bytes) {
  try {
    (void)decode(bytes);
  } catch (const ProtocolError& e) {
    return e.code();
  }
  FAIL("decode unexpectedly succeeded");
  return ProtocolErrc::encode_error;
}

}  // namespace

TEST_CASE("Ping frame layout") {
  CHECK(encode(Ping{}) == Bytes{0x50, 0x43, 0x42, 0x31, 0x01, 0x01, 0x00, 0x00, 0x00, 0x00});
}

TEST_CASE("PiRequest and PiResponse layouts are big-endian") {
  const auto req = encode(PiRequest{0x0102030405060708ULL, 4, 0x11, 0x10000});
  REQUIRE(req.size() == 10 + 28);
  CHECK(req[5] == 0x20);
  CHECK(Bytes(req.begin() + 6, req.begin() + 10) == Bytes{0, 0, 0, 28});
  CHECK(Bytes(req.begin() + 10, req.begin() + 18) == Bytes{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(Bytes(req.begin() + 18, req.begin() + 22) == Bytes{0, 0, 0, 4});

  const auto resp = encode(PiResponse{1.0, 5});
  REQUIRE(resp.size() == 10 + 16);
  // 1.0 = 0x3FF0000000000000
  CHECK(Bytes(resp.begin() + 10, resp.begin() + 18) == Bytes{0x3F, 0xF0, 0, 0, 0, 0, 0, 0});
  CHECK(resp.back() == 5);
}

TEST_CASE("MatvecRequest round trip") {
  MatvecRequest m{7, 2, 3, {1, 2, 3, 4, 5, 6}, {0.5, -1, 2}};
  const auto bytes = encode(m);
  CHECK(bytes.size() == 10 + 12 + 8 * 9);
  const auto decoded = decode(bytes);
  CHECK(decoded.consumed == bytes.size());
  CHECK(std::get<MatvecRequest>(decoded.message) == m);
}

TEST_CASE("ErrorReply text occupies the rest of the payload") {
  const ErrorReply e{2, "bad π"};
  const auto bytes = encode(e);
  CHECK(bytes.size() == 10 + 2 + std::string("bad π").size());
  CHECK(std::get<ErrorReply>(decode(bytes).message) == e);
}

TEST_CASE("decode errors are typed") {
  Bytes garbage = encode(Ping{});
  garbage[0] = 'X';
  CHECK(decode_error(garbage) == ProtocolErrc::bad_magic);

  Bytes version = encode(Ping{});
  version[4] = 2;
  CHECK(decode_error(version) == ProtocolErrc::bad_version);

  Bytes type = encode(Ping{});
  type[5] = 0x55;
  CHECK(decode_error(type) == ProtocolErrc::unknown_type);

  Bytes truncated = encode(PiResponse{3.14, 10});
  truncated.resize(10 + 8);
  CHECK(decode_error(truncated) == ProtocolErrc::truncated);
  CHECK(decode_error(Bytes{0x50, 0x43}) == ProtocolErrc::truncated);

  // Header and bytes agree on 8, but a PiResponse needs 16.
  Bytes short_payload = encode(PiResponse{3.14, 10});
  short_payload.resize(18);
  short_payload[9] = 8;
  CHECK(decode_error(short_payload) == ProtocolErrc::length_mismatch);

  Bytes extra = encode(Pong{});
  extra.push_back(0);
  extra[9] = 1;
  CHECK(decode_error(extra) == ProtocolErrc::length_mismatch);

  Bytes huge = encode(Ping{});
  huge[6] = 0x80;
  huge[9] = 0x01;  // 2^31 + 1
  CHECK(decode_error(huge) == ProtocolErrc::oversize);

  Bytes text = encode(ErrorReply{1, "ok"});
  text.back() = 0xFF;
  CHECK(decode_error(text) == ProtocolErrc::bad_text);
}

TEST_CASE("MatvecRequest dimension lies are caught before allocation") {
  MatvecRequest m{0, 2, 2, {1, 2, 3, 4}, {1, 1}};
  auto bytes = encode(m);
  // Claim 0xFFFFFFFF rows; the payload only holds 6 doubles.
  bytes[14] = bytes[15] = bytes[16] = bytes[17] = 0xFF;
  CHECK(decode_error(bytes) == ProtocolErrc::length_mismatch);
}

TEST_CASE("decode_header respects a caller limit") {
  const auto bytes = encode(PiResponse{1, 1});
  CHECK(decode_header(bytes).payload_len == 16);
  CHECK_THROWS_AS(decode_header(bytes, 8), ProtocolError);
}

TEST_CASE("encode rejects inconsistent messages") {
  CHECK_THROWS_AS(encode(MatvecRequest{0, 2, 2, {1, 2, 3}, {1, 1}}), ProtocolError);
  CHECK_THROWS_AS(encode(MatvecRequest{0, 1, 2, {1, 2}, {1}}), ProtocolError);
  CHECK_THROWS_AS(encode(MatvecResponse{0, 2, {1}}), ProtocolError);
  CHECK_THROWS_AS(encode(ErrorReply{1, std::string("\xC3\x28")}), ProtocolError);
}

TEST_CASE("concatenated frames decode back to the original sequence") {
  std::mt19937_64 gen(99);
  std::vector<Message> messages;
  Bytes stream;
  for (int i = 0; i < 200; ++i) {
    messages.push_back(pcb::testing::random_message(gen));
    const auto bytes = encode(messages.back());
    stream.insert(stream.end(), bytes.begin(), bytes.end());
  }
  CHECK(decode_all(stream) == messages);
}

TEST_CASE("fuzz: round trip and mutated frames") {
  std::mt19937_64 gen(4242);
  int typed_errors = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto msg = pcb::testing::random_message(gen);
    const auto bytes = encode(msg);
    const auto decoded = decode(bytes);
    REQUIRE(decoded.message == msg);
    REQUIRE(type_of(decoded.message) == type_of(msg));
    const auto mutated = pcb::testing::mutate(bytes, gen);
    try {
      (void)decode(mutated);
    } catch (const ProtocolError&) {
      ++typed_errors;
    }
  }
  CHECK(typed_errors > 0);
}

TEST_CASE("payload_bits compact accounting") {
  CHECK(payload_bits(PayloadKind::compact_pi_request, {7, 0, 0}) == 448);
  CHECK(payload_bits(PayloadKind::compact_pi_response, {7, 0, 0}) == 448);
  CHECK(payload_bits(PayloadKind::compact_pi_round_trip, {7, 0, 0}) == 896);
  CHECK(payload_bits(PayloadKind::full_matrix_matvec_task, {7, 3000, 3000}) == 1'152'000'000ULL);
}

TEST_CASE("payload_bits live accounting matches encoded payload sizes") {
  const auto req = encode(PiRequest{1, 1, 1, 1});
  const auto resp = encode(PiResponse{1, 1});
  CHECK(payload_bits(PayloadKind::pi_request, {3, 0, 0}) == 3 * (req.size() - kHeaderSize) * 8);
  CHECK(payload_bits(PayloadKind::pi_response, {3, 0, 0}) == 3 * (resp.size() - kHeaderSize) * 8);

  // Two shards of a 5x4 matrix: rows 3 and 2.
  const auto a = encode(MatvecRequest{0, 3, 4, std::vector<double>(12), std::vector<double>(4)});
  const auto b = encode(MatvecRequest{3, 2, 4, std::vector<double>(8), std::vector<double>(4)});
  const auto ra = encode(MatvecResponse{0, 3, std::vector<double>(3)});
  const auto rb = encode(MatvecResponse{3, 2, std::vector<double>(2)});
  const auto total = a.size() + b.size() + ra.size() + rb.size() - 4 * kHeaderSize;
  CHECK(payload_bits(PayloadKind::matvec_task, {2, 5, 4}) == total * 8);
}

TEST_CASE("payload kinds parse by name") {
  CHECK(parse_payload_kind("compact-pi-round-trip") == PayloadKind::compact_pi_round_trip);
  CHECK(parse_payload_kind("matvec_task") == PayloadKind::matvec_task);
  CHECK_THROWS_AS(parse_payload_kind("nope"), std::invalid_argument);
  CHECK_THROWS_AS(payload_bits(static_cast<PayloadKind>(99), {}), std::invalid_argument);
}
