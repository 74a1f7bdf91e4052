#include <array>
#include <stdexcept>
#include <numeric>
#include <random>

#include "dmatwin/dvb/framing.hpp"
#include "doctest.h"

using namespace dmatwin::dvb;

namespace {

// Fifteen-stage register as drawn in the DVB-S energy dispersal figure:
// stages 1..15 loaded with 100101010000000, output = stage14 XOR stage15,
// fed back into stage 1.
std::vector<std::uint8_t> reference_prbs_bits(std::size_t n) {
  std::array<int, 16> s{};
  const char* init = "100101010000000";
  for (int i = 1; i <= 15; ++i) s[i] = init[i - 1] - '0';
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    const int bit = s[14] ^ s[15];
    for (int i = 15; i > 1; --i) s[i] = s[i - 1];
    s[1] = bit;
    out.push_back(static_cast<std::uint8_t>(bit));
  }
  return out;
}

std::vector<std::uint8_t> random_bytes(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

}  // namespace

TEST_CASE("prbs matches the shift register recurrence") {
  const auto ref = reference_prbs_bits(4096);
  Prbs p;
  for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(p.next_bit() == ref[i]);
  p.reset();
  // Known leading bytes of the dispersal sequence.
  CHECK(p.next_byte() == 0x03);
  CHECK(p.next_byte() == 0xF6);
}

TEST_CASE("prbs period is 2^15 - 1") {
  Prbs p;
  std::vector<std::uint8_t> first(64);
  for (auto& b : first) b = p.next_bit();
  for (int i = 64; i < 32767; ++i) p.next_bit();
  for (auto b : first) CHECK(p.next_bit() == b);
}

TEST_CASE("packetize round trip") {
  for (std::size_t n : {0u, 1u, 179u, 180u, 181u, 187u, 1000u, 20000u}) {
    const auto payload = random_bytes(n, static_cast<unsigned>(n));
    const auto packets = packetize(payload);
    REQUIRE(packets.size() % kPacketSize == 0);
    CHECK(packets.size() / kPacketSize == packet_count_for(n));
    for (std::size_t p = 0; p < packets.size(); p += kPacketSize) CHECK(packets[p] == kSyncByte);
    const auto back = depacketize(packets);
    REQUIRE(back.has_value());
    CHECK(*back == payload);
  }
  CHECK(packet_count_for(179) == 1);
  CHECK(packet_count_for(180) == 2);
}

TEST_CASE("depacketize rejects inconsistent framing") {
  auto packets = packetize(random_bytes(500, 3));
  CHECK_FALSE(depacketize(std::span(packets).first(100)).has_value());
  packets[1] = 0xFF;  // length prefix far beyond the data
  packets[8] = 0xFF;
  CHECK_FALSE(depacketize(packets).has_value());
  auto bad_sync = packetize(random_bytes(500, 4));
  bad_sync[kPacketSize] = 0x00;
  CHECK_FALSE(depacketize(bad_sync).has_value());
}

TEST_CASE("scrambler") {
  const auto packets = packetize(random_bytes(187 * 20, 9));
  const auto s = scramble(packets);
  REQUIRE(s.size() == packets.size());
  for (std::size_t p = 0; p < s.size() / kPacketSize; ++p)
    CHECK(s[p * kPacketSize] == (p % kScramblerGroup == 0 ? kInvertedSync : kSyncByte));
  CHECK(s != packets);
  CHECK(descramble(s) == packets);

  SUBCASE("first payload byte of a group is xored with the first prbs byte") {
    Prbs p;
    CHECK((s[1] ^ packets[1]) == p.next_byte());
  }
  SUBCASE("prbs keeps running over non-inverted sync bytes") {
    // Second packet's first payload byte uses PRBS byte 188 (byte 187 is skipped
    // under the sync).
    Prbs p;
    for (int i = 0; i < 188; ++i) p.next_byte();
    CHECK((s[kPacketSize + 1] ^ packets[kPacketSize + 1]) == p.next_byte());
  }
  SUBCASE("zero data yields the raw sequence") {
    std::vector<std::uint8_t> zeros(kPacketSize * 8, 0);
    for (std::size_t i = 0; i < zeros.size(); i += kPacketSize) zeros[i] = kSyncByte;
    const auto z = scramble(zeros);
    const auto bits = reference_prbs_bits(8 * 8 * kPacketSize);
    for (int k = 0; k < 8; ++k) {
      std::uint8_t b = 0;
      for (int j = 0; j < 8; ++j) b = static_cast<std::uint8_t>((b << 1) | bits[8 * k + j]);
      CHECK(z[1 + k] == b);
    }
  }
  CHECK_THROWS_AS(scramble(std::span(packets).first(100)), std::invalid_argument);
  auto no_sync = packets;
  no_sync[0] = 0;
  CHECK_THROWS_AS(scramble(no_sync), std::invalid_argument);
}
