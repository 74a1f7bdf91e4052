#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dmatwin::dvb {

inline constexpr std::size_t kPacketSize = 188;
inline constexpr std::uint8_t kSyncByte = 0x47;
inline constexpr std::uint8_t kInvertedSync = 0xB8;
inline constexpr std::size_t kScramblerGroup = 8;

// Payload framing: an 8-byte little-endian length prefix followed by the
// payload, cut into 187-byte chunks behind a sync byte; the tail is zero padded.
std::vector<std::uint8_t> packetize(std::span<const std::uint8_t> payload);
std::size_t packet_count_for(std::size_t payload_bytes);

// Inverse of packetize. Empty when the framing is inconsistent.
std::optional<std::vector<std::uint8_t>> depacketize(std::span<const std::uint8_t> packets);

// Energy dispersal PRBS 1 + x^14 + x^15, seeded with 100101010000000.
class Prbs {
 public:
  Prbs() { reset(); }
  void reset() { reg_ = 0x00A9; }
  std::uint8_t next_bit();
  std::uint8_t next_byte();

 private:
  std::uint16_t reg_;
};

// Scrambles whole transport packets. The PRBS restarts every 8 packets and the
// first sync byte of each group is inverted; the other sync bytes pass in the
// clear while the PRBS keeps running.
std::vector<std::uint8_t> scramble(std::span<const std::uint8_t> packets);
std::vector<std::uint8_t> descramble(std::span<const std::uint8_t> scrambled);

}  // namespace dmatwin::dvb
