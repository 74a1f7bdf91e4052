#include "dmatwin/dvb/framing.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmatwin::dvb {

namespace {

constexpr std::size_t kChunk = kPacketSize - 1;
constexpr std::size_t kLengthPrefix = 8;

void require_whole_packets(std::size_t n) {
  if (n % kPacketSize != 0) throw std::invalid_argument("dvb: input is not a whole number of transport packets");
}

std::vector<std::uint8_t> apply_dispersal(std::span<const std::uint8_t> in, bool forward) {
  require_whole_packets(in.size());
  std::vector<std::uint8_t> out(in.size());
  Prbs prbs;
  const std::size_t n_packets = in.size() / kPacketSize;
  for (std::size_t p = 0; p < n_packets; ++p) {
    const std::uint8_t* src = in.data() + p * kPacketSize;
    std::uint8_t* dst = out.data() + p * kPacketSize;
    if (p % kScramblerGroup == 0) {
      if (forward && src[0] != kSyncByte) throw std::invalid_argument("scramble: packet without sync byte");
      prbs.reset();
      dst[0] = forward ? kInvertedSync : kSyncByte;
    } else {
      if (forward && src[0] != kSyncByte) throw std::invalid_argument("scramble: packet without sync byte");
      prbs.next_byte();
      dst[0] = kSyncByte;
    }
    for (std::size_t i = 1; i < kPacketSize; ++i) dst[i] = src[i] ^ prbs.next_byte();
  }
  return out;
}

}  // namespace

std::uint8_t Prbs::next_bit() {
  const auto fb = static_cast<std::uint16_t>(((reg_ >> 13) ^ (reg_ >> 14)) & 1u);
  reg_ = static_cast<std::uint16_t>(((reg_ << 1) | fb) & 0x7FFFu);
  return static_cast<std::uint8_t>(fb);
}

std::uint8_t Prbs::next_byte() {
  std::uint8_t b = 0;
  for (int i = 0; i < 8; ++i) b = static_cast<std::uint8_t>((b << 1) | next_bit());
  return b;
}

std::vector<std::uint8_t> scramble(std::span<const std::uint8_t> packets) { return apply_dispersal(packets, true); }

std::vector<std::uint8_t> descramble(std::span<const std::uint8_t> scrambled) {
  return apply_dispersal(scrambled, false);
}

std::size_t packet_count_for(std::size_t payload_bytes) {
  return (payload_bytes + kLengthPrefix + kChunk - 1) / kChunk;
}

std::vector<std::uint8_t> packetize(std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> framed(kLengthPrefix);
  const std::uint64_t len = payload.size();
  for (std::size_t i = 0; i < kLengthPrefix; ++i) framed[i] = static_cast<std::uint8_t>(len >> (8 * i));
  framed.insert(framed.end(), payload.begin(), payload.end());

  const std::size_t n_packets = packet_count_for(payload.size());
  std::vector<std::uint8_t> out(n_packets * kPacketSize, 0);
  for (std::size_t p = 0; p < n_packets; ++p) {
    out[p * kPacketSize] = kSyncByte;
    const std::size_t from = p * kChunk;
    const std::size_t take = std::min(kChunk, framed.size() - from);
    std::copy_n(framed.begin() + static_cast<std::ptrdiff_t>(from), take,
                out.begin() + static_cast<std::ptrdiff_t>(p * kPacketSize + 1));
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> depacketize(std::span<const std::uint8_t> packets) {
  if (packets.empty() || packets.size() % kPacketSize != 0) return std::nullopt;
  std::vector<std::uint8_t> framed;
  framed.reserve(packets.size());
  for (std::size_t p = 0; p < packets.size() / kPacketSize; ++p) {
    if (packets[p * kPacketSize] != kSyncByte) return std::nullopt;
    auto chunk = packets.subspan(p * kPacketSize + 1, kChunk);
    framed.insert(framed.end(), chunk.begin(), chunk.end());
  }
  std::uint64_t len = 0;
  for (std::size_t i = 0; i < kLengthPrefix; ++i) len |= std::uint64_t{framed[i]} << (8 * i);
  if (len > framed.size() - kLengthPrefix) return std::nullopt;
  return std::vector<std::uint8_t>(framed.begin() + kLengthPrefix,
                                   framed.begin() + static_cast<std::ptrdiff_t>(kLengthPrefix + len));
}

}  // namespace dmatwin::dvb
