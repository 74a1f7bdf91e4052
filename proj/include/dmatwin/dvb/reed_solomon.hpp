#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dmatwin::dvb {

inline constexpr std::size_t kRsData = 188;
inline constexpr std::size_t kRsCodeword = 204;
inline constexpr std::size_t kRsParity = kRsCodeword - kRsData;
inline constexpr int kRsCorrectable = 8;

// GF(2^8) with field polynomial x^8 + x^4 + x^3 + x^2 + 1.
namespace gf256 {
std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t div(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);
std::uint8_t pow_alpha(int e);
}  // namespace gf256

struct RsDecodeResult {
  std::vector<std::uint8_t> data;
  int corrected = 0;
  bool uncorrectable = false;
};

// Systematic RS(204,188,T=8), shortened from RS(255,239); the 16 parity bytes
// follow the data.
std::vector<std::uint8_t> rs_encode(std::span<const std::uint8_t> block);

// Corrects up to 8 byte errors. Beyond that the block is flagged and the
// received data bytes are returned unchanged.
RsDecodeResult rs_decode(std::span<const std::uint8_t> codeword);

}  // namespace dmatwin::dvb
