#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dmatwin::dvb {

inline constexpr std::size_t kInterleaverDepth = 12;  // I, branches
inline constexpr std::size_t kInterleaverCell = 17;   // M = 204 / I bytes per delay cell
// End-to-end delay of interleaver + deinterleaver in bytes: I * M * (I - 1).
inline constexpr std::size_t kInterleaverDelay = kInterleaverDepth * kInterleaverCell * (kInterleaverDepth - 1);

// Forney convolutional interleaver. Branch j delays by j * M (interleaver) or
// (I - 1 - j) * M (deinterleaver) commutator cycles. Delay lines start zeroed.
class ConvolutionalInterleaver {
 public:
  enum class Direction { Interleave, Deinterleave };

  explicit ConvolutionalInterleaver(Direction dir, std::size_t depth = kInterleaverDepth,
                                    std::size_t cell = kInterleaverCell);

  std::uint8_t push(std::uint8_t in);
  std::vector<std::uint8_t> process(std::span<const std::uint8_t> in);
  void reset();

 private:
  struct Fifo {
    std::vector<std::uint8_t> buf;
    std::size_t head = 0;
  };
  std::vector<Fifo> branches_;
  std::size_t branch_ = 0;
};

std::vector<std::uint8_t> outer_interleave(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> outer_deinterleave(std::span<const std::uint8_t> bytes);

}  // namespace dmatwin::dvb
