#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dmatwin::dvb {

inline constexpr int kConstraintLength = 7;
inline constexpr int kTailBits = kConstraintLength - 1;
inline constexpr unsigned kPolyX = 0171;  // G1, octal
inline constexpr unsigned kPolyY = 0133;  // G2, octal

// Puncturing matrix over one period; '1' keeps the bit. Kept bits go out in
// time order, X before Y within a period slot.
struct Puncture {
  std::string x;
  std::string y;

  std::size_t period() const { return x.size(); }
  std::size_t kept_per_period() const;
  void validate() const;

  static Puncture rate_1_2() { return {"1", "1"}; }
  // X: 10101, Y: 11010, transmitted as X1 Y1 Y2 X3 Y4 X5.
  static Puncture rate_5_6() { return {"10101", "11010"}; }
};

// K=7 mother code, rate 1/2, starting in the zero state. Input length must be
// a multiple of the puncturing period.
std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> bits,
                                      const Puncture& punct = Puncture::rate_5_6());

// Appends the zero tail that returns the encoder to state 0, then zero pads
// to a whole puncturing period.
std::vector<std::uint8_t> terminate_bits(std::span<const std::uint8_t> bits,
                                         const Puncture& punct = Puncture::rate_5_6());

// Soft-input Viterbi. `soft` holds one metric per transmitted bit, positive
// meaning 0. With `terminated`, the traceback starts from state 0.
std::vector<std::uint8_t> viterbi_decode(std::span<const float> soft, std::size_t n_bits,
                                         const Puncture& punct = Puncture::rate_5_6(),
                                         bool terminated = true);

}  // namespace dmatwin::dvb
