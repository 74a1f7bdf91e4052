#include <algorithm>
#include <stdexcept>
#include <map>
#include <random>
#include <set>

#include "dmatwin/dvb/interleaver.hpp"
#include "dmatwin/dvb/reed_solomon.hpp"
#include "doctest.h"

using namespace dmatwin::dvb;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

}  // namespace

TEST_CASE("delay constants") {
  CHECK(kInterleaverDepth * kInterleaverCell == kRsCodeword);
  CHECK(kInterleaverDelay == 2244);
}

TEST_CASE("branch delays") {
  // Input byte n goes to branch n mod 12 and is delayed by (n mod 12) * 17
  // commutator cycles of 12 bytes each.
  std::vector<std::uint8_t> in(5000, 0);
  for (std::size_t probe : {0u, 1u, 5u, 11u, 12u, 13u, 250u}) {
    std::fill(in.begin(), in.end(), 0);
    in[probe] = 0xEE;
    const auto out = outer_interleave(in);
    const std::size_t expected = probe + (probe % 12) * 17 * 12;
    REQUIRE(expected < out.size());
    CHECK(out[expected] == 0xEE);
    CHECK(std::count(out.begin(), out.end(), 0xEE) == 1);
  }
  // Byte 0 passes straight through; byte 1 emerges at 1 + 204.
  std::fill(in.begin(), in.end(), 0);
  in[1] = 0x5A;
  CHECK(outer_interleave(in)[205] == 0x5A);
}

TEST_CASE("deinterleave after interleave is a pure delay") {
  const auto data = random_bytes(204 * 40, 1);
  auto padded = data;
  padded.resize(data.size() + kInterleaverDelay, 0);
  const auto out = outer_deinterleave(outer_interleave(padded));
  REQUIRE(out.size() == padded.size());
  CHECK(std::equal(data.begin(), data.end(), out.begin() + kInterleaverDelay));
  for (std::size_t i = 0; i < kInterleaverDelay; ++i) CHECK(out[i] == 0);
}

TEST_CASE("streaming in pieces equals one call") {
  const auto data = random_bytes(3001, 2);
  ConvolutionalInterleaver a(ConvolutionalInterleaver::Direction::Interleave);
  std::vector<std::uint8_t> pieces;
  for (std::size_t i = 0; i < data.size(); i += 97) {
    const auto part = a.process(std::span(data).subspan(i, std::min<std::size_t>(97, data.size() - i)));
    pieces.insert(pieces.end(), part.begin(), part.end());
  }
  CHECK(pieces == outer_interleave(data));
  a.reset();
  CHECK(a.process(data) == outer_interleave(data));
}

TEST_CASE("channel bursts spread across codewords") {
  const std::size_t n_cw = 60;
  const auto data = random_bytes(204 * n_cw, 3);
  auto padded = data;
  padded.resize(data.size() + kInterleaverDelay, 0);
  const auto tx = outer_interleave(padded);

  for (std::size_t burst : {1u, 5u, 12u, 17u}) {
    for (std::size_t start : {3000u, 4321u, 6000u}) {
      auto rx = tx;
      for (std::size_t i = 0; i < burst; ++i) rx[start + i] ^= 0xFF;
      const auto out = outer_deinterleave(rx);
      std::map<std::size_t, int> per_codeword;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (out[i + kInterleaverDelay] != data[i]) ++per_codeword[i / 204];
      int total = 0, worst = 0;
      for (const auto& [cw, n] : per_codeword) total += n, worst = std::max(worst, n);
      CHECK(total == static_cast<int>(burst));
      if (burst <= kInterleaverDepth) CHECK(per_codeword.size() == burst);
      else CHECK(per_codeword.size() >= kInterleaverDepth);
      CHECK(worst <= static_cast<int>((burst + kInterleaverDepth - 1) / kInterleaverDepth));
    }
  }
}

TEST_CASE("interleaver rejects zero sizes") {
  using D = ConvolutionalInterleaver::Direction;
  CHECK_THROWS(ConvolutionalInterleaver(D::Interleave, 0, 17));
  CHECK_THROWS(ConvolutionalInterleaver(D::Interleave, 12, 0));
}
