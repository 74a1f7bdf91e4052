#include <random>
#include <stdexcept>

#include "dmatwin/dvb/convolutional.hpp"
#include "doctest.h"

using namespace dmatwin::dvb;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng() & 1);
  return v;
}

std::vector<float> to_soft(const std::vector<std::uint8_t>& bits) {
  std::vector<float> s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? -1.0f : 1.0f;
  return s;
}

}  // namespace

TEST_CASE("mother code impulse response") {
  std::vector<std::uint8_t> impulse(8, 0);
  impulse[0] = 1;
  const auto out = conv_encode(impulse, Puncture::rate_1_2());
  REQUIRE(out.size() == 16);
  // G1 = 171 octal -> 1111001, G2 = 133 octal -> 1011011.
  const char* x = "11110010";
  const char* y = "10110110";
  for (int i = 0; i < 8; ++i) {
    CHECK(out[2 * i] == x[i] - '0');
    CHECK(out[2 * i + 1] == y[i] - '0');
  }
}

TEST_CASE("rate 5/6 puncturing keeps X1 Y1 Y2 X3 Y4 X5") {
  const auto bits = random_bits(500, 4);
  const auto mother = conv_encode(bits, Puncture::rate_1_2());
  const auto punct = conv_encode(bits, Puncture::rate_5_6());
  REQUIRE(punct.size() == 600);
  for (std::size_t p = 0; p < 100; ++p) {
    const auto* m = &mother[10 * p];  // X1 Y1 X2 Y2 ... X5 Y5
    const auto* q = &punct[6 * p];
    CHECK(q[0] == m[0]);
    CHECK(q[1] == m[1]);
    CHECK(q[2] == m[3]);
    CHECK(q[3] == m[4]);
    CHECK(q[4] == m[7]);
    CHECK(q[5] == m[8]);
  }
}

TEST_CASE("rate check and zero input") {
  for (std::size_t k : {1u, 2u, 7u, 100u}) CHECK(conv_encode(random_bits(5 * k, 1), Puncture::rate_5_6()).size() == 6 * k);
  const std::vector<std::uint8_t> zeros(1000, 0);
  const auto out = conv_encode(zeros);
  CHECK(std::all_of(out.begin(), out.end(), [](std::uint8_t b) { return b == 0; }));
  CHECK(Puncture::rate_5_6().kept_per_period() == 6);
}

TEST_CASE("alignment errors") {
  CHECK_THROWS_AS(conv_encode(random_bits(7, 1), Puncture::rate_5_6()), std::invalid_argument);
  CHECK_THROWS_AS(viterbi_decode(std::vector<float>(7, 1.0f), 5, Puncture::rate_5_6()), std::invalid_argument);
  CHECK_THROWS(Puncture{"101", "11"}.validate());
  CHECK_THROWS(Puncture{"00", "00"}.validate());
  const auto t = terminate_bits(random_bits(12, 2), Puncture::rate_5_6());
  CHECK(t.size() % 5 == 0);
  CHECK(t.size() >= 18);
}

TEST_CASE("noiseless round trip") {
  for (const auto& p : {Puncture::rate_5_6(), Puncture::rate_1_2(), Puncture{"101", "110"}}) {
    const auto bits = random_bits(100000, 9);
    const auto info = terminate_bits(bits, p);
    const auto coded = conv_encode(info, p);
    const auto decoded = viterbi_decode(to_soft(coded), info.size(), p, true);
    REQUIRE(decoded.size() == info.size());
    std::size_t errors = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) errors += decoded[i] != bits[i];
    CHECK(errors == 0);
  }
}

TEST_CASE("unterminated decode of a clean stream") {
  const auto bits = random_bits(5000, 10);
  const auto coded = conv_encode(bits);
  const auto decoded = viterbi_decode(to_soft(coded), bits.size(), Puncture::rate_5_6(), false);
  CHECK(decoded == bits);
}

TEST_CASE("soft decoding corrects channel errors") {
  // BPSK over AWGN at Eb/N0 = 6 dB on the 1/2 mother code.
  const auto bits = random_bits(20000, 11);
  const auto p = Puncture::rate_1_2();
  const auto info = terminate_bits(bits, p);
  const auto coded = conv_encode(info, p);
  const double ebn0 = std::pow(10.0, 0.6);
  const double sigma = std::sqrt(1.0 / (2.0 * 0.5 * ebn0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<float> soft(coded.size());
  std::size_t raw = 0;
  for (std::size_t i = 0; i < coded.size(); ++i) {
    const double y = (coded[i] ? -1.0 : 1.0) + n(rng);
    raw += (y < 0.0) != (coded[i] == 1);
    soft[i] = static_cast<float>(2.0 * y / (sigma * sigma));
  }
  const auto decoded = viterbi_decode(soft, info.size(), p, true);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) errors += decoded[i] != bits[i];
  CHECK(raw > 500);
  CHECK(errors * 50 < raw);
}
