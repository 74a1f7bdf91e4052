#include "dmatwin/dvb/convolutional.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>

namespace dmatwin::dvb {

namespace {

constexpr int kStates = 1 << (kConstraintLength - 1);

struct Branch {
  std::uint8_t x;
  std::uint8_t y;
};

// Encoder output for register state `s` (bit 5 = most recent input) and input b.
Branch branch_output(unsigned s, unsigned b) {
  const unsigned reg = (b << (kConstraintLength - 1)) | s;
  return {static_cast<std::uint8_t>(std::popcount(reg & kPolyX) & 1),
          static_cast<std::uint8_t>(std::popcount(reg & kPolyY) & 1)};
}

const std::array<std::array<Branch, 2>, kStates>& branch_table() {
  static const auto table = [] {
    std::array<std::array<Branch, 2>, kStates> t{};
    for (unsigned s = 0; s < kStates; ++s)
      for (unsigned b = 0; b < 2; ++b) t[s][b] = branch_output(s, b);
    return t;
  }();
  return table;
}

}  // namespace

std::size_t Puncture::kept_per_period() const {
  return static_cast<std::size_t>(std::count(x.begin(), x.end(), '1') + std::count(y.begin(), y.end(), '1'));
}

void Puncture::validate() const {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("puncture: X and Y rows must match in length");
  for (char c : x + y)
    if (c != '0' && c != '1') throw std::invalid_argument("puncture: rows must be binary");
  if (kept_per_period() == 0) throw std::invalid_argument("puncture: pattern keeps no bits");
}

std::vector<std::uint8_t> conv_encode(std::span<const std::uint8_t> bits, const Puncture& punct) {
  punct.validate();
  if (bits.size() % punct.period() != 0)
    throw std::invalid_argument("conv_encode: input length is not a multiple of the puncturing period");
  std::vector<std::uint8_t> out;
  out.reserve(bits.size() / punct.period() * punct.kept_per_period());
  unsigned state = 0;
  for (std::size_t t = 0; t < bits.size(); ++t) {
    const unsigned b = bits[t] & 1u;
    const Branch o = branch_output(state, b);
    const std::size_t slot = t % punct.period();
    if (punct.x[slot] == '1') out.push_back(o.x);
    if (punct.y[slot] == '1') out.push_back(o.y);
    state = ((b << (kConstraintLength - 1)) | state) >> 1;
  }
  return out;
}

std::vector<std::uint8_t> terminate_bits(std::span<const std::uint8_t> bits, const Puncture& punct) {
  punct.validate();
  std::vector<std::uint8_t> out(bits.begin(), bits.end());
  out.resize(out.size() + kTailBits, 0);
  const std::size_t p = punct.period();
  out.resize((out.size() + p - 1) / p * p, 0);
  return out;
}

std::vector<std::uint8_t> viterbi_decode(std::span<const float> soft, std::size_t n_bits, const Puncture& punct,
                                         bool terminated) {
  punct.validate();
  if (n_bits % punct.period() != 0 || soft.size() != n_bits / punct.period() * punct.kept_per_period())
    throw std::invalid_argument("viterbi_decode: soft input does not align with the puncturing pattern");

  const auto& table = branch_table();
  constexpr double kUnreached = -1e300;
  std::array<double, kStates> pm;
  pm.fill(kUnreached);
  pm[0] = 0.0;
  std::array<double, kStates> next{};
  std::vector<std::uint64_t> decisions(n_bits);

  std::size_t idx = 0;
  for (std::size_t t = 0; t < n_bits; ++t) {
    const std::size_t slot = t % punct.period();
    const double lx = punct.x[slot] == '1' ? soft[idx++] : 0.0;
    const double ly = punct.y[slot] == '1' ? soft[idx++] : 0.0;
    std::uint64_t dec = 0;
    for (unsigned ns = 0; ns < kStates; ++ns) {
      const unsigned b = ns >> (kConstraintLength - 2);
      double best = kUnreached;
      unsigned choice = 0;
      for (unsigned lsb = 0; lsb < 2; ++lsb) {
        const unsigned p = ((ns & (kStates / 2 - 1)) << 1) | lsb;
        if (pm[p] <= kUnreached) continue;
        const Branch o = table[p][b];
        const double m = pm[p] + (o.x ? -lx : lx) + (o.y ? -ly : ly);
        if (m > best) {
          best = m;
          choice = lsb;
        }
      }
      next[ns] = best;
      dec |= std::uint64_t{choice} << ns;
    }
    decisions[t] = dec;
    const double top = *std::max_element(next.begin(), next.end());
    for (unsigned s = 0; s < kStates; ++s) pm[s] = next[s] <= kUnreached ? kUnreached : next[s] - top;
  }

  unsigned state = 0;
  if (!terminated) state = static_cast<unsigned>(std::max_element(pm.begin(), pm.end()) - pm.begin());
  std::vector<std::uint8_t> out(n_bits);
  for (std::size_t t = n_bits; t-- > 0;) {
    out[t] = static_cast<std::uint8_t>(state >> (kConstraintLength - 2));
    const unsigned lsb = static_cast<unsigned>((decisions[t] >> state) & 1u);
    state = ((state & (kStates / 2 - 1)) << 1) | lsb;
  }
  return out;
}

}  // namespace dmatwin::dvb
