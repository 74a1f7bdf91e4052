#include "dmatwin/dvb/reed_solomon.hpp"

#include <stdexcept>

namespace dmatwin::dvb {

namespace {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};
  // Generator polynomial prod_{i=0}^{15} (x - alpha^i), highest degree first.
  std::array<std::uint8_t, kRsParity + 1> gen{};

  Tables() {
    int x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= 0x11D;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;

    std::vector<std::uint8_t> g{1};
    for (std::size_t r = 0; r < kRsParity; ++r) {
      std::vector<std::uint8_t> next(g.size() + 1, 0);
      const std::uint8_t root = exp[r];
      for (std::size_t i = 0; i < g.size(); ++i) {
        next[i] ^= g[i];
        next[i + 1] ^= mul(g[i], root);
      }
      g = std::move(next);
    }
    for (std::size_t i = 0; i < gen.size(); ++i) gen[i] = g[i];
  }

  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp[log[a] + log[b]];
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

using Poly = std::vector<std::uint8_t>;  // lowest degree first

std::uint8_t poly_eval(const Poly& p, std::uint8_t x) {
  std::uint8_t acc = 0;
  for (std::size_t i = p.size(); i-- > 0;) acc = static_cast<std::uint8_t>(gf256::mul(acc, x) ^ p[i]);
  return acc;
}

std::array<std::uint8_t, kRsParity> syndromes(std::span<const std::uint8_t> r) {
  std::array<std::uint8_t, kRsParity> s{};
  for (std::size_t j = 0; j < kRsParity; ++j) {
    const std::uint8_t a = gf256::pow_alpha(static_cast<int>(j));
    std::uint8_t acc = 0;
    for (std::uint8_t byte : r) acc = static_cast<std::uint8_t>(gf256::mul(acc, a) ^ byte);
    s[j] = acc;
  }
  return s;
}

}  // namespace

namespace gf256 {
std::uint8_t mul(std::uint8_t a, std::uint8_t b) { return tables().mul(a, b); }
std::uint8_t pow_alpha(int e) {
  e %= 255;
  if (e < 0) e += 255;
  return tables().exp[static_cast<std::size_t>(e)];
}
std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw std::domain_error("gf256: inverse of zero");
  return tables().exp[static_cast<std::size_t>(255 - tables().log[a])];
}
std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }
}  // namespace gf256

std::vector<std::uint8_t> rs_encode(std::span<const std::uint8_t> block) {
  if (block.size() != kRsData) throw std::invalid_argument("rs_encode: block must be 188 bytes");
  const auto& g = tables().gen;
  std::array<std::uint8_t, kRsParity> p{};
  for (std::uint8_t d : block) {
    const std::uint8_t fb = d ^ p[0];
    for (std::size_t j = 0; j + 1 < kRsParity; ++j) p[j] = p[j + 1] ^ gf256::mul(fb, g[j + 1]);
    p[kRsParity - 1] = gf256::mul(fb, g[kRsParity]);
  }
  std::vector<std::uint8_t> out(block.begin(), block.end());
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

RsDecodeResult rs_decode(std::span<const std::uint8_t> codeword) {
  if (codeword.size() != kRsCodeword) throw std::invalid_argument("rs_decode: codeword must be 204 bytes");
  RsDecodeResult res;
  res.data.assign(codeword.begin(), codeword.begin() + kRsData);

  const auto s = syndromes(codeword);
  bool clean = true;
  for (auto v : s) clean = clean && v == 0;
  if (clean) return res;

  // Berlekamp-Massey.
  Poly c{1}, b{1};
  int l = 0;
  int m = 1;
  std::uint8_t bd = 1;
  for (std::size_t n = 0; n < kRsParity; ++n) {
    std::uint8_t d = s[n];
    for (int i = 1; i <= l && i < static_cast<int>(c.size()); ++i)
      d ^= gf256::mul(c[static_cast<std::size_t>(i)], s[n - static_cast<std::size_t>(i)]);
    if (d == 0) {
      ++m;
      continue;
    }
    const std::uint8_t coef = gf256::div(d, bd);
    Poly t = c;
    if (c.size() < b.size() + static_cast<std::size_t>(m)) c.resize(b.size() + static_cast<std::size_t>(m), 0);
    for (std::size_t i = 0; i < b.size(); ++i) c[i + static_cast<std::size_t>(m)] ^= gf256::mul(coef, b[i]);
    if (2 * l <= static_cast<int>(n)) {
      l = static_cast<int>(n) + 1 - l;
      b = std::move(t);
      bd = d;
      m = 1;
    } else {
      ++m;
    }
  }
  while (c.size() > 1 && c.back() == 0) c.pop_back();
  const int degree = static_cast<int>(c.size()) - 1;
  if (degree != l || l > kRsCorrectable) {
    res.uncorrectable = true;
    return res;
  }

  // Error evaluator Omega = S * Lambda mod x^16, and Lambda'.
  Poly omega(kRsParity, 0);
  for (std::size_t i = 0; i < kRsParity; ++i)
    for (std::size_t j = 0; j < c.size() && i + j < kRsParity; ++j) omega[i + j] ^= gf256::mul(s[i], c[j]);
  Poly dlambda(c.size() > 1 ? c.size() - 1 : 1, 0);
  for (std::size_t i = 1; i < c.size(); i += 2) dlambda[i - 1] = c[i];

  // Chien search over the 204 transmitted positions; byte i has power 203 - i.
  std::vector<std::uint8_t> fixed(codeword.begin(), codeword.end());
  int found = 0;
  for (std::size_t i = 0; i < kRsCodeword; ++i) {
    const int power = static_cast<int>(kRsCodeword - 1 - i);
    const std::uint8_t x_inv = gf256::pow_alpha(-power);
    if (poly_eval(c, x_inv) != 0) continue;
    const std::uint8_t denom = poly_eval(dlambda, x_inv);
    if (denom == 0) {
      res.uncorrectable = true;
      return res;
    }
    const std::uint8_t x = gf256::pow_alpha(power);
    fixed[i] ^= gf256::mul(x, gf256::div(poly_eval(omega, x_inv), denom));
    ++found;
  }
  if (found != l) {
    res.uncorrectable = true;
    return res;
  }
  for (auto v : syndromes(fixed)) {
    if (v != 0) {
      res.uncorrectable = true;
      return res;
    }
  }
  res.data.assign(fixed.begin(), fixed.begin() + kRsData);
  res.corrected = found;
  return res;
}

}  // namespace dmatwin::dvb
