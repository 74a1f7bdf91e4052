#include "dmatwin/dvb/interleaver.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmatwin::dvb {

ConvolutionalInterleaver::ConvolutionalInterleaver(Direction dir, std::size_t depth, std::size_t cell) {
  if (depth == 0 || cell == 0) throw std::invalid_argument("interleaver: depth and cell must be positive");
  branches_.resize(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    const std::size_t cells = dir == Direction::Interleave ? j : depth - 1 - j;
    branches_[j].buf.assign(cells * cell, 0);
  }
}

std::uint8_t ConvolutionalInterleaver::push(std::uint8_t in) {
  Fifo& f = branches_[branch_];
  branch_ = (branch_ + 1) % branches_.size();
  if (f.buf.empty()) return in;
  const std::uint8_t out = f.buf[f.head];
  f.buf[f.head] = in;
  f.head = (f.head + 1) % f.buf.size();
  return out;
}

std::vector<std::uint8_t> ConvolutionalInterleaver::process(std::span<const std::uint8_t> in) {
  std::vector<std::uint8_t> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = push(in[i]);
  return out;
}

void ConvolutionalInterleaver::reset() {
  for (auto& f : branches_) {
    std::fill(f.buf.begin(), f.buf.end(), 0);
    f.head = 0;
  }
  branch_ = 0;
}

std::vector<std::uint8_t> outer_interleave(std::span<const std::uint8_t> bytes) {
  return ConvolutionalInterleaver(ConvolutionalInterleaver::Direction::Interleave).process(bytes);
}

std::vector<std::uint8_t> outer_deinterleave(std::span<const std::uint8_t> bytes) {
  return ConvolutionalInterleaver(ConvolutionalInterleaver::Direction::Deinterleave).process(bytes);
}

}  // namespace dmatwin::dvb
