#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace dmatwin::dvb {

using cplx = std::complex<double>;

// Gray QPSK with unit symbol energy. Bit pair (b0, b1) maps to
// ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2), so 00 lands in the first quadrant.
std::vector<cplx> qpsk_map(std::span<const std::uint8_t> bits);

// Per-bit LLRs (positive favours 0). `noise_var` is the complex noise variance
// per symbol; a non-positive value yields unscaled metrics.
std::vector<float> qpsk_demap(std::span<const cplx> symbols, double noise_var);
std::vector<std::uint8_t> qpsk_hard(std::span<const cplx> symbols);

// RMS error vector relative to the RMS reference magnitude, in percent.
double evm_percent(std::span<const cplx> received, std::span<const cplx> reference);

// Root-raised-cosine taps spanning +-span_symbols, normalized to unit energy.
std::vector<double> rrc_taps(double rolloff, int samples_per_symbol, int span_symbols);

// Full linear convolution, length x.size() + taps.size() - 1.
std::vector<cplx> direct_convolve(std::span<const cplx> x, std::span<const double> taps);

// Overlap-save FFT convolution with the same output as direct_convolve.
// fft_size 0 picks a power of two of at least 4x the tap count.
std::vector<cplx> fast_conv_filter(std::span<const cplx> x, std::span<const double> taps,
                                   std::size_t fft_size = 0);

std::vector<cplx> upsample(std::span<const cplx> symbols, int factor);
std::vector<cplx> decimate(std::span<const cplx> samples, int factor, std::size_t offset, std::size_t count);

}  // namespace dmatwin::dvb
