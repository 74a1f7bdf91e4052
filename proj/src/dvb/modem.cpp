#include "dmatwin/dvb/modem.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace dmatwin::dvb {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// fftw_plan_* is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer make_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer(p);
}

class Plan {
 public:
  Plan(std::size_t n, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("fftw: planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void run() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

std::vector<cplx> qpsk_map(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_map: odd bit count");
  std::vector<cplx> out(bits.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double re = bits[2 * i] ? -kInvSqrt2 : kInvSqrt2;
    const double im = bits[2 * i + 1] ? -kInvSqrt2 : kInvSqrt2;
    out[i] = {re, im};
  }
  return out;
}

std::vector<float> qpsk_demap(std::span<const cplx> symbols, double noise_var) {
  // LLR of a BPSK component with amplitude 1/sqrt(2) and variance N0/2.
  const double scale = noise_var > 0.0 ? 2.0 * std::sqrt(2.0) / noise_var : std::sqrt(2.0);
  std::vector<float> out(symbols.size() * 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out[2 * i] = static_cast<float>(scale * symbols[i].real());
    out[2 * i + 1] = static_cast<float>(scale * symbols[i].imag());
  }
  return out;
}

std::vector<std::uint8_t> qpsk_hard(std::span<const cplx> symbols) {
  std::vector<std::uint8_t> out(symbols.size() * 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out[2 * i] = symbols[i].real() < 0.0;
    out[2 * i + 1] = symbols[i].imag() < 0.0;
  }
  return out;
}

double evm_percent(std::span<const cplx> received, std::span<const cplx> reference) {
  if (received.size() != reference.size()) throw std::invalid_argument("evm: length mismatch");
  if (reference.empty()) return 0.0;
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < received.size(); ++i) {
    err += std::norm(received[i] - reference[i]);
    ref += std::norm(reference[i]);
  }
  return ref > 0.0 ? 100.0 * std::sqrt(err / ref) : 0.0;
}

std::vector<double> rrc_taps(double rolloff, int samples_per_symbol, int span_symbols) {
  if (!(rolloff > 0.0 && rolloff <= 1.0) || samples_per_symbol < 1 || span_symbols < 1)
    throw std::invalid_argument("rrc_taps: bad parameters");
  const int half = span_symbols * samples_per_symbol;
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  const double a = rolloff;
  for (int i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / samples_per_symbol;
    double v;
    if (i == 0) {
      v = 1.0 - a + 4.0 * a / kPi;
    } else if (std::abs(std::abs(4.0 * a * t) - 1.0) < 1e-12) {
      v = a / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
    } else {
      v = (std::sin(kPi * t * (1.0 - a)) + 4.0 * a * t * std::cos(kPi * t * (1.0 + a))) /
          (kPi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t)));
    }
    h[static_cast<std::size_t>(i + half)] = v;
  }
  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& v : h) v *= norm;
  return h;
}

std::vector<cplx> direct_convolve(std::span<const cplx> x, std::span<const double> taps) {
  if (taps.empty()) throw std::invalid_argument("convolve: empty taps");
  if (x.empty()) return {};
  std::vector<cplx> y(x.size() + taps.size() - 1);
  for (std::size_t n = 0; n < x.size(); ++n)
    for (std::size_t k = 0; k < taps.size(); ++k) y[n + k] += x[n] * taps[k];
  return y;
}

std::vector<cplx> fast_conv_filter(std::span<const cplx> x, std::span<const double> taps, std::size_t fft_size) {
  if (taps.empty()) throw std::invalid_argument("fast_conv_filter: empty taps");
  const std::size_t m = taps.size();
  if (fft_size == 0) {
    fft_size = 64;
    while (fft_size < 4 * m) fft_size <<= 1;
  }
  if (fft_size < m) throw std::invalid_argument("fast_conv_filter: block size is smaller than the tap count");
  if (x.empty()) return {};

  const std::size_t n = fft_size;
  const std::size_t step = n - m + 1;  // new outputs per block
  const std::size_t out_len = x.size() + m - 1;

  auto time = make_buffer(n);
  auto freq = make_buffer(n);
  auto resp = make_buffer(n);
  const Plan forward(n, time.get(), freq.get(), FFTW_FORWARD);
  const Plan inverse(n, freq.get(), time.get(), FFTW_BACKWARD);

  for (std::size_t i = 0; i < n; ++i) {
    time[i][0] = i < m ? taps[i] : 0.0;
    time[i][1] = 0.0;
  }
  forward.run();
  for (std::size_t i = 0; i < n; ++i) {
    resp[i][0] = freq[i][0] / static_cast<double>(n);
    resp[i][1] = freq[i][1] / static_cast<double>(n);
  }

  // Input index of block sample 0 is start - (m - 1); negative and past-the-end
  // indices read as zero.
  std::vector<cplx> y(out_len);
  for (std::size_t start = 0; start < out_len; start += step) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(start + i) - static_cast<std::ptrdiff_t>(m - 1);
      const bool inside = src >= 0 && static_cast<std::size_t>(src) < x.size();
      time[i][0] = inside ? x[static_cast<std::size_t>(src)].real() : 0.0;
      time[i][1] = inside ? x[static_cast<std::size_t>(src)].imag() : 0.0;
    }
    forward.run();
    for (std::size_t i = 0; i < n; ++i) {
      const double re = freq[i][0] * resp[i][0] - freq[i][1] * resp[i][1];
      const double im = freq[i][0] * resp[i][1] + freq[i][1] * resp[i][0];
      freq[i][0] = re;
      freq[i][1] = im;
    }
    inverse.run();
    const std::size_t take = std::min(step, out_len - start);
    for (std::size_t i = 0; i < take; ++i) y[start + i] = {time[m - 1 + i][0], time[m - 1 + i][1]};
  }
  return y;
}

std::vector<cplx> upsample(std::span<const cplx> symbols, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
  std::vector<cplx> out(symbols.size() * static_cast<std::size_t>(factor));
  for (std::size_t i = 0; i < symbols.size(); ++i) out[i * static_cast<std::size_t>(factor)] = symbols[i];
  return out;
}

std::vector<cplx> decimate(std::span<const cplx> samples, int factor, std::size_t offset, std::size_t count) {
  if (factor < 1) throw std::invalid_argument("decimate: factor must be >= 1");
  std::vector<cplx> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = offset + k * static_cast<std::size_t>(factor);
    if (i >= samples.size()) throw std::out_of_range("decimate: not enough samples");
    out.push_back(samples[i]);
  }
  return out;
}

}  // namespace dmatwin::dvb
