#include "dmatwin/dvb/link.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "dmatwin/dvb/convolutional.hpp"
#include "dmatwin/dvb/framing.hpp"
#include "dmatwin/dvb/interleaver.hpp"
#include "dmatwin/dvb/modem.hpp"
#include "dmatwin/dvb/reed_solomon.hpp"

namespace dmatwin::dvb {

namespace {

// DVB-S inner code rates and their puncturing matrices.
Puncture puncture_for(double code_rate) {
  struct Entry {
    double rate;
    Puncture p;
  };
  static const Entry table[] = {
      {1.0 / 2.0, {"1", "1"}},         {2.0 / 3.0, {"10", "11"}},
      {3.0 / 4.0, {"101", "110"}},     {5.0 / 6.0, Puncture::rate_5_6()},
      {7.0 / 8.0, {"1000101", "1111010"}},
  };
  for (const auto& e : table)
    if (std::abs(e.rate - code_rate) < 1e-9) return e.p;
  throw std::invalid_argument("LinkConfig: code_rate must be one of 1/2, 2/3, 3/4, 5/6, 7/8");
}

std::vector<std::uint8_t> to_bits(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> bits(bytes.size() * 8);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    for (int b = 0; b < 8; ++b) bits[i * 8 + static_cast<std::size_t>(b)] = (bytes[i] >> (7 - b)) & 1u;
  return bits;
}

std::vector<std::uint8_t> to_bytes(std::span<const std::uint8_t> bits, std::size_t n_bytes) {
  std::vector<std::uint8_t> bytes(n_bytes, 0);
  for (std::size_t i = 0; i < n_bytes * 8; ++i)
    bytes[i / 8] = static_cast<std::uint8_t>(bytes[i / 8] | (bits[i] << (7 - i % 8)));
  return bytes;
}

std::size_t bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  return n;
}

double to_dbm(double watts) { return 10.0 * std::log10(watts * 1e3); }

}  // namespace

void LinkConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(tx_power_dbm) || !finite(extra_tx_gain_db) || !finite(rx_horn_gain_dbi) ||
      !finite(rx_chain_gain_db) || !finite(noise_figure_db))
    throw std::invalid_argument("LinkConfig: powers and gains must be finite");
  if (!(distance_m > 0.0)) throw std::invalid_argument("LinkConfig: distance must be positive");
  if (!(rf_hz > 0.0) || !(baseband_hz > 0.0)) throw std::invalid_argument("LinkConfig: frequencies must be positive");
  if (!(symbol_rate > 0.0)) throw std::invalid_argument("LinkConfig: symbol rate must be positive");
  if (!(code_rate > 0.0 && code_rate < 1.0)) throw std::invalid_argument("LinkConfig: code rate must lie in (0, 1)");
  puncture_for(code_rate);
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("LinkConfig: rolloff must lie in (0, 1]");
  if (samples_per_symbol < 2) throw std::invalid_argument("LinkConfig: need at least 2 samples per symbol");
  if (static_cast<double>(samples_per_symbol) < 1.0 + rolloff)
    throw std::invalid_argument("LinkConfig: sample rate below occupied bandwidth");
  if (rrc_span_symbols < 1) throw std::invalid_argument("LinkConfig: RRC span must be >= 1 symbol");
  if (!(noise_temperature_k > 0.0)) throw std::invalid_argument("LinkConfig: noise temperature must be positive");
}

double fspl_db(double distance_m, double frequency_hz) {
  if (!(distance_m > 0.0) || !(frequency_hz > 0.0)) throw std::invalid_argument("fspl_db: inputs must be positive");
  return 20.0 * std::log10(4.0 * em::kPi * distance_m * frequency_hz / em::kSpeedOfLight);
}

double net_throughput_bps(const LinkConfig& cfg) {
  return cfg.symbol_rate * 2.0 * cfg.code_rate * static_cast<double>(kRsData) / static_cast<double>(kRsCodeword);
}

double pattern_gain_dbi(const em::PatternCut& pattern, double angle_deg) {
  const auto& a = pattern.azimuth_deg;
  if (a.empty() || angle_deg < a.front() || angle_deg > a.back())
    throw std::out_of_range("link_budget: angle outside the pattern grid");
  const auto& d = pattern.directivity_dbi;
  const auto it = std::lower_bound(a.begin(), a.end(), angle_deg);
  const auto i = static_cast<std::size_t>(it - a.begin());
  if (a[i] == angle_deg) return d[i];
  const double t = (angle_deg - a[i - 1]) / (a[i] - a[i - 1]);
  if (!std::isfinite(d[i - 1]) || !std::isfinite(d[i])) return std::min(d[i - 1], d[i]);
  return d[i - 1] + t * (d[i] - d[i - 1]);
}

LinkBudget link_budget(const LinkConfig& cfg, double dma_gain_dbi) {
  cfg.validate();
  LinkBudget b;
  b.dma_gain_dbi = dma_gain_dbi;
  b.fspl_db = fspl_db(cfg.distance_m, cfg.rf_hz);
  b.rx_power_dbm = cfg.tx_power_dbm + cfg.extra_tx_gain_db + dma_gain_dbi - b.fspl_db + cfg.rx_horn_gain_dbi;
  b.if_power_dbm = b.rx_power_dbm + cfg.rx_chain_gain_db;
  b.noise_power_dbm =
      to_dbm(kBoltzmann * cfg.noise_temperature_k * cfg.occupied_bandwidth_hz()) + cfg.noise_figure_db;
  b.snr_db = b.rx_power_dbm - b.noise_power_dbm;
  return b;
}

LinkBudget link_budget(const LinkConfig& cfg, double angle_deg, const em::PatternCut& pattern) {
  return link_budget(cfg, pattern_gain_dbi(pattern, angle_deg));
}

double es_n0_from_snr_db(const LinkConfig& cfg, double snr_db) {
  return snr_db + 10.0 * std::log10(cfg.occupied_bandwidth_hz() / cfg.symbol_rate);
}

LinkReport simulate_chain(const LinkConfig& cfg, std::span<const std::uint8_t> payload, double es_n0_db,
                          std::uint64_t noise_seed) {
  cfg.validate();
  const Puncture punct = puncture_for(cfg.code_rate);
  LinkReport rep;
  rep.es_n0_db = es_n0_db;
  rep.throughput_bps = net_throughput_bps(cfg);

  const auto packets = packetize(payload);
  rep.packets = packets.size() / kPacketSize;
  const auto scrambled = scramble(packets);
  std::vector<std::uint8_t> codewords;
  codewords.reserve(rep.packets * kRsCodeword);
  for (std::size_t p = 0; p < rep.packets; ++p) {
    const auto cw = rs_encode(std::span(scrambled).subspan(p * kPacketSize, kPacketSize));
    codewords.insert(codewords.end(), cw.begin(), cw.end());
  }
  std::vector<std::uint8_t> flushed = codewords;
  flushed.resize(codewords.size() + kInterleaverDelay, 0);
  const auto interleaved = outer_interleave(flushed);
  auto info_bits = terminate_bits(to_bits(interleaved), punct);
  // QPSK needs an even coded length; one more zero period keeps the tail state.
  if ((info_bits.size() / punct.period() * punct.kept_per_period()) % 2 != 0)
    info_bits.resize(info_bits.size() + punct.period(), 0);
  const auto coded = conv_encode(info_bits, punct);
  const auto symbols = qpsk_map(coded);

  const int sps = cfg.samples_per_symbol;
  const auto taps = rrc_taps(cfg.rolloff, sps, cfg.rrc_span_symbols);
  auto samples = fast_conv_filter(upsample(symbols, sps), taps);

  // Unit-energy symbols through a unit-energy pulse: after the matched filter
  // the per-symbol noise variance equals the per-sample variance added here.
  const double es_n0 = std::pow(10.0, std::max(es_n0_db, -200.0) / 10.0);
  const double noise_var = 1.0 / es_n0;
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
  for (auto& s : samples) s += cplx(gauss(rng), gauss(rng));

  const auto filtered = fast_conv_filter(samples, taps);
  const auto rx_symbols = decimate(filtered, sps, taps.size() - 1, symbols.size());
  rep.evm_pct = evm_percent(rx_symbols, symbols);

  const auto hard = qpsk_hard(rx_symbols);
  std::size_t coded_errors = 0;
  for (std::size_t i = 0; i < coded.size(); ++i) coded_errors += hard[i] != coded[i];
  rep.prefec_ber = std::min(0.5, static_cast<double>(coded_errors) / static_cast<double>(coded.size()));

  const auto decoded = viterbi_decode(qpsk_demap(rx_symbols, noise_var), info_bits.size(), punct, true);
  const auto rx_interleaved = to_bytes(decoded, interleaved.size());
  const auto deinterleaved = outer_deinterleave(rx_interleaved);

  std::vector<std::uint8_t> rx_scrambled;
  rx_scrambled.reserve(rep.packets * kPacketSize);
  for (std::size_t p = 0; p < rep.packets; ++p) {
    const auto cw = std::span(deinterleaved).subspan(kInterleaverDelay + p * kRsCodeword, kRsCodeword);
    const auto res = rs_decode(cw);
    if (res.uncorrectable) ++rep.uncorrectable_blocks;
    rep.corrected_bytes += static_cast<std::size_t>(res.corrected);
    rx_scrambled.insert(rx_scrambled.end(), res.data.begin(), res.data.end());
  }
  const auto rx_packets = descramble(rx_scrambled);
  rep.postfec_ber = std::min(
      0.5, static_cast<double>(bit_errors(rx_packets, packets)) / static_cast<double>(packets.size() * 8));

  rep.payload_recovered = rep.uncorrectable_blocks == 0;
  if (auto data = depacketize(rx_packets)) {
    rep.recovered_payload = std::move(*data);
  } else {
    rep.payload_recovered = false;
  }
  return rep;
}

LinkReport run_link(const LinkConfig& cfg, const em::PatternCut& pattern, double angle_deg,
                    std::span<const std::uint8_t> payload, std::uint64_t noise_seed) {
  const LinkBudget budget = link_budget(cfg, angle_deg, pattern);
  const double snr = cfg.forced_snr_db.value_or(budget.snr_db);
  LinkReport rep = simulate_chain(cfg, payload, es_n0_from_snr_db(cfg, snr), noise_seed);
  rep.snr_db = snr;
  rep.rx_power_dbm = budget.rx_power_dbm;
  return rep;
}

void write_report_header(std::ostream& os) {
  os << "prefec_ber,postfec_ber,evm_pct,snr_db,es_n0_db,rx_power_dbm,throughput_bps,packets,"
        "uncorrectable_blocks,corrected_bytes,recovered\n";
}

void write_report_row(std::ostream& os, const LinkReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%.6e,%.6e,%.4f,%.4f,%.4f,%.4f,%.1f,%zu,%zu,%zu,%d\n", r.prefec_ber, r.postfec_ber,
                r.evm_pct, r.snr_db, r.es_n0_db, r.rx_power_dbm, r.throughput_bps, r.packets, r.uncorrectable_blocks,
                r.corrected_bytes, r.payload_recovered ? 1 : 0);
  os << buf;
}

void write_sweep_header(std::ostream& os) { os << "angle_deg,snr_db,prefec_ber,postfec_ber,evm_pct,recovered\n"; }

void write_sweep_row(std::ostream& os, double angle_deg, const LinkReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%.6f,%.4f,%.6e,%.6e,%.4f,%d\n", angle_deg, r.snr_db, r.prefec_ber, r.postfec_ber,
                r.evm_pct, r.payload_recovered ? 1 : 0);
  os << buf;
}

}  // namespace dmatwin::dvb
