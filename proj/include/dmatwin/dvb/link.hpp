#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "dmatwin/em_model.hpp"

namespace dmatwin::dvb {

inline constexpr double kBoltzmann = 1.380649e-23;

// Testbed link parameters. Up/down conversion is ideal frequency translation
// plus the fixed gains below.
struct LinkConfig {
  double baseband_hz = 1e9;
  double rf_hz = 62e9;
  double tx_power_dbm = 7.0;
  double extra_tx_gain_db = 0.0;
  double rx_horn_gain_dbi = 15.5;
  double rx_chain_gain_db = 32.0;
  double distance_m = 1.0;
  double symbol_rate = 2e6;
  double code_rate = 5.0 / 6.0;
  double noise_figure_db = 7.0;
  double noise_temperature_k = 290.0;
  double rolloff = 0.35;
  int samples_per_symbol = 4;
  int rrc_span_symbols = 10;
  // Bypasses the budget and drives the channel at this SNR.
  std::optional<double> forced_snr_db;

  void validate() const;
  double occupied_bandwidth_hz() const { return symbol_rate * (1.0 + rolloff); }
};

struct LinkBudget {
  double dma_gain_dbi = 0.0;
  double fspl_db = 0.0;
  double rx_power_dbm = 0.0;  // at the horn output
  double if_power_dbm = 0.0;  // after LNA and IF gain
  double noise_power_dbm = 0.0;  // input referred, kTB * NF
  double snr_db = 0.0;
};

struct LinkReport {
  double prefec_ber = 0.0;
  double postfec_ber = 0.0;
  double evm_pct = 0.0;
  double snr_db = 0.0;
  double es_n0_db = 0.0;
  double rx_power_dbm = 0.0;
  double throughput_bps = 0.0;
  bool payload_recovered = false;
  std::size_t packets = 0;
  std::size_t uncorrectable_blocks = 0;
  std::size_t corrected_bytes = 0;
  std::vector<std::uint8_t> recovered_payload;
};

double fspl_db(double distance_m, double frequency_hz);

// Channel bit rate after QPSK, the inner code and RS(204,188).
double net_throughput_bps(const LinkConfig& cfg);

// Linear interpolation of the directivity cut; throws outside the grid.
double pattern_gain_dbi(const em::PatternCut& pattern, double angle_deg);

LinkBudget link_budget(const LinkConfig& cfg, double dma_gain_dbi);
LinkBudget link_budget(const LinkConfig& cfg, double angle_deg, const em::PatternCut& pattern);

// Es/N0 seen by the demodulator for an SNR measured over the occupied bandwidth.
double es_n0_from_snr_db(const LinkConfig& cfg, double snr_db);

// Full chain at a given Es/N0: scramble, RS, interleave, 5/6 inner code, QPSK,
// RRC shaping, AWGN, matched filter, soft demap, Viterbi, deinterleave, RS
// decode, descramble. The link budget fields of the report are left at zero.
LinkReport simulate_chain(const LinkConfig& cfg, std::span<const std::uint8_t> payload, double es_n0_db,
                          std::uint64_t noise_seed);

LinkReport run_link(const LinkConfig& cfg, const em::PatternCut& pattern, double angle_deg,
                    std::span<const std::uint8_t> payload, std::uint64_t noise_seed);

void write_report_header(std::ostream& os);
void write_report_row(std::ostream& os, const LinkReport& r);
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, double angle_deg, const LinkReport& r);

}  // namespace dmatwin::dvb
