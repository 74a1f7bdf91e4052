#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmatwin::em {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

// Lorentzian meta-element. An OFF (shorted) element still leaks a fraction
// `off_leakage_rho` of the ON amplitude.
struct ElementModel {
  double f0 = 60.6e9;
  double coupling_F = 1.0;
  double damping_gamma = 2.0 * kPi * 4.0e9;
  double off_leakage_rho = 1.0 / 3.0;
  double dipole_scale_m = 1.0;

  void validate() const;
};

// Waveguide (SIW) feed of a 1-D element row; element n sits at x_n = n * spacing_d.
struct GuideGeometry {
  std::size_t n_elements = 16;
  double spacing_d = 2.5e-3;
  double eps_eff = 3.0;
  cplx feed_h0{1.0, 0.0};

  void validate() const;
  double position(std::size_t n) const { return static_cast<double>(n) * spacing_d; }
  // Guided propagation constant at `frequency` [rad/m].
  double beta(double frequency) const;
};

// N-bit radiation-state word. Character i of the text form (and bit N-1-i of
// the integer form) is element i; element 0 is nearest the feed.
class CodeWord {
 public:
  CodeWord() = default;
  CodeWord(std::uint32_t value, std::size_t n_bits);

  static CodeWord from_bits(std::span<const std::uint8_t> bits);
  static CodeWord from_string(std::string_view text);
  static CodeWord all_ones(std::size_t n_bits);

  std::uint32_t value() const { return value_; }
  std::size_t size() const { return n_bits_; }
  bool radiating(std::size_t element) const;
  std::size_t count_ones() const;
  CodeWord complement() const;
  CodeWord rotated(std::size_t shift) const;

  std::string to_string() const;
  std::string to_hex() const;

  friend bool operator==(const CodeWord&, const CodeWord&) = default;

 private:
  std::uint32_t value_ = 0;
  std::size_t n_bits_ = 0;
};

std::ostream& operator<<(std::ostream& os, const CodeWord& code);

struct PatternCut {
  double frequency = 0.0;
  std::vector<double> azimuth_deg;
  std::vector<cplx> field;
  std::vector<double> directivity_dbi;
  // false only when no element radiates (all-zero code with rho = 0);
  // directivity is then -inf everywhere.
  bool normalizable = true;
  double total_power = 0.0;
};

struct Lobe {
  double angle_deg = 0.0;
  double peak_dbi = 0.0;
  double hpbw_deg = 0.0;

  friend bool operator==(const Lobe&, const Lobe&) = default;
};

struct BeamSummary {
  std::optional<double> mld_deg;
  std::optional<double> peak_dbi;
  std::optional<double> hpbw_deg;
  std::optional<double> sll_db;
  int n_beams = 0;
  // Detected beams, sorted by angle.
  std::vector<Lobe> lobes;

  friend bool operator==(const BeamSummary&, const BeamSummary&) = default;
};

inline constexpr double kDefaultDetectThresholdDb = -10.0;
inline constexpr double kDesignFrequency = 62e9;

double to_omega(double frequency);

// Lorentzian polarizability F w^2 / (w0^2 - w^2 + j w gamma).
cplx polarizability(const ElementModel& model, double omega);

// Guided reference wave H0 exp(-j beta x_n) at element `element_index`.
cplx reference_wave(const GuideGeometry& geom, std::size_t element_index, double frequency);

cplx effective_weight(const ElementModel& model, bool state, double frequency);

// Uniform grid from `lo` to `hi` inclusive.
std::vector<double> angle_grid(double lo_deg, double hi_deg, double step_deg);
std::vector<double> default_grid();

PatternCut array_pattern(const GuideGeometry& geom, const ElementModel& model,
                         const CodeWord& code, double frequency, std::span<const double> grid_deg);

// Power radiated over the modeled sphere by a row with per-element excitation
// `excitation` (weight times reference wave). Closed form via J1.
double radiated_power(std::span<const cplx> excitation, double k_spacing);

BeamSummary beam_summary(const PatternCut& cut,
                         double detect_threshold_db = kDefaultDetectThresholdDb);

void write_pattern_csv(std::ostream& os, const PatternCut& cut);

// Precomputed steering phasors for evaluating many codes over one geometry and
// grid. Produces results identical to array_pattern.
class PatternEvaluator {
 public:
  PatternEvaluator(const GuideGeometry& geom, const ElementModel& model, double frequency,
                   std::span<const double> grid_deg);

  PatternCut evaluate(const CodeWord& code) const;
  std::size_t n_elements() const { return geom_.n_elements; }
  const std::vector<double>& grid() const { return grid_; }

 private:
  GuideGeometry geom_;
  ElementModel model_;
  double frequency_;
  double k_spacing_;
  std::vector<double> grid_;
  std::vector<double> cos_phi_;
  std::vector<cplx> on_weight_;   // weight * reference wave, state 1
  std::vector<cplx> off_weight_;  // weight * reference wave, state 0
  std::vector<cplx> space_phase_; // [angle][element] exp(-j k x_n sin(phi))
};

}  // namespace dmatwin::em
