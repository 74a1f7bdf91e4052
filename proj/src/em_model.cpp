#include "dmatwin/em_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace dmatwin::em {

namespace {

constexpr double kDeg = kPi / 180.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Floor used when interpolating -3 dB crossings next to exact nulls.
constexpr double kDbFloor = -400.0;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

void ElementModel::validate() const {
  require(f0 > 0.0, "ElementModel: f0 must be positive");
  require(coupling_F > 0.0, "ElementModel: coupling_F must be positive");
  require(damping_gamma > 0.0, "ElementModel: damping_gamma must be positive");
  require(off_leakage_rho >= 0.0 && off_leakage_rho < 1.0,
          "ElementModel: off_leakage_rho must lie in [0, 1)");
}

void GuideGeometry::validate() const {
  require(n_elements >= 1 && n_elements <= 32, "GuideGeometry: n_elements must be in [1, 32]");
  require(spacing_d > 0.0, "GuideGeometry: spacing_d must be positive");
  require(eps_eff >= 1.0, "GuideGeometry: eps_eff must be >= 1");
  require(std::abs(feed_h0) > 0.0, "GuideGeometry: feed_h0 must be non-zero");
}

double GuideGeometry::beta(double frequency) const {
  return 2.0 * kPi * std::sqrt(eps_eff) * frequency / kSpeedOfLight;
}

CodeWord::CodeWord(std::uint32_t value, std::size_t n_bits) : value_(value), n_bits_(n_bits) {
  if (n_bits == 0 || n_bits > 32) throw std::invalid_argument("CodeWord: width must be in [1, 32]");
  if (n_bits < 32 && (value >> n_bits) != 0)
    throw std::out_of_range("CodeWord: value does not fit in the word width");
}

CodeWord CodeWord::from_bits(std::span<const std::uint8_t> bits) {
  std::uint32_t v = 0;
  for (auto b : bits) {
    if (b > 1) throw std::invalid_argument("CodeWord: bits must be 0 or 1");
    v = (v << 1) | b;
  }
  return CodeWord(v, bits.size());
}

CodeWord CodeWord::from_string(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("CodeWord: expected a binary string");
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return from_bits(bits);
}

CodeWord CodeWord::all_ones(std::size_t n_bits) {
  std::uint32_t v = n_bits >= 32 ? 0xFFFFFFFFu : ((1u << n_bits) - 1u);
  return CodeWord(v, n_bits);
}

bool CodeWord::radiating(std::size_t element) const {
  if (element >= n_bits_) throw std::out_of_range("CodeWord: element index out of range");
  return ((value_ >> (n_bits_ - 1 - element)) & 1u) != 0;
}

std::size_t CodeWord::count_ones() const { return static_cast<std::size_t>(std::popcount(value_)); }

CodeWord CodeWord::complement() const { return CodeWord(~value_ & all_ones(n_bits_).value_, n_bits_); }

CodeWord CodeWord::rotated(std::size_t shift) const {
  std::vector<std::uint8_t> bits(n_bits_);
  for (std::size_t i = 0; i < n_bits_; ++i) bits[(i + shift) % n_bits_] = radiating(i) ? 1 : 0;
  return from_bits(bits);
}

std::string CodeWord::to_string() const {
  std::string s(n_bits_, '0');
  for (std::size_t i = 0; i < n_bits_; ++i)
    if (radiating(i)) s[i] = '1';
  return s;
}

std::string CodeWord::to_hex() const {
  char buf[16];
  int digits = static_cast<int>((n_bits_ + 3) / 4);
  std::snprintf(buf, sizeof buf, "%0*X", digits, value_);
  return buf;
}

std::ostream& operator<<(std::ostream& os, const CodeWord& code) { return os << code.to_string(); }

double to_omega(double frequency) { return 2.0 * kPi * frequency; }

cplx polarizability(const ElementModel& model, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("polarizability: omega must be positive");
  const double w0 = to_omega(model.f0);
  return model.coupling_F * omega * omega / cplx(w0 * w0 - omega * omega, omega * model.damping_gamma);
}

cplx reference_wave(const GuideGeometry& geom, std::size_t element_index, double frequency) {
  if (element_index >= geom.n_elements)
    throw std::out_of_range("reference_wave: element index out of range");
  const double phase = -geom.beta(frequency) * geom.position(element_index);
  return geom.feed_h0 * std::polar(1.0, phase);
}

cplx effective_weight(const ElementModel& model, bool state, double frequency) {
  const cplx alpha = polarizability(model, to_omega(frequency));
  return state ? alpha : model.off_leakage_rho * alpha;
}

std::vector<double> angle_grid(double lo_deg, double hi_deg, double step_deg) {
  if (!(step_deg > 0.0) || hi_deg < lo_deg) throw std::invalid_argument("angle_grid: bad range");
  const auto n = static_cast<std::size_t>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo_deg + static_cast<double>(i) * step_deg;
  return g;
}

std::vector<double> default_grid() { return angle_grid(-90.0, 90.0, 0.25); }

double radiated_power(std::span<const cplx> excitation, double k_spacing) {
  // Over the front hemisphere u = (cos(el) sin(az), sin(el), cos(el) cos(az)) the
  // pattern cos^2(el) |F(az)|^2 separates; the el integral of cos^3 is 4/3 and
  //   int_{-pi/2}^{pi/2} cos^2(az) exp(-j p a sin(az)) d(az) = pi J1(p a) / (p a).
  // The back hemisphere mirrors the front one.
  const std::size_t n = excitation.size();
  std::vector<double> kernel(n);
  kernel[0] = kPi / 2.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    const double arg = static_cast<double>(lag) * k_spacing;
    kernel[lag] = kPi * std::cyl_bessel_j(1.0, arg) / arg;
  }
  double acc = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    acc += std::norm(excitation[a]) * kernel[0];
    for (std::size_t b = a + 1; b < n; ++b)
      acc += 2.0 * (excitation[a] * std::conj(excitation[b])).real() * kernel[b - a];
  }
  return 2.0 * (4.0 / 3.0) * acc;
}

PatternEvaluator::PatternEvaluator(const GuideGeometry& geom, const ElementModel& model,
                                   double frequency, std::span<const double> grid_deg)
    : geom_(geom), model_(model), frequency_(frequency), grid_(grid_deg.begin(), grid_deg.end()) {
  geom.validate();
  model.validate();
  if (!(frequency > 0.0)) throw std::invalid_argument("array_pattern: frequency must be positive");
  if (grid_.empty()) throw std::invalid_argument("array_pattern: empty angle grid");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (grid_[i] < -90.0 || grid_[i] > 90.0)
      throw std::invalid_argument("array_pattern: grid angles must lie in [-90, 90]");
    if (i > 0 && !(grid_[i] > grid_[i - 1]))
      throw std::invalid_argument("array_pattern: grid must be strictly increasing");
  }
  const std::size_t n = geom.n_elements;
  k_spacing_ = 2.0 * kPi * frequency / kSpeedOfLight * geom.spacing_d;

  const cplx w_on = effective_weight(model, true, frequency) * model.dipole_scale_m;
  const cplx w_off = effective_weight(model, false, frequency) * model.dipole_scale_m;
  on_weight_.resize(n);
  off_weight_.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const cplx ref = reference_wave(geom, e, frequency);
    on_weight_[e] = w_on * ref;
    off_weight_[e] = w_off * ref;
  }
  cos_phi_.resize(grid_.size());
  space_phase_.resize(grid_.size() * n);
  for (std::size_t a = 0; a < grid_.size(); ++a) {
    const double phi = grid_[a] * kDeg;
    cos_phi_[a] = std::cos(phi);
    const cplx step = std::polar(1.0, -k_spacing_ * std::sin(phi));
    cplx ph{1.0, 0.0};
    for (std::size_t e = 0; e < n; ++e) {
      space_phase_[a * n + e] = ph;
      ph *= step;
    }
  }
}

PatternCut PatternEvaluator::evaluate(const CodeWord& code) const {
  const std::size_t n = geom_.n_elements;
  if (code.size() != n) throw std::invalid_argument("array_pattern: code length does not match geometry");

  std::vector<cplx> exc(n);
  for (std::size_t e = 0; e < n; ++e) exc[e] = code.radiating(e) ? on_weight_[e] : off_weight_[e];

  PatternCut cut;
  cut.frequency = frequency_;
  cut.azimuth_deg = grid_;
  cut.field.resize(grid_.size());
  cut.directivity_dbi.resize(grid_.size());
  for (std::size_t a = 0; a < grid_.size(); ++a) {
    cplx acc{0.0, 0.0};
    const cplx* row = &space_phase_[a * n];
    for (std::size_t e = 0; e < n; ++e) acc += exc[e] * row[e];
    cut.field[a] = cos_phi_[a] * acc;
  }
  cut.total_power = radiated_power(exc, k_spacing_);
  cut.normalizable = cut.total_power > 0.0;
  for (std::size_t a = 0; a < grid_.size(); ++a) {
    if (!cut.normalizable) {
      cut.directivity_dbi[a] = kNegInf;
      continue;
    }
    const double d = 4.0 * kPi * std::norm(cut.field[a]) / cut.total_power;
    cut.directivity_dbi[a] = d > 0.0 ? 10.0 * std::log10(d) : kNegInf;
  }
  return cut;
}

PatternCut array_pattern(const GuideGeometry& geom, const ElementModel& model, const CodeWord& code,
                         double frequency, std::span<const double> grid_deg) {
  return PatternEvaluator(geom, model, frequency, grid_deg).evaluate(code);
}

namespace {

double floor_db(double v) { return std::isfinite(v) ? v : kDbFloor; }

double crossing(const std::vector<double>& ang, const std::vector<double>& db, std::size_t inside,
                std::size_t outside, double level) {
  const double di = floor_db(db[inside]);
  const double dout = floor_db(db[outside]);
  if (di == dout) return ang[outside];
  const double t = (di - level) / (di - dout);
  return ang[inside] + t * (ang[outside] - ang[inside]);
}

double half_power_width(const std::vector<double>& ang, const std::vector<double>& db, std::size_t peak) {
  const double level = db[peak] - 3.0;
  double left = ang.front();
  for (std::size_t j = peak; j > 0; --j) {
    if (floor_db(db[j - 1]) < level) {
      left = crossing(ang, db, j, j - 1, level);
      break;
    }
  }
  double right = ang.back();
  for (std::size_t j = peak; j + 1 < ang.size(); ++j) {
    if (floor_db(db[j + 1]) < level) {
      right = crossing(ang, db, j, j + 1, level);
      break;
    }
  }
  return right - left;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& db) {
  std::vector<std::size_t> out;
  const std::size_t n = db.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && db[j + 1] == db[i]) ++j;  // plateau [i, j]
    const bool rise = i == 0 || db[i - 1] < db[i];
    const bool fall = j + 1 == n || db[j + 1] < db[i];
    if (rise && fall && std::isfinite(db[i]) && n > 1) out.push_back(i);
    i = j + 1;
  }
  return out;
}

}  // namespace

BeamSummary beam_summary(const PatternCut& cut, double detect_threshold_db) {
  if (!(detect_threshold_db < 0.0)) throw std::invalid_argument("beam_summary: threshold must be < 0 dB");
  if (cut.directivity_dbi.size() != cut.azimuth_deg.size())
    throw std::invalid_argument("beam_summary: pattern is not normalized");
  BeamSummary s;
  if (!cut.normalizable || cut.azimuth_deg.empty()) return s;

  const auto& db = cut.directivity_dbi;
  const auto& ang = cut.azimuth_deg;
  const auto peak_it = std::max_element(db.begin(), db.end());
  const auto peak_idx = static_cast<std::size_t>(peak_it - db.begin());
  const double peak = *peak_it;
  if (!std::isfinite(peak)) return s;

  std::vector<std::size_t> maxima = local_maxima(db);
  if (std::find(maxima.begin(), maxima.end(), peak_idx) == maxima.end()) {
    maxima.push_back(peak_idx);
    std::sort(maxima.begin(), maxima.end());
  }

  double sll = kNegInf;
  for (std::size_t idx : maxima) {
    const double rel = db[idx] - peak;
    if (idx == peak_idx || rel >= detect_threshold_db) {
      s.lobes.push_back({ang[idx], db[idx], half_power_width(ang, db, idx)});
    } else {
      sll = std::max(sll, rel);
    }
  }
  s.n_beams = static_cast<int>(s.lobes.size());
  s.mld_deg = ang[peak_idx];
  s.peak_dbi = peak;
  s.hpbw_deg = half_power_width(ang, db, peak_idx);
  if (std::isfinite(sll)) s.sll_db = sll;
  return s;
}

void write_pattern_csv(std::ostream& os, const PatternCut& cut) {
  os << "angle_deg,re,im,dbi\n";
  char line[160];
  for (std::size_t i = 0; i < cut.azimuth_deg.size(); ++i) {
    std::snprintf(line, sizeof line, "%.6f,%.12e,%.12e,%.6f\n", cut.azimuth_deg[i], cut.field[i].real(),
                  cut.field[i].imag(), cut.directivity_dbi[i]);
    os << line;
  }
}

}  // namespace dmatwin::em
