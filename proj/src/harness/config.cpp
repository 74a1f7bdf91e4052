#include "dmatwin/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dmatwin::harness {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Typed access to one document with diagnostics pointing at the offending line.
class Reader {
 public:
  explicit Reader(const IniDocument& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    const IniValue* v = doc_.find(section, key);
    throw ConfigError(doc_.source, v ? v->line : 0, section + "." + key, what);
  }

  const IniValue* get(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return doc_.find(section, key);
  }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    const IniValue* v = get(section, key);
    if (!v) return std::nullopt;
    return v->text;
  }

  double parse_number(const std::string& section, const std::string& key, const std::string& t) const {
    const auto slash = t.find('/');
    if (slash != std::string::npos) {
      const double num = parse_number(section, key, trim(t.substr(0, slash)));
      const double den = parse_number(section, key, trim(t.substr(slash + 1)));
      if (den == 0.0) fail(section, key, "division by zero");
      return num / den;
    }
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.empty()) fail(section, key, "expected a number, got '" + t + "'");
    return v;
  }

  void number(const std::string& section, const std::string& key, double& target) {
    if (auto t = text(section, key)) target = parse_number(section, key, *t);
  }

  void positive(const std::string& section, const std::string& key, double& target) {
    number(section, key, target);
    if (doc_.find(section, key) && !(target > 0.0)) fail(section, key, "must be positive");
  }

  template <class Int>
  void integer(const std::string& section, const std::string& key, Int& target) {
    auto t = text(section, key);
    if (!t) return;
    Int v{};
    const auto [ptr, ec] = std::from_chars(t->data(), t->data() + t->size(), v);
    if (ec != std::errc() || ptr != t->data() + t->size() || t->empty())
      fail(section, key, "expected an integer, got '" + *t + "'");
    target = v;
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) {
    std::vector<double> out;
    auto t = text(section, key);
    if (!t) return out;
    for (const auto& item : split(*t, ',')) out.push_back(parse_number(section, key, item));
    return out;
  }

  void check_unused() const {
    for (const auto& [section, keys] : doc_.sections)
      for (const auto& [key, value] : keys)
        if (!used_.count(section + "." + key))
          throw ConfigError(doc_.source, value.line, section + "." + key, "unknown key");
  }

 private:
  const IniDocument& doc_;
  std::set<std::string> used_;
};

void read_range(Reader& r, const std::string& prefix, em::ParamRange& range) {
  r.number("calibrate", prefix + "_lo", range.lo);
  r.number("calibrate", prefix + "_hi", range.hi);
  r.number("calibrate", prefix + "_step", range.step);
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + field + ": " +
                         what),
      line_(line),
      field_(field) {}

const IniValue* IniDocument::find(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

IniDocument parse_ini(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(source, line, "[section]", "malformed section header");
      section = lower(trim(s.substr(1, s.size() - 2)));
      doc.sections[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, section, "expected 'key = value'");
    if (section.empty()) throw ConfigError(source, line, trim(s.substr(0, eq)), "key outside of any section");
    const std::string key = lower(trim(s.substr(0, eq)));
    if (key.empty()) throw ConfigError(source, line, section, "empty key");
    auto& slot = doc.sections[section];
    if (slot.count(key)) throw ConfigError(source, line, section + "." + key, "duplicate key");
    slot[key] = {trim(s.substr(eq + 1)), line};
  }
  return doc;
}

IniDocument load_ini(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str(), path.string());
}

em::CodeWord parse_code(const std::string& token, std::size_t n_elements, const std::string& radix) {
  if (n_elements == 0 || n_elements > 32) throw std::invalid_argument("parse_code: unsupported word width");
  std::string t = trim(token);
  int base = 0;
  if (radix == "bin") base = 2;
  else if (radix == "hex") base = 16;
  else if (radix == "dec") base = 10;
  else if (radix != "auto") throw std::invalid_argument("parse_code: radix must be auto, bin, hex or dec");

  if (base == 0) {
    if (t.size() > 2 && (t.starts_with("0x") || t.starts_with("0X"))) base = 16;
    else if (t.size() > 2 && (t.starts_with("0b") || t.starts_with("0B"))) base = 2;
    else if (t.size() == n_elements && t.find_first_not_of("01") == std::string::npos)
      return em::CodeWord::from_string(t);
    else base = 10;
  }
  if ((base == 16 && (t.starts_with("0x") || t.starts_with("0X"))) ||
      (base == 2 && (t.starts_with("0b") || t.starts_with("0B"))))
    t = t.substr(2);
  if (t.empty()) throw std::invalid_argument("parse_code: empty code");
  std::uint64_t value = 0;
  for (char c : t) {
    int d = 99;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    if (d >= base) throw std::invalid_argument("parse_code: invalid digit '" + std::string(1, c) + "' in " + token);
    value = value * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d);
    if (value >> n_elements) throw std::out_of_range("parse_code: " + token + " does not fit in " +
                                                     std::to_string(n_elements) + " bits");
  }
  return em::CodeWord(static_cast<std::uint32_t>(value), n_elements);
}

std::vector<double> ExperimentConfig::grid() const { return em::angle_grid(grid_lo_deg, grid_hi_deg, grid_step_deg); }

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ConfigError("<config>", 0, "run.seed", "a seed is required for stochastic runs");
  return *seed;
}

ExperimentConfig resolve_config(const IniDocument& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  Reader r(doc);
  auto path_of = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  };

  if (auto s = r.text("run", "seed")) {
    std::uint64_t v = 0;
    r.integer("run", "seed", v);
    c.seed = v;
  }
  if (auto s = r.text("run", "out")) c.out_dir = path_of(*s);

  // Geometry: a base model, an optional parameter file, then explicit keys.
  c.em_model = lower(r.text("em", "model").value_or("calibrated"));
  if (c.em_model == "calibrated") {
    c.geometry = em::calibrated_geometry();
    c.element = em::calibrated_element();
  } else if (c.em_model != "default") {
    r.fail("em", "model", "must be 'calibrated' or 'default'");
  }
  IniDocument params;
  if (auto p = r.text("em", "params_file")) {
    params = load_ini(path_of(*p));
    Reader pr(params);
    pr.number("em", "spacing_d", c.geometry.spacing_d);
    pr.number("em", "eps_eff", c.geometry.eps_eff);
    pr.number("em", "rho", c.element.off_leakage_rho);
    pr.number("em", "f0", c.element.f0);
    pr.number("em", "damping_gamma", c.element.damping_gamma);
    pr.number("em", "coupling", c.element.coupling_F);
    pr.number("em", "dipole_scale", c.element.dipole_scale_m);
    pr.integer("em", "n_elements", c.geometry.n_elements);
  }
  r.integer("em", "n_elements", c.geometry.n_elements);
  r.positive("em", "spacing_d", c.geometry.spacing_d);
  r.positive("em", "eps_eff", c.geometry.eps_eff);
  r.number("em", "rho", c.element.off_leakage_rho);
  r.positive("em", "f0", c.element.f0);
  r.positive("em", "damping_gamma", c.element.damping_gamma);
  r.number("em", "coupling", c.element.coupling_F);
  r.positive("em", "dipole_scale", c.element.dipole_scale_m);
  r.positive("em", "frequency", c.frequency);
  r.number("em", "grid_lo", c.grid_lo_deg);
  r.number("em", "grid_hi", c.grid_hi_deg);
  r.positive("em", "grid_step", c.grid_step_deg);
  r.number("em", "threshold_db", c.detect_threshold_db);
  try {
    c.geometry.validate();
    c.element.validate();
    (void)c.grid();
  } catch (const std::exception& e) {
    throw ConfigError(doc.source, 0, "em", e.what());
  }

  const std::string radix = lower(r.text("codes", "radix").value_or("auto"));
  if (auto t = r.text("codes", "codes")) {
    for (const auto& tok : split(*t, ',')) {
      try {
        c.codes.push_back(parse_code(tok, c.geometry.n_elements, radix));
      } catch (const std::exception& e) {
        r.fail("codes", "codes", e.what());
      }
    }
  }

  if (auto t = r.text("search", "targets")) {
    c.beam_spec_set = true;
    for (const auto& item : split(*t, ',')) {
      const auto colon = item.find(':');
      codebook::BeamTarget bt;
      bt.direction_deg = r.parse_number("search", "targets", trim(item.substr(0, colon)));
      if (colon != std::string::npos) bt.tolerance_deg = r.parse_number("search", "targets", trim(item.substr(colon + 1)));
      c.beam_spec.targets.push_back(bt);
    }
    c.beam_spec.required_beams = static_cast<int>(c.beam_spec.targets.size());
  }
  r.integer("search", "required_beams", c.beam_spec.required_beams);
  r.number("search", "max_sll_db", c.beam_spec.max_sll_db);
  r.number("search", "min_peak_dbi", c.beam_spec.min_peak_dbi);
  r.integer("search", "workers", c.workers);
  if (c.beam_spec_set) {
    try {
      c.beam_spec.validate();
    } catch (const std::exception& e) {
      r.fail("search", "targets", e.what());
    }
  }

  auto& L = c.link;
  r.positive("link", "rf_hz", L.rf_hz);
  r.positive("link", "baseband_hz", L.baseband_hz);
  r.number("link", "tx_power_dbm", L.tx_power_dbm);
  r.number("link", "extra_tx_gain_db", L.extra_tx_gain_db);
  r.number("link", "rx_horn_gain_dbi", L.rx_horn_gain_dbi);
  r.number("link", "rx_chain_gain_db", L.rx_chain_gain_db);
  r.positive("link", "distance_m", L.distance_m);
  r.positive("link", "symbol_rate", L.symbol_rate);
  r.positive("link", "code_rate", L.code_rate);
  r.number("link", "noise_figure_db", L.noise_figure_db);
  r.positive("link", "noise_temperature_k", L.noise_temperature_k);
  r.positive("link", "rolloff", L.rolloff);
  r.integer("link", "samples_per_symbol", L.samples_per_symbol);
  r.integer("link", "rrc_span_symbols", L.rrc_span_symbols);
  if (r.text("link", "forced_snr_db")) {
    double v = 0.0;
    r.number("link", "forced_snr_db", v);
    L.forced_snr_db = v;
  }
  try {
    L.validate();
  } catch (const std::exception& e) {
    throw ConfigError(doc.source, 0, "link", e.what());
  }
  c.link_angles = r.numbers("link", "angles");
  c.snr_sweep_db = r.numbers("link", "snr_sweep");
  if (auto p = r.text("link", "payload")) c.payload_file = path_of(*p);
  r.integer("link", "payload_bytes", c.payload_bytes);
  if (c.payload_bytes == 0) r.fail("link", "payload_bytes", "must be positive");

  if (auto t = r.text("calibrate", "targets")) c.calibrate.targets = *t;
  auto& R = c.calibrate.ranges;
  R.frequency = c.frequency;
  R.grid_step_deg = c.grid_step_deg;
  R.detect_threshold_db = c.detect_threshold_db;
  read_range(r, "d", R.spacing_d);
  read_range(r, "eps", R.eps_eff);
  read_range(r, "rho", R.off_leakage_rho);
  r.integer("calibrate", "refine_rounds", R.refine_rounds);
  r.number("calibrate", "count_penalty", R.count_penalty);
  try {
    R.validate();
  } catch (const std::exception& e) {
    throw ConfigError(doc.source, 0, "calibrate", e.what());
  }

  if (auto p = r.text("proto", "input")) c.proto.input = path_of(*p);
  r.integer("proto", "ticks", c.proto.ticks);

  r.check_unused();

  // Snapshot of the resolved inputs; enough to reproduce a run.
  auto& S = c.snapshot;
  S["em"] = {{"n_elements", std::to_string(c.geometry.n_elements)},
             {"spacing_d", fmt(c.geometry.spacing_d)},
             {"eps_eff", fmt(c.geometry.eps_eff)},
             {"rho", fmt(c.element.off_leakage_rho)},
             {"f0", fmt(c.element.f0)},
             {"damping_gamma", fmt(c.element.damping_gamma)},
             {"coupling", fmt(c.element.coupling_F)},
             {"dipole_scale", fmt(c.element.dipole_scale_m)},
             {"frequency", fmt(c.frequency)},
             {"grid", fmt(c.grid_lo_deg) + ":" + fmt(c.grid_step_deg) + ":" + fmt(c.grid_hi_deg)},
             {"threshold_db", fmt(c.detect_threshold_db)}};
  std::string codes;
  for (const auto& cw : c.codes) codes += (codes.empty() ? "" : ",") + cw.to_string();
  S["codes"] = {{"codes", codes}};
  std::string targets;
  for (const auto& t : c.beam_spec.targets)
    targets += (targets.empty() ? "" : ",") + fmt(t.direction_deg) + ":" + fmt(t.tolerance_deg);
  S["search"] = {{"targets", targets},
                 {"required_beams", std::to_string(c.beam_spec.required_beams)},
                 {"max_sll_db", fmt(c.beam_spec.max_sll_db)},
                 {"min_peak_dbi", fmt(c.beam_spec.min_peak_dbi)}};
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + fmt(x);
    return s;
  };
  S["link"] = {{"rf_hz", fmt(L.rf_hz)},
               {"tx_power_dbm", fmt(L.tx_power_dbm)},
               {"extra_tx_gain_db", fmt(L.extra_tx_gain_db)},
               {"rx_horn_gain_dbi", fmt(L.rx_horn_gain_dbi)},
               {"rx_chain_gain_db", fmt(L.rx_chain_gain_db)},
               {"distance_m", fmt(L.distance_m)},
               {"symbol_rate", fmt(L.symbol_rate)},
               {"code_rate", fmt(L.code_rate)},
               {"noise_figure_db", fmt(L.noise_figure_db)},
               {"noise_temperature_k", fmt(L.noise_temperature_k)},
               {"rolloff", fmt(L.rolloff)},
               {"samples_per_symbol", std::to_string(L.samples_per_symbol)},
               {"rrc_span_symbols", std::to_string(L.rrc_span_symbols)},
               {"forced_snr_db", L.forced_snr_db ? fmt(*L.forced_snr_db) : "none"},
               {"angles", join(c.link_angles)},
               {"snr_sweep", join(c.snr_sweep_db)},
               {"payload", c.payload_file.empty() ? "generated:" + std::to_string(c.payload_bytes)
                                                  : c.payload_file.filename().string()}};
  S["calibrate"] = {{"targets", c.calibrate.targets},
                    {"d", fmt(R.spacing_d.lo) + ":" + fmt(R.spacing_d.step) + ":" + fmt(R.spacing_d.hi)},
                    {"eps", fmt(R.eps_eff.lo) + ":" + fmt(R.eps_eff.step) + ":" + fmt(R.eps_eff.hi)},
                    {"rho", fmt(R.off_leakage_rho.lo) + ":" + fmt(R.off_leakage_rho.step) + ":" +
                                fmt(R.off_leakage_rho.hi)},
                    {"refine_rounds", std::to_string(R.refine_rounds)}};
  S["proto"] = {{"input", c.proto.input.filename().string()}, {"ticks", std::to_string(c.proto.ticks)}};
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return resolve_config(load_ini(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::vector<em::CalibrationTarget> load_targets(const std::filesystem::path& path, std::size_t n_elements) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> want{"label", "code", "angles_deg", "tolerance_deg", "weight"};
  if (t.header != want)
    throw ConfigError(path.string(), 1, "header", "expected label,code,angles_deg,tolerance_deg,weight");
  std::vector<em::CalibrationTarget> out;
  int line = 1;
  for (const auto& row : t.rows) {
    ++line;
    try {
      em::CalibrationTarget c;
      c.label = row[0];
      c.code = parse_code(row[1], n_elements);
      if (!row[2].empty())
        for (const auto& a : split(row[2], ';')) c.lobes.push_back({std::stod(a), std::nullopt, std::nullopt});
      c.tolerance_deg = std::stod(row[3]);
      c.weight = std::stod(row[4]);
      if (!(c.tolerance_deg > 0.0) || !(c.weight > 0.0)) throw std::invalid_argument("tolerance and weight must be positive");
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw ConfigError(path.string(), line, "target", e.what());
    }
  }
  if (out.empty()) throw ConfigError(path.string(), 0, "targets", "no calibration targets");
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (first) {
      t.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != t.header.size())
      throw std::runtime_error("csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str());
  } catch (const std::runtime_error& e) {
    throw ConfigError(path.string(), 0, "csv", e.what());
  }
}

}  // namespace dmatwin::harness
