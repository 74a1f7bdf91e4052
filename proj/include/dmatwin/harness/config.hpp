#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmatwin/calibration.hpp"
#include "dmatwin/codebook.hpp"
#include "dmatwin/dvb/link.hpp"
#include "dmatwin/em_model.hpp"

namespace dmatwin::harness {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitIo = 4 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& what);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IniValue {
  std::string text;
  int line = 0;
};

// Sections of `key = value` pairs. '#' and ';' start comments at line start.
struct IniDocument {
  std::string source;
  std::map<std::string, std::map<std::string, IniValue>> sections;

  const IniValue* find(const std::string& section, const std::string& key) const;
};

IniDocument parse_ini(const std::string& text, const std::string& source = "<config>");
IniDocument load_ini(const std::filesystem::path& path);

// Codes accept 0x/0b prefixes, a plain 0/1 string of exactly n_elements
// characters (element 0 first), or decimal. `radix` forces one reading.
em::CodeWord parse_code(const std::string& token, std::size_t n_elements, const std::string& radix = "auto");

struct CalibrateSettings {
  std::string targets = "reference";  // or a CSV path
  em::SearchRanges ranges;
};

struct ProtoSettings {
  std::filesystem::path input;
  std::uint64_t ticks = 1000;
};

struct ExperimentConfig {
  std::filesystem::path base_dir;
  std::string em_model = "calibrated";
  em::GuideGeometry geometry;
  em::ElementModel element;
  double frequency = em::kDesignFrequency;
  double grid_lo_deg = -90.0;
  double grid_hi_deg = 90.0;
  double grid_step_deg = 0.25;
  double detect_threshold_db = em::kDefaultDetectThresholdDb;

  std::vector<em::CodeWord> codes;

  codebook::BeamSpec beam_spec;
  bool beam_spec_set = false;
  unsigned workers = 0;

  dvb::LinkConfig link;
  std::vector<double> link_angles;
  std::vector<double> snr_sweep_db;
  std::filesystem::path payload_file;
  std::size_t payload_bytes = 125000;

  CalibrateSettings calibrate;
  ProtoSettings proto;

  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";

  // Resolved key/value snapshot written into the manifest.
  std::map<std::string, std::map<std::string, std::string>> snapshot;

  std::vector<double> grid() const;
  std::uint64_t require_seed() const;
};

ExperimentConfig resolve_config(const IniDocument& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Targets CSV: label,code,angles_deg,tolerance_deg,weight with ';' between angles.
std::vector<em::CalibrationTarget> load_targets(const std::filesystem::path& path, std::size_t n_elements);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

}  // namespace dmatwin::harness
