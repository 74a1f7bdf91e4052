#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "dmatwin/calibration.hpp"
#include "dmatwin/em_model.hpp"

namespace dmatwin::codebook {

using em::BeamSummary;
using em::CodeWord;

struct BeamTarget {
  double direction_deg = 0.0;
  double tolerance_deg = 1.0;
};

struct BeamSpec {
  std::vector<BeamTarget> targets;
  int required_beams = 1;
  double max_sll_db = 0.0;
  double min_peak_dbi = -std::numeric_limits<double>::infinity();

  void validate() const;
};

struct CodeMetrics {
  CodeWord code;
  BeamSummary summary;
  bool feasible = false;
  // Sum of |lobe - target| over the matched lobes; set when feasible.
  double residual_deg = 0.0;
};

inline constexpr std::size_t kMaxEnumerationBits = 24;

struct EnumerationOptions {
  double detect_threshold_db = em::kDefaultDetectThresholdDb;
  // 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
  std::size_t chunk = 4096;
  // Evaluated against each code when present; otherwise feasible stays false.
  std::optional<BeamSpec> spec;
  std::function<void(std::uint64_t done, std::uint64_t total)> progress;
};

// Fills feasible/residual_deg of `m` against `spec`.
void assess(CodeMetrics& m, const BeamSpec& spec);

// Streams metrics for every code 0 .. 2^N - 1 in ascending order.
void enumerate_metrics(const em::GuideGeometry& geom, const em::ElementModel& model, double frequency,
                       std::span<const double> grid, const std::function<void(const CodeMetrics&)>& sink,
                       const EnumerationOptions& opts = {});

// Sorts feasible entries by (residual, -peak_dbi, code value) and drops the rest.
std::vector<CodeMetrics> rank_feasible(std::vector<CodeMetrics> metrics);

std::vector<CodeMetrics> synthesize(const BeamSpec& spec, const em::GuideGeometry& geom,
                                    const em::ElementModel& model, double frequency,
                                    std::span<const double> grid, EnumerationOptions opts = {});

em::TargetResidual verify_code(const CodeWord& code, const em::CalibrationTarget& target,
                               const em::GuideGeometry& geom, const em::ElementModel& model,
                               double frequency);

// Checks the five reference codes against the model.
std::vector<em::TargetResidual> verify_reference_codes(const em::GuideGeometry& geom,
                                                       const em::ElementModel& model, double frequency);

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const CodeMetrics& m);

}  // namespace dmatwin::codebook
