#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dmatwin/em_model.hpp"

namespace dmatwin::em {

struct TargetLobe {
  double angle_deg = 0.0;
  std::optional<double> gain_dbi;  // metadata only, never fitted
  std::optional<double> hpbw_deg;  // metadata only, never fitted
};

// Expected beam layout for one code. lobes.size() is the expected beam count.
struct CalibrationTarget {
  std::string label;
  CodeWord code;
  std::vector<TargetLobe> lobes;
  double tolerance_deg = 10.0;
  // Multiplies this target's cost in the fit.
  double weight = 1.0;
};

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  std::vector<double> values() const;
};

struct SearchRanges {
  ParamRange spacing_d{1.0e-3, 4.0e-3, 0.1e-3};
  ParamRange eps_eff{1.0, 6.0, 0.1};
  ParamRange off_leakage_rho{0.0, 0.5, 1.0 / 12.0};
  double frequency = kDesignFrequency;
  double grid_step_deg = 0.25;
  double detect_threshold_db = kDefaultDetectThresholdDb;
  // Cost added per unit of lobe-count mismatch, in deg^2.
  double count_penalty = 400.0;
  int refine_rounds = 6;

  void validate() const;
};

struct TargetResidual {
  std::string label;
  CodeWord code;
  int expected_beams = 0;
  int model_beams = 0;
  std::vector<double> expected_deg;
  std::vector<double> matched_deg;   // model lobe paired with each expected lobe
  std::vector<double> residual_deg;  // matched - expected
  bool count_match = false;
  bool sign_match = false;
  bool within_tolerance = false;
  double tolerance_deg = 0.0;
  double cost = 0.0;

  bool passed() const { return count_match && sign_match && within_tolerance; }
};

struct FitReport {
  double cost = 0.0;
  std::size_t evaluations = 0;
  std::vector<TargetResidual> residuals;

  bool all_passed() const;
};

struct CalibrationResult {
  GuideGeometry geometry;
  ElementModel element;
  FitReport report;
};

// Reference beam layouts of the five measured codes (62 GHz).
std::vector<CalibrationTarget> reference_codes();
// reference_codes() plus the all-radiating broadside anchor.
std::vector<CalibrationTarget> reference_targets();
CalibrationTarget broadside_target(std::size_t n_elements = 16);

// Pairs model lobes with expected lobes and scores one target.
TargetResidual score_target(const CalibrationTarget& target, const BeamSummary& summary,
                            double count_penalty);

FitReport evaluate_fit(const std::vector<CalibrationTarget>& targets, const GuideGeometry& geom,
                       const ElementModel& model, const SearchRanges& ranges);

// Grid search over (spacing_d, eps_eff, off_leakage_rho) followed by a
// deterministic pattern-search refinement. Ties go to the lexicographically
// smallest (eps_eff, spacing_d, off_leakage_rho).
CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets, const SearchRanges& ranges,
                            const GuideGeometry& base_geometry = {}, const ElementModel& base_element = {});

// Parameters produced by calibrate(reference_targets(), SearchRanges{}).
GuideGeometry calibrated_geometry();
ElementModel calibrated_element();

void write_fit_report(std::ostream& os, const FitReport& report);

}  // namespace dmatwin::em
