#include "dmatwin/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <limits>
#include <tuple>

namespace dmatwin::em {

std::vector<double> ParamRange::values() const {
  if (step <= 0.0 || hi < lo) throw std::invalid_argument("ParamRange: degenerate range");
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + static_cast<double>(i) * step);
  return v;
}

void SearchRanges::validate() const {
  for (const ParamRange* r : {&spacing_d, &eps_eff, &off_leakage_rho}) {
    if (!(r->step > 0.0) || !(r->hi >= r->lo) || !std::isfinite(r->lo) || !std::isfinite(r->hi))
      throw std::invalid_argument("calibrate: degenerate search range");
  }
  if (!(spacing_d.lo > 0.0)) throw std::invalid_argument("calibrate: spacing range must be positive");
  if (eps_eff.lo < 1.0) throw std::invalid_argument("calibrate: eps_eff range must be >= 1");
  if (off_leakage_rho.lo < 0.0 || off_leakage_rho.hi >= 1.0)
    throw std::invalid_argument("calibrate: rho range must lie in [0, 1)");
  if (!(grid_step_deg > 0.0)) throw std::invalid_argument("calibrate: grid step must be positive");
}

namespace {

CalibrationTarget make_target(std::string label, const char* bits, std::vector<TargetLobe> lobes,
                              double tol = 10.0) {
  return {std::move(label), CodeWord::from_string(bits), std::move(lobes), tol};
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<CalibrationTarget> reference_codes() {
  return {
      make_target("code1", "1001001001001001", {{-49.0, 11.12, 13.0}, {23.0, 11.85, 11.0}}),
      make_target("code2", "0001000100010001", {{-16.0, 7.97, 10.0}, {31.0, 7.95, 17.5}}),
      make_target("code3", "1010101010101010", {{-9.0, 8.53, 8.0}}),
      make_target("code4", "1001100110011001", {{-8.0, 8.5, 24.0}}),
      make_target("code5", "1010101010000000", {{36.0, 10.2, 13.5}}),
  };
}

CalibrationTarget broadside_target(std::size_t n_elements) {
  // The all-radiating beam at broadside is the one geometric fact the fit must honor.
  return {"all_ones", CodeWord::all_ones(n_elements), {{0.0, std::nullopt, std::nullopt}}, 2.0, 100.0};
}

std::vector<CalibrationTarget> reference_targets() {
  auto t = reference_codes();
  t.push_back(broadside_target());
  return t;
}

TargetResidual score_target(const CalibrationTarget& target, const BeamSummary& summary,
                            double count_penalty) {
  TargetResidual r;
  r.label = target.label;
  r.code = target.code;
  r.tolerance_deg = target.tolerance_deg;
  r.expected_beams = static_cast<int>(target.lobes.size());
  r.model_beams = summary.n_beams;
  for (const auto& l : target.lobes) r.expected_deg.push_back(l.angle_deg);
  std::sort(r.expected_deg.begin(), r.expected_deg.end());

  const std::size_t k = r.expected_deg.size();
  if (summary.lobes.empty()) {
    r.cost = target.weight * (count_penalty + 180.0 * 180.0) * static_cast<double>(k);
    return r;
  }

  std::vector<double> chosen;
  if (summary.lobes.size() >= k) {
    std::vector<Lobe> by_strength = summary.lobes;
    std::stable_sort(by_strength.begin(), by_strength.end(),
                     [](const Lobe& a, const Lobe& b) { return a.peak_dbi > b.peak_dbi; });
    for (std::size_t i = 0; i < k; ++i) chosen.push_back(by_strength[i].angle_deg);
    std::sort(chosen.begin(), chosen.end());
  } else {
    for (double e : r.expected_deg) {
      double best = summary.lobes.front().angle_deg;
      for (const auto& l : summary.lobes)
        if (std::abs(l.angle_deg - e) < std::abs(best - e)) best = l.angle_deg;
      chosen.push_back(best);
    }
  }

  r.sign_match = true;
  r.within_tolerance = true;
  double sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double res = chosen[i] - r.expected_deg[i];
    r.matched_deg.push_back(chosen[i]);
    r.residual_deg.push_back(res);
    sq += res * res;
    if (r.expected_deg[i] != 0.0 && sign_of(chosen[i]) != sign_of(r.expected_deg[i])) r.sign_match = false;
    if (std::abs(res) > target.tolerance_deg) r.within_tolerance = false;
  }
  r.count_match = summary.n_beams == r.expected_beams;
  r.cost = target.weight * (sq + count_penalty * std::abs(summary.n_beams - r.expected_beams));
  return r;
}

bool FitReport::all_passed() const {
  return std::all_of(residuals.begin(), residuals.end(), [](const auto& r) { return r.passed(); });
}

FitReport evaluate_fit(const std::vector<CalibrationTarget>& targets, const GuideGeometry& geom,
                       const ElementModel& model, const SearchRanges& ranges) {
  const auto grid = angle_grid(-90.0, 90.0, ranges.grid_step_deg);
  const PatternEvaluator eval(geom, model, ranges.frequency, grid);
  FitReport rep;
  for (const auto& t : targets) {
    const auto summary = beam_summary(eval.evaluate(t.code), ranges.detect_threshold_db);
    rep.residuals.push_back(score_target(t, summary, ranges.count_penalty));
    rep.cost += rep.residuals.back().cost;
  }
  rep.evaluations = 1;
  return rep;
}

CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets, const SearchRanges& ranges,
                            const GuideGeometry& base_geometry, const ElementModel& base_element) {
  if (targets.empty()) throw std::invalid_argument("calibrate: no targets");
  ranges.validate();
  for (const auto& t : targets) {
    if (t.code.size() != base_geometry.n_elements)
      throw std::invalid_argument("calibrate: target code width does not match geometry");
    if (t.lobes.empty()) throw std::invalid_argument("calibrate: target '" + t.label + "' has no lobes");
  }

  using Params = std::tuple<double, double, double>;  // eps_eff, spacing_d, rho
  std::size_t evaluations = 0;
  auto cost_of = [&](const Params& p) {
    GuideGeometry g = base_geometry;
    ElementModel m = base_element;
    std::tie(g.eps_eff, g.spacing_d, m.off_leakage_rho) = p;
    ++evaluations;
    return evaluate_fit(targets, g, m, ranges).cost;
  };

  Params best{};
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](const Params& p, double c) {
    if (c < best_cost || (c == best_cost && p < best)) {
      best_cost = c;
      best = p;
    }
  };

  for (double eps : ranges.eps_eff.values())
    for (double d : ranges.spacing_d.values())
      for (double rho : ranges.off_leakage_rho.values()) {
        const Params p{eps, d, rho};
        consider(p, cost_of(p));
      }

  // Pattern search around the grid optimum; only strict improvements move it.
  double steps[3] = {ranges.eps_eff.step / 2.0, ranges.spacing_d.step / 2.0,
                     ranges.off_leakage_rho.step / 2.0};
  const ParamRange* bounds[3] = {&ranges.eps_eff, &ranges.spacing_d, &ranges.off_leakage_rho};
  for (int round = 0; round < ranges.refine_rounds; ++round) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int axis = 0; axis < 3; ++axis) {
        for (double dir : {-1.0, 1.0}) {
          Params p = best;
          double* field = axis == 0 ? &std::get<0>(p) : axis == 1 ? &std::get<1>(p) : &std::get<2>(p);
          *field += dir * steps[axis];
          if (*field < bounds[axis]->lo || *field > bounds[axis]->hi) continue;
          const double c = cost_of(p);
          if (c < best_cost) {
            best_cost = c;
            best = p;
            moved = true;
          }
        }
      }
    }
    for (double& s : steps) s /= 2.0;
  }

  CalibrationResult out;
  out.geometry = base_geometry;
  out.element = base_element;
  std::tie(out.geometry.eps_eff, out.geometry.spacing_d, out.element.off_leakage_rho) = best;
  out.report = evaluate_fit(targets, out.geometry, out.element, ranges);
  out.report.evaluations = evaluations;
  return out;
}

void write_fit_report(std::ostream& os, const FitReport& report) {
  os << "label,code,expected_beams,model_beams,expected_deg,matched_deg,residual_deg,"
        "count_match,sign_match,within_tolerance,passed\n";
  char buf[64];
  auto join = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f", i ? ";" : "", v[i]);
      s += buf;
    }
    return s;
  };
  for (const auto& r : report.residuals) {
    os << r.label << ',' << r.code.to_string() << ',' << r.expected_beams << ',' << r.model_beams << ','
       << join(r.expected_deg) << ',' << join(r.matched_deg) << ',' << join(r.residual_deg) << ','
       << r.count_match << ',' << r.sign_match << ',' << r.within_tolerance << ',' << r.passed() << '\n';
  }
}

}  // namespace dmatwin::em
