#include "dmatwin/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>

namespace dmatwin::codebook {

void BeamSpec::validate() const {
  if (required_beams < 1) throw std::invalid_argument("BeamSpec: required_beams must be >= 1");
  if (max_sll_db > 0.0) throw std::invalid_argument("BeamSpec: max_sll_db must be <= 0");
  if (targets.size() > static_cast<std::size_t>(required_beams))
    throw std::invalid_argument("BeamSpec: more targets than required beams");
  for (const auto& t : targets)
    if (!(t.tolerance_deg > 0.0)) throw std::invalid_argument("BeamSpec: tolerance must be positive");
}

namespace {

// Order-preserving assignment of sorted targets to sorted lobes minimizing the
// summed absolute error, subject to every pair being within tolerance.
std::optional<double> match_targets(std::vector<BeamTarget> targets, const std::vector<em::Lobe>& lobes) {
  std::sort(targets.begin(), targets.end(),
            [](const BeamTarget& a, const BeamTarget& b) { return a.direction_deg < b.direction_deg; });
  const std::size_t t = targets.size();
  const std::size_t l = lobes.size();
  if (t == 0) return 0.0;
  if (t > l) return std::nullopt;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // best[i][j]: first i targets placed among first j lobes.
  std::vector<std::vector<double>> best(t + 1, std::vector<double>(l + 1, inf));
  for (std::size_t j = 0; j <= l; ++j) best[0][j] = 0.0;
  for (std::size_t i = 1; i <= t; ++i) {
    for (std::size_t j = i; j <= l; ++j) {
      double v = best[i][j - 1];
      const double err = std::abs(lobes[j - 1].angle_deg - targets[i - 1].direction_deg);
      if (err <= targets[i - 1].tolerance_deg && best[i - 1][j - 1] < inf)
        v = std::min(v, best[i - 1][j - 1] + err);
      best[i][j] = v;
    }
  }
  if (best[t][l] == inf) return std::nullopt;
  return best[t][l];
}

}  // namespace

void assess(CodeMetrics& m, const BeamSpec& spec) {
  m.feasible = false;
  m.residual_deg = 0.0;
  const auto& s = m.summary;
  if (s.n_beams != spec.required_beams || !s.peak_dbi) return;
  if (*s.peak_dbi < spec.min_peak_dbi) return;
  if (s.sll_db && *s.sll_db > spec.max_sll_db) return;
  const auto residual = match_targets(spec.targets, s.lobes);
  if (!residual) return;
  m.feasible = true;
  m.residual_deg = *residual;
}

void enumerate_metrics(const em::GuideGeometry& geom, const em::ElementModel& model, double frequency,
                       std::span<const double> grid, const std::function<void(const CodeMetrics&)>& sink,
                       const EnumerationOptions& opts) {
  const std::size_t n = geom.n_elements;
  if (n > kMaxEnumerationBits)
    throw std::invalid_argument("enumerate_metrics: at most " + std::to_string(kMaxEnumerationBits) +
                                " elements can be enumerated");
  if (opts.spec) opts.spec->validate();
  const em::PatternEvaluator eval(geom, model, frequency, grid);
  const std::uint64_t total = std::uint64_t{1} << n;
  unsigned workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);

  std::vector<CodeMetrics> buffer;
  for (std::uint64_t base = 0; base < total; base += chunk) {
    const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, total - base));
    buffer.assign(count, {});
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        CodeMetrics& m = buffer[i];
        m.code = CodeWord(static_cast<std::uint32_t>(base + i), n);
        m.summary = em::beam_summary(eval.evaluate(m.code), opts.detect_threshold_db);
        if (opts.spec) assess(m, *opts.spec);
      }
    };
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (w <= 1) {
      work(0, count);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < w; ++k) pool.emplace_back(work, count * k / w, count * (k + 1) / w);
    }
    for (const auto& m : buffer) sink(m);
    if (opts.progress) opts.progress(base + count, total);
  }
}

std::vector<CodeMetrics> rank_feasible(std::vector<CodeMetrics> metrics) {
  std::erase_if(metrics, [](const CodeMetrics& m) { return !m.feasible; });
  std::sort(metrics.begin(), metrics.end(), [](const CodeMetrics& a, const CodeMetrics& b) {
    if (a.residual_deg != b.residual_deg) return a.residual_deg < b.residual_deg;
    const double pa = a.summary.peak_dbi.value_or(-1e300);
    const double pb = b.summary.peak_dbi.value_or(-1e300);
    if (pa != pb) return pa > pb;
    return a.code.value() < b.code.value();
  });
  return metrics;
}

std::vector<CodeMetrics> synthesize(const BeamSpec& spec, const em::GuideGeometry& geom,
                                    const em::ElementModel& model, double frequency,
                                    std::span<const double> grid, EnumerationOptions opts) {
  spec.validate();
  opts.spec = spec;
  std::vector<CodeMetrics> feasible;
  enumerate_metrics(geom, model, frequency, grid,
                    [&](const CodeMetrics& m) {
                      if (m.feasible) feasible.push_back(m);
                    },
                    opts);
  return rank_feasible(std::move(feasible));
}

em::TargetResidual verify_code(const CodeWord& code, const em::CalibrationTarget& target,
                               const em::GuideGeometry& geom, const em::ElementModel& model,
                               double frequency) {
  const auto grid = em::default_grid();
  const auto summary = em::beam_summary(em::array_pattern(geom, model, code, frequency, grid));
  em::CalibrationTarget t = target;
  t.code = code;
  return em::score_target(t, summary, 0.0);
}

std::vector<em::TargetResidual> verify_reference_codes(const em::GuideGeometry& geom,
                                                       const em::ElementModel& model, double frequency) {
  std::vector<em::TargetResidual> out;
  for (const auto& t : em::reference_codes()) out.push_back(verify_code(t.code, t, geom, model, frequency));
  return out;
}

void write_metrics_header(std::ostream& os) { os << "code_hex,n_beams,mld_list,peak_dbi,hpbw_list,sll_db,feasible\n"; }

void write_metrics_row(std::ostream& os, const CodeMetrics& m) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string mld, hpbw;
  for (std::size_t i = 0; i < m.summary.lobes.size(); ++i) {
    if (i) {
      mld += ';';
      hpbw += ';';
    }
    mld += fmt(m.summary.lobes[i].angle_deg);
    hpbw += fmt(m.summary.lobes[i].hpbw_deg);
  }
  os << "0x" << m.code.to_hex() << ',' << m.summary.n_beams << ',' << mld << ','
     << (m.summary.peak_dbi ? fmt(*m.summary.peak_dbi) : "") << ',' << hpbw << ','
     << (m.summary.sll_db ? fmt(*m.summary.sll_db) : "") << ',' << (m.feasible ? 1 : 0) << '\n';
}

}  // namespace dmatwin::codebook
