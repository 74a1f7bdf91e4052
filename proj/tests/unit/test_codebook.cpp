#include <algorithm>
#include <stdexcept>
#include <random>
#include <sstream>

#include "dmatwin/codebook.hpp"
#include "doctest.h"

using namespace dmatwin;
using namespace dmatwin::codebook;

namespace {

em::GuideGeometry small_geometry(std::size_t n) {
  em::GuideGeometry g = em::calibrated_geometry();
  g.n_elements = n;
  return g;
}

std::vector<CodeMetrics> collect(const em::GuideGeometry& g, const em::ElementModel& m, std::span<const double> grid,
                                 const EnumerationOptions& opts = {}) {
  std::vector<CodeMetrics> out;
  enumerate_metrics(g, m, em::kDesignFrequency, grid, [&](const CodeMetrics& c) { out.push_back(c); }, opts);
  return out;
}

}  // namespace

TEST_CASE("beam spec validation") {
  BeamSpec s;
  s.targets = {{0.0, 1.0}};
  CHECK_NOTHROW(s.validate());
  s.targets[0].tolerance_deg = 0.0;
  CHECK_THROWS(s.validate());
  s.targets[0].tolerance_deg = 1.0;
  s.required_beams = 0;
  CHECK_THROWS(s.validate());
  s.required_beams = 1;
  s.max_sll_db = 1.0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("enumeration of a single element") {
  em::ElementModel m;
  m.off_leakage_rho = 0.0;
  const auto all = collect(small_geometry(1), m, em::default_grid());
  REQUIRE(all.size() == 2);
  CHECK(all[0].code.value() == 0);
  CHECK(all[0].summary.n_beams == 0);
  CHECK(all[1].code.value() == 1);
  CHECK(all[1].summary.n_beams == 1);
  CHECK(*all[1].summary.mld_deg == doctest::Approx(0.0));
}

TEST_CASE("enumeration of four elements against a per-code recount") {
  const auto g = small_geometry(4);
  const auto m = em::calibrated_element();
  const auto grid = em::default_grid();
  const auto all = collect(g, m, grid);
  REQUIRE(all.size() == 16);
  int single = 0, oracle = 0;
  for (std::uint32_t v = 0; v < 16; ++v) {
    CHECK(all[v].code.value() == v);
    single += all[v].summary.n_beams == 1;
    oracle += em::beam_summary(em::array_pattern(g, m, em::CodeWord(v, 4), em::kDesignFrequency, grid)).n_beams == 1;
  }
  CHECK(single == oracle);
  CHECK(single > 0);
}

TEST_CASE("enumeration is exhaustive, ordered and consistent for any worker count") {
  const auto g = small_geometry(10);
  const auto m = em::calibrated_element();
  const auto grid = em::angle_grid(-90.0, 90.0, 0.5);
  EnumerationOptions one;
  one.workers = 1;
  one.chunk = 37;
  EnumerationOptions many;
  many.workers = 4;
  many.chunk = 64;
  std::uint64_t last_done = 0;
  many.progress = [&](std::uint64_t done, std::uint64_t total) {
    CHECK(done >= last_done);
    CHECK(total == 1024);
    last_done = done;
  };
  const auto a = collect(g, m, grid, one);
  const auto b = collect(g, m, grid, many);
  REQUIRE(a.size() == 1024);
  REQUIRE(b.size() == 1024);
  CHECK(last_done == 1024);
  std::vector<bool> seen(1024, false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].code.value() == i);
    CHECK_FALSE(seen[a[i].code.value()]);
    seen[a[i].code.value()] = true;
    CHECK(a[i].summary == b[i].summary);
  }
  std::mt19937 rng(2);
  for (int t = 0; t < 30; ++t) {
    const std::size_t i = rng() % 1024;
    CHECK(a[i].summary == em::beam_summary(em::array_pattern(g, m, a[i].code, em::kDesignFrequency, grid)));
  }
}

TEST_CASE("enumeration guard") {
  const auto g = small_geometry(25);
  CHECK_THROWS(enumerate_metrics(g, em::ElementModel{}, 62e9, em::default_grid(), [](const CodeMetrics&) {}));
}

TEST_CASE("assess and rank") {
  BeamSpec spec;
  spec.targets = {{-30.0, 5.0}, {20.0, 5.0}};
  spec.required_beams = 2;
  spec.max_sll_db = -1.0;
  CodeMetrics c;
  c.code = em::CodeWord(7, 16);
  c.summary.n_beams = 2;
  c.summary.peak_dbi = 10.0;
  c.summary.sll_db = -5.0;
  c.summary.lobes = {{-28.0, 10.0, 9.0}, {21.0, 9.0, 9.0}};
  assess(c, spec);
  CHECK(c.feasible);
  CHECK(c.residual_deg == doctest::Approx(3.0));

  CodeMetrics far = c;
  far.summary.lobes[1].angle_deg = 26.0;
  assess(far, spec);
  CHECK_FALSE(far.feasible);

  CodeMetrics high_sll = c;
  high_sll.summary.sll_db = -0.5;
  assess(high_sll, spec);
  CHECK_FALSE(high_sll.feasible);

  CodeMetrics tie = c;
  tie.code = em::CodeWord(3, 16);
  CodeMetrics better = c;
  better.code = em::CodeWord(9, 16);
  better.summary.peak_dbi = 12.0;
  std::vector<CodeMetrics> in{c, far, tie, better};
  const auto ranked = rank_feasible(in);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].code.value() == 9);
  CHECK(ranked[1].code.value() == 3);
  CHECK(ranked[2].code.value() == 7);
  std::reverse(in.begin(), in.end());
  const auto again = rank_feasible(in);
  for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(again[i].code == ranked[i].code);
}

TEST_CASE("synthesis") {
  const auto g = em::calibrated_geometry();
  const auto m = em::calibrated_element();
  const auto grid = em::default_grid();

  SUBCASE("broadside beam admits the all-radiating code") {
    const auto all_ones = em::beam_summary(em::array_pattern(g, m, em::CodeWord::all_ones(16), 62e9, grid));
    BeamSpec spec;
    spec.targets = {{*all_ones.mld_deg, 1.0}};
    spec.required_beams = 1;
    const auto ranked = synthesize(spec, g, m, 62e9, grid);
    CHECK(std::any_of(ranked.begin(), ranked.end(),
                      [](const CodeMetrics& c) { return c.code == em::CodeWord::all_ones(16); }));
  }
  SUBCASE("unreachable direction gives nothing") {
    BeamSpec spec;
    spec.targets = {{89.99, 0.001}};
    CHECK(synthesize(spec, g, m, 62e9, grid).empty());
  }
  SUBCASE("spec built from a code's own lobes ranks that code first") {
    const em::CodeWord code = em::CodeWord::from_string("1001001001001001");
    const auto s = em::beam_summary(em::array_pattern(g, m, code, 62e9, grid));
    BeamSpec spec;
    for (const auto& l : s.lobes) spec.targets.push_back({l.angle_deg, 0.5});
    spec.required_beams = s.n_beams;
    const auto ranked = synthesize(spec, g, m, 62e9, grid);
    REQUIRE_FALSE(ranked.empty());
    CHECK(ranked.front().residual_deg == 0.0);
    const auto top = std::find_if(ranked.begin(), ranked.end(), [&](const CodeMetrics& c) { return c.code == code; });
    REQUIRE(top != ranked.end());
    CHECK(top->residual_deg == 0.0);
  }
}

TEST_CASE("complement of a code generally changes the pattern") {
  const auto g = em::calibrated_geometry();
  em::ElementModel m;
  m.off_leakage_rho = 0.0;
  const auto grid = em::default_grid();
  const em::CodeWord c = em::CodeWord::from_string("1111111100000000");
  const auto a = em::array_pattern(g, m, c, 62e9, grid);
  const auto b = em::array_pattern(g, m, c.complement(), 62e9, grid);
  // Two halves of equal size: the same magnitude pattern, translated.
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(a.field[i]) == doctest::Approx(std::abs(b.field[i])).epsilon(1e-9));
  const em::CodeWord d = em::CodeWord::from_string("1110000000000000");
  const auto e = em::array_pattern(g, m, d, 62e9, grid);
  const auto f = em::array_pattern(g, m, d.complement(), 62e9, grid);
  double diff = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) diff = std::max(diff, std::abs(e.directivity_dbi[i] - f.directivity_dbi[i]));
  CHECK(diff > 1.0);
}

TEST_CASE("reference code verification") {
  const auto rep = verify_reference_codes(em::calibrated_geometry(), em::calibrated_element(), 62e9);
  REQUIRE(rep.size() == 5);
  CHECK(rep[0].code.value() == 0x9249);
  CHECK(rep[0].expected_beams == 2);
  CHECK(rep[2].expected_beams == 1);
  const auto wrong = verify_code(em::CodeWord::all_ones(16), em::reference_codes()[0], em::calibrated_geometry(),
                                 em::calibrated_element(), 62e9);
  CHECK_FALSE(wrong.passed());
}

TEST_CASE("metrics csv") {
  CodeMetrics c;
  c.code = em::CodeWord(0x9249, 16);
  c.summary.n_beams = 2;
  c.summary.mld_deg = -34.75;
  c.summary.peak_dbi = 9.5;
  c.summary.sll_db = -4.25;
  c.summary.lobes = {{-34.75, 9.5, 10.0}, {0.5, 8.0, 12.5}};
  std::ostringstream os;
  write_metrics_header(os);
  write_metrics_row(os, c);
  CHECK(os.str() ==
        "code_hex,n_beams,mld_list,peak_dbi,hpbw_list,sll_db,feasible\n"
        "0x9249,2,-34.75;0.50,9.50,10.00;12.50,-4.25,0\n");
}
