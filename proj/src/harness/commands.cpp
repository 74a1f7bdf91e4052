#include "dmatwin/harness/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "dmatwin/codebook.hpp"
#include "dmatwin/control_proto.hpp"
#include "dmatwin/dvb/link.hpp"
#include "dmatwin/harness/manifest.hpp"

namespace dmatwin::harness {

namespace {

constexpr std::uint64_t kStreamPayload = 0;
constexpr std::uint64_t kStreamAngle = 1;
constexpr std::uint64_t kStreamSnr = 2;

std::string num(double v, const char* f = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v, "%.2f") : std::string(); }

RunManifest start_manifest(const std::string& command, const ExperimentConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg.snapshot;
  if (cfg.seed) {
    m.seed = *cfg.seed;
    m.seeded = true;
  }
  return m;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs body(i) for i in [0, n) on up to `workers` threads. Results are stored
// by index so the output does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

void require_codes(const ExperimentConfig& cfg) {
  if (cfg.codes.empty()) throw ConfigError("<config>", 0, "codes.codes", "at least one code is required");
}

}  // namespace

int cmd_pattern(const ExperimentConfig& cfg, std::ostream& log) {
  require_codes(cfg);
  const auto grid = cfg.grid();
  const em::PatternEvaluator eval(cfg.geometry, cfg.element, cfg.frequency, grid);
  RunManifest man = start_manifest("pattern", cfg);

  std::ostringstream summary;
  summary << "code_hex,code_bits,n_beams,mld_deg,peak_dbi,hpbw_deg,sll_db,lobes_deg\n";
  std::set<std::uint32_t> seen;
  for (const auto& code : cfg.codes) {
    const em::PatternCut cut = eval.evaluate(code);
    const em::BeamSummary s = em::beam_summary(cut, cfg.detect_threshold_db);
    std::string lobes;
    for (const auto& l : s.lobes) lobes += (lobes.empty() ? "" : ";") + num(l.angle_deg, "%.2f");
    summary << "0x" << code.to_hex() << ',' << code.to_string() << ',' << s.n_beams << ',' << opt(s.mld_deg) << ','
            << opt(s.peak_dbi) << ',' << opt(s.hpbw_deg) << ',' << opt(s.sll_db) << ',' << lobes << '\n';
    log << "0x" << code.to_hex() << "  beams=" << s.n_beams << "  mld=" << (s.mld_deg ? num(*s.mld_deg, "%.2f") : "-")
        << "  peak=" << (s.peak_dbi ? num(*s.peak_dbi, "%.2f") : "-") << " dBi\n";
    if (!seen.insert(code.value()).second) continue;
    std::ostringstream csv;
    em::write_pattern_csv(csv, cut);
    man.outputs.push_back(write_output(cfg.out_dir, "pattern_" + code.to_hex() + ".csv", csv.str()));
  }
  man.outputs.push_back(write_output(cfg.out_dir, "beam_summary.csv", summary.str()));
  write_manifest(cfg.out_dir, man);
  return kExitOk;
}

int cmd_search(const ExperimentConfig& cfg, std::ostream& log) {
  const std::size_t n = cfg.geometry.n_elements;
  if (n > codebook::kMaxEnumerationBits)
    throw ConfigError("<config>", 0, "em.n_elements", "exhaustive search is limited to 24 elements");
  const auto grid = cfg.grid();
  RunManifest man = start_manifest("search", cfg);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  std::ofstream all(cfg.out_dir / "codebook_metrics.csv", std::ios::binary | std::ios::trunc);
  if (!all) throw IoError("cannot write " + (cfg.out_dir / "codebook_metrics.csv").string());
  codebook::write_metrics_header(all);

  codebook::EnumerationOptions opts;
  opts.detect_threshold_db = cfg.detect_threshold_db;
  opts.workers = cfg.workers;
  if (cfg.beam_spec_set) opts.spec = cfg.beam_spec;
  const std::uint64_t total = std::uint64_t{1} << n;
  std::uint64_t next_report = total / 10;
  opts.progress = [&](std::uint64_t done, std::uint64_t) {
    if (done >= next_report) {
      log << "search: " << done << " / " << total << '\n';
      next_report += total / 10;
    }
  };
  std::vector<codebook::CodeMetrics> feasible;
  std::uint64_t rows = 0;
  codebook::enumerate_metrics(cfg.geometry, cfg.element, cfg.frequency, grid,
                              [&](const codebook::CodeMetrics& m) {
                                codebook::write_metrics_row(all, m);
                                ++rows;
                                if (m.feasible) feasible.push_back(m);
                              },
                              opts);
  all.close();
  if (!all) throw IoError("write failed: codebook_metrics.csv");
  man.outputs.emplace_back("codebook_metrics.csv");

  const auto ranked = codebook::rank_feasible(std::move(feasible));
  std::ostringstream rk;
  codebook::write_metrics_header(rk);
  for (const auto& m : ranked) codebook::write_metrics_row(rk, m);
  man.outputs.push_back(write_output(cfg.out_dir, "codebook_ranked.csv", rk.str()));
  write_manifest(cfg.out_dir, man);
  log << "search: " << rows << " codes evaluated, " << ranked.size() << " feasible\n";
  if (!ranked.empty()) log << "search: best " << ranked.front().code.to_hex() << '\n';
  if (cfg.beam_spec_set && ranked.empty()) return kExitInfeasible;
  return kExitOk;
}

int cmd_link(const ExperimentConfig& cfg, std::ostream& log) {
  require_codes(cfg);
  const std::uint64_t seed = cfg.require_seed();
  if (cfg.link_angles.empty() && cfg.snr_sweep_db.empty())
    throw ConfigError("<config>", 0, "link.angles", "give link.angles and/or link.snr_sweep");

  std::vector<std::uint8_t> payload;
  if (!cfg.payload_file.empty()) {
    payload = read_bytes(cfg.payload_file);
  } else {
    std::mt19937_64 rng(derive_seed(seed, kStreamPayload, 0));
    payload.resize(cfg.payload_bytes);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng() >> 56);
  }

  const auto grid = cfg.grid();
  const em::PatternCut pattern = em::array_pattern(cfg.geometry, cfg.element, cfg.codes.front(), cfg.frequency, grid);
  RunManifest man = start_manifest("link", cfg);
  man.config["link"]["code"] = cfg.codes.front().to_string();
  man.config["link"]["payload_sha256"] =
      sha256_hex(std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()));

  std::vector<dvb::LinkReport> by_angle(cfg.link_angles.size());
  parallel_for(by_angle.size(), cfg.workers, [&](std::size_t i) {
    by_angle[i] = dvb::run_link(cfg.link, pattern, cfg.link_angles[i], payload, derive_seed(seed, kStreamAngle, i));
  });
  if (!by_angle.empty()) {
    std::ostringstream rep, sweep;
    rep << "angle_deg,";
    dvb::write_report_header(rep);
    dvb::write_sweep_header(sweep);
    for (std::size_t i = 0; i < by_angle.size(); ++i) {
      const auto& r = by_angle[i];
      rep << num(cfg.link_angles[i]) << ',';
      dvb::write_report_row(rep, r);
      dvb::write_sweep_row(sweep, cfg.link_angles[i], r);
      const std::string name = "recovered_" + std::to_string(i) + ".bin";
      man.outputs.push_back(write_output(
          cfg.out_dir, name,
          std::string_view(reinterpret_cast<const char*>(r.recovered_payload.data()), r.recovered_payload.size())));
      log << "link: angle " << num(cfg.link_angles[i], "%.2f") << " deg  snr " << num(r.snr_db, "%.2f")
          << " dB  post-FEC BER " << num(r.postfec_ber, "%.3e") << "  " << (r.payload_recovered ? "recovered" : "FAILED")
          << '\n';
    }
    man.outputs.push_back(write_output(cfg.out_dir, "link_report.csv", rep.str()));
    man.outputs.push_back(write_output(cfg.out_dir, "link_sweep.csv", sweep.str()));
  }

  if (!cfg.snr_sweep_db.empty()) {
    std::vector<dvb::LinkReport> by_snr(cfg.snr_sweep_db.size());
    parallel_for(by_snr.size(), cfg.workers, [&](std::size_t j) {
      dvb::LinkConfig lc = cfg.link;
      lc.forced_snr_db = cfg.snr_sweep_db[j];
      const double es_n0 = dvb::es_n0_from_snr_db(lc, cfg.snr_sweep_db[j]);
      by_snr[j] = dvb::simulate_chain(lc, payload, es_n0, derive_seed(seed, kStreamSnr, j));
      by_snr[j].snr_db = cfg.snr_sweep_db[j];
    });
    std::ostringstream ber;
    ber << "snr_db,es_n0_db,prefec_ber,postfec_ber,evm_pct,recovered\n";
    for (const auto& r : by_snr)
      ber << num(r.snr_db) << ',' << num(r.es_n0_db) << ',' << num(r.prefec_ber, "%.6e") << ','
          << num(r.postfec_ber, "%.6e") << ',' << num(r.evm_pct) << ',' << (r.payload_recovered ? 1 : 0) << '\n';
    man.outputs.push_back(write_output(cfg.out_dir, "ber_vs_snr.csv", ber.str()));
  }
  write_manifest(cfg.out_dir, man);
  return kExitOk;
}

int cmd_calibrate(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<em::CalibrationTarget> targets;
  if (cfg.calibrate.targets == "reference") {
    targets = em::reference_targets();
  } else {
    std::filesystem::path p(cfg.calibrate.targets);
    if (!p.is_absolute()) p = cfg.base_dir / p;
    targets = load_targets(p, cfg.geometry.n_elements);
  }
  const em::CalibrationResult res = em::calibrate(targets, cfg.calibrate.ranges, cfg.geometry, cfg.element);
  RunManifest man = start_manifest("calibrate", cfg);

  std::ostringstream rep;
  em::write_fit_report(rep, res.report);
  man.outputs.push_back(write_output(cfg.out_dir, "fit_report.csv", rep.str()));

  const auto& g = res.geometry;
  const auto& e = res.element;
  std::ostringstream params;
  params << "[em]\n"
         << "n_elements = " << g.n_elements << '\n'
         << "spacing_d = " << num(g.spacing_d, "%.17g") << '\n'
         << "eps_eff = " << num(g.eps_eff, "%.17g") << '\n'
         << "rho = " << num(e.off_leakage_rho, "%.17g") << '\n'
         << "f0 = " << num(e.f0, "%.17g") << '\n'
         << "damping_gamma = " << num(e.damping_gamma, "%.17g") << '\n'
         << "coupling = " << num(e.coupling_F, "%.17g") << '\n'
         << "dipole_scale = " << num(e.dipole_scale_m, "%.17g") << '\n';
  man.outputs.push_back(write_output(cfg.out_dir, "calibrated_params.ini", params.str()));
  write_manifest(cfg.out_dir, man);

  log << "calibrate: d=" << num(g.spacing_d * 1e3, "%.4f") << " mm  eps_eff=" << num(g.eps_eff, "%.4f")
      << "  rho=" << num(e.off_leakage_rho, "%.4f") << "  cost=" << num(res.report.cost, "%.3f") << "  ("
      << res.report.evaluations << " evaluations)\n";
  for (const auto& r : res.report.residuals) {
    log << "  " << r.label << ' ' << r.code.to_string() << "  beams " << r.model_beams << '/' << r.expected_beams;
    for (std::size_t i = 0; i < r.residual_deg.size(); ++i)
      log << "  " << num(r.expected_deg[i], "%.2f") << "->" << num(r.matched_deg[i], "%.2f");
    log << "  " << (r.passed() ? "ok" : "FAIL") << '\n';
  }
  if (!res.report.all_passed()) {
    log << "calibrate: fit does not meet every target\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int cmd_proto_trace(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.proto.input.empty()) throw ConfigError("<config>", 0, "proto.input", "an input byte file is required");
  const auto bytes = read_bytes(cfg.proto.input);
  const auto step = proto::emulator_step(proto::EmulatorState{}, bytes, cfg.proto.ticks);
  RunManifest man = start_manifest("proto-trace", cfg);
  man.config["proto"]["input_sha256"] =
      sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));

  std::ostringstream tl, ev;
  proto::write_timeline_csv(tl, step.timeline);
  ev << "tick,kind,radiation_word_hex,detail\n";
  std::size_t nacks = 0;
  for (const auto& e : step.timeline) {
    char buf[96];
    const bool nack = e.kind == proto::TimelineEvent::Kind::Nack;
    nacks += nack;
    std::snprintf(buf, sizeof buf, "%llu,%s,0x%04X,%s\n", static_cast<unsigned long long>(e.tick),
                  nack ? "nack" : "word", e.radiation_word, nack ? proto::to_string(e.reason) : "");
    ev << buf;
  }
  man.outputs.push_back(write_output(cfg.out_dir, "timeline.csv", tl.str()));
  man.outputs.push_back(write_output(cfg.out_dir, "events.csv", ev.str()));
  write_manifest(cfg.out_dir, man);
  char word[8];
  std::snprintf(word, sizeof word, "0x%04X", step.state.active_radiation_word);
  log << "proto-trace: " << bytes.size() << " bytes, " << cfg.proto.ticks << " ticks, "
      << step.timeline.size() - nacks << " word changes, " << nacks << " nacks, final word " << word << '\n';
  return kExitOk;
}

int run_command(const std::string& name, const ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (name == "pattern") return cmd_pattern(cfg, log);
    if (name == "search") return cmd_search(cfg, log);
    if (name == "link") return cmd_link(cfg, log);
    if (name == "calibrate") return cmd_calibrate(cfg, log);
    if (name == "proto-trace") return cmd_proto_trace(cfg, log);
    err << "unknown command: " << name << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace dmatwin::harness
