// dmatwin: experiment runner for the metasurface antenna testbed twin.
//
//   dmatwin pattern     --config exp.ini [--out dir]
//   dmatwin search      --config exp.ini
//   dmatwin link        --config exp.ini --seed 7
//   dmatwin calibrate   --config exp.ini
//   dmatwin proto-trace --config exp.ini
//
// Exit codes: 0 ok, 2 config error, 3 infeasible fit, 4 I/O error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dmatwin/harness/commands.hpp"

namespace h = dmatwin::harness;

int main(int argc, char** argv) {
  CLI::App app{"dmatwin: metasurface antenna testbed twin"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  for (const char* name : {"pattern", "search", "link", "calibrate", "proto-trace"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master RNG seed (overrides run.seed)");
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
  }
  app.get_subcommand("pattern")->description("pattern cut CSV and beam summary per code");
  app.get_subcommand("search")->description("enumerate the codebook and rank codes against a beam spec");
  app.get_subcommand("link")->description("end-to-end DVB-S link at receiver angles or forced SNRs");
  app.get_subcommand("calibrate")->description("fit guide parameters to reference lobe directions");
  app.get_subcommand("proto-trace")->description("replay a control byte stream through the beam controller");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : h::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  h::ExperimentConfig cfg;
  try {
    cfg = h::load_config(config_path);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return h::kExitConfig;
  } catch (const h::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return h::kExitIo;
  }
  if (seed) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return h::run_command(command, cfg, std::cout, std::cerr);
}
