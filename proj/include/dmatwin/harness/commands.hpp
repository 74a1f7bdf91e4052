#pragma once

#include <ostream>

#include "dmatwin/harness/config.hpp"

namespace dmatwin::harness {

// Each command writes its outputs plus manifest.json into cfg.out_dir and
// returns an ExitCode. Config and I/O problems are thrown as ConfigError and
// IoError; run_command maps them to exit codes.
int cmd_pattern(const ExperimentConfig& cfg, std::ostream& log);
int cmd_search(const ExperimentConfig& cfg, std::ostream& log);
int cmd_link(const ExperimentConfig& cfg, std::ostream& log);
int cmd_calibrate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_proto_trace(const ExperimentConfig& cfg, std::ostream& log);

int run_command(const std::string& name, const ExperimentConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace dmatwin::harness
