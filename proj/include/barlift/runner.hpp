#pragma once

#include <string>

#include "barlift/config.hpp"

namespace barlift {

// Runs one experiment. Trace and report files land in out_dir (the trace
// CSV honors cfg.output_path when set); the report is also printed to
// stdout. Returns 0 when the mode's pass predicate holds and 1 when it
// fails; runtime failures propagate as exceptions.
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace barlift
