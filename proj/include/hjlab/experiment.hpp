// Configuration-driven experiment runner: certification, solves, bound
// audits, and sweeps, with every result written to an artifact directory.
//
// Artifact layout under ExperimentConfig::output_dir:
//   certificate.json     certified constants (or the recorded violation)
//   trajectory/          manifest.json + one CSV per snapshot
//   bounds.csv           one row per bound check
//   sweep.json           sweep manifest, distance matrix, verdict
//   sweep_distances.csv  distance matrix alone
//   summary.json         {pass_count, fail_count, worst_margin}
//
// Exit codes are exhaustive: 0 all enabled checks pass, 1 at least one check
// failed (artifacts still written), 2 malformed input or invalid audit
// parameters, 3 numerical failure (instability or step-budget exhaustion).
#pragma once

#include <string>

#include <hjlab/config.hpp>

namespace hjlab {

/// How much of the pipeline to run.
enum class RunMode {
  Full,         ///< certify, solve, audits, sweep
  CertifyOnly,  ///< stop after writing certificate.json
  SolveOnly,    ///< certify + solve + trajectory, no audits or sweep
  SweepOnly,    ///< certify + sweep, skipping the main solve and audits
};

struct ExperimentResult {
  int exit_code = 0;         ///< 0 pass, 1 check fail, 2 input, 3 numerics
  std::string message;       ///< one-line outcome for the terminal
  std::string artifact_dir;  ///< empty when nothing was written
};

/// Parses the config file and delegates to the overload below.  Parse errors
/// return exit code 2 with the line/field diagnostic as the message.
ExperimentResult run_experiment(const std::string& config_path,
                                RunMode mode = RunMode::Full);

/// Runs an already-parsed experiment.  Never throws for the documented
/// failure classes; the exit code and message carry the outcome.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                RunMode mode = RunMode::Full);

/// Renders report.txt plus SVG plots (gradient decay, time-derivative
/// envelopes, sweep distances) from a run_experiment artifact directory.
/// Returns 0 on success, 2 when the trajectory manifest is missing.  Never
/// mutates the inputs; re-emitting over identical artifacts is byte-stable.
int emit_report(const std::string& artifact_dir);

}  // namespace hjlab
