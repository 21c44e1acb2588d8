/// @file config.hpp
/// @brief Experiment description files: a flat, typed key-value format with
///        section headers, parsed into a validated ExperimentConfig.
///
/// Grammar (one entry per line):
///     # comment                blank lines and #-comments are skipped
///     [section]                sections: hamiltonian, box, initial, solve,
///                              audits, sweep, output
///     key = value [value...]   values are whitespace-separated tokens
///
/// Every parse failure carries the offending line number and a dotted
/// field name (e.g. "[box].resolution") for the diagnostic.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjlab/evolve.hpp"
#include "hjlab/field.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/sweep.hpp"

namespace hjlab {

/// Malformed or inconsistent experiment description.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, std::string field)
      : std::runtime_error(
            "config error at line " + std::to_string(line) +
            (field.empty() ? "" : ", field " + field) + ": " + message),
        line(line),
        field(std::move(field)) {}
  int line;           ///< 1-based; 0 when no single line is at fault
  std::string field;  ///< "[section].key" when known
};

/// Which estimate families to audit and with what slacks/parameters.
struct AuditSection {
  std::vector<std::string> checks;
  double grad_slack = 0.05;
  double time_slack = 0.10;
  double grad_t_min = 0.0;
  double dt_t_min = 0.0;
  double dt_t_max = 1e300;
  double homogeneous_rho = 1.0;
  int homogeneous_samples = 8;
  double holder_base_t = 0.5;
  std::vector<double> holder_h;
  std::vector<double> ball_radii;
  double ball_s = 0.0;
  double ball_t = 0.0;
  double ball_ceiling = 10.0;
  double heat_tol = 1e-3;
};

/// Optional multi-run section.
struct SweepSection {
  std::string kind;  ///< vanishing_viscosity | truncation
  std::vector<double> eps_list;
  int ref_refine = 1;
  std::vector<double> window_times;
  double interior_fraction = 0.5;
  GrowthParams growth;
  std::vector<double> caps;
};

/// A fully validated experiment description.
struct ExperimentConfig {
  HamiltonianSpec spec;
  std::vector<double> cert_p_list;  ///< certification batch (no solving)
  std::optional<Box> box;
  std::string initial_preset;
  std::map<std::string, double> initial_params;
  SolveConfig solve;
  bool runnable = false;  ///< true when box + initial (+ solve) are present
  AuditSection audits;
  std::optional<SweepSection> sweep;
  std::string output_dir = "out";
};

/// Parses and validates a config file.  Throws ConfigError.
ExperimentConfig parse_experiment_config(const std::string& path);

/// Same, from in-memory text (line numbers refer to the text).
ExperimentConfig parse_experiment_text(const std::string& text);

/// The audit identifiers accepted in [audits] checks.
const std::vector<std::string>& known_check_ids();

}  // namespace hjlab
