#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "matherlab/cell_solver.hpp"
#include "matherlab/sde_lab.hpp"

namespace mather {

// Schema violations in a config file or flag set. The CLI maps this to
// exit code 2 before any solve starts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  std::string spec_name = "pendulum";
  std::map<std::string, double> spec_params; // overrides, canonical order

  // sweep axes; eps is normalized to descending order by validate()
  std::vector<std::vector<double>> P_list;
  std::vector<double> eps_list;
  int n_x = 128;
  int n_t = 128;

  SolverConfig solver;
  double fp_tol = 1e-10;
  int fp_max_periods = 20000;

  // derivative-field checks run at one (P, eps) cell of the sweep
  bool verify_estimates = true;
  std::vector<double> estimates_P;
  double estimates_eps = 0.05;
  double p_fd_step = 1e-3;
  double tol_scale = 1.0;

  bool sde_enabled = false;
  std::vector<double> sde_P;
  double sde_eps = 0.05;
  SdeConfig sde;

  std::string out_dir = "out";
  bool dump_fields = true;
  std::string table_format = "csv"; // sweep table: csv | json

  // Throws ConfigError on any schema violation; sorts eps descending and
  // fills defaulted P vectors to the spec's dimension.
  void validate();
  // Every key in a fixed order, one per line, doubles at full precision.
  std::string canonical_string() const;
  std::string hash() const; // fnv1a64 of canonical_string, hex
};

// The documented key=value schema. Unknown keys, malformed numbers and
// wrong component counts all raise ConfigError. Lines starting with # or ;
// are comments. Later keys override earlier ones.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Pendulum spec, n = 128, the five-by-five (P, eps) sweep, SDE block scaled
// for smoke-level statistics.
ExperimentConfig default_reference_config();

struct ExperimentResult {
  int exit_code = 0; // 0 pass, 1 verify failures, 3 solver non-convergence
  std::vector<std::string> failures;
  std::string manifest_path;
};

// Full pipeline: cells, densities, measures, verification battery, optional
// SDE stage, artifact tree under cfg.out_dir. A failing (P, eps) cell is
// recorded and skipped without aborting its siblings. `log` may be null.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log);

// Format conversion between the artifact flavors: CSV tables (including
// field dumps) to JSON and back, verification reports to CSV. Numeric cells
// are re-emitted at 17 significant digits so a round trip is byte-stable.
void export_artifact(const std::string& in_path, const std::string& out_path,
                     const std::string& format);

// Byte compare of two artifact trees with the wall-time entries masked
// (manifest wall_times block and the seconds column of sweep tables).
// On mismatch returns false and appends one line per differing file.
bool artifacts_match(const std::string& dir_a, const std::string& dir_b,
                     std::string* diff_report);

} // namespace mather
