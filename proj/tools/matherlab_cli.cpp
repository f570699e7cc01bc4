// Command-line front end: one subcommand per pipeline stage plus `run` for
// the whole battery and `export` for format conversion. Flags override the
// config file. Exit codes: 0 ok, 1 verification failures, 2 config schema
// violation, 3 solver non-convergence.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matherlab/dictionary.hpp"
#include "matherlab/experiment.hpp"
#include "matherlab/field.hpp"
#include "matherlab/fokker_planck.hpp"
#include "matherlab/hamiltonian.hpp"
#include "matherlab/measures.hpp"
#include "matherlab/numerics.hpp"
#include "matherlab/sde_lab.hpp"
#include "matherlab/verify.hpp"
#include "matherlab/version.hpp"

namespace fs = std::filesystem;
using namespace mather;

namespace {

struct Flags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> P_tokens;
  std::vector<double> eps_values;
  std::string grid; // "NxM" or "N"
  long long seed = -1;
  std::string format;
  std::string spec;
};

std::vector<double> parse_token(const std::string& tok) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("empty component in '" + tok + "'");
    char* end = nullptr;
    out.push_back(std::strtod(cur.c_str(), &end));
    if (end != cur.c_str() + cur.size())
      throw ConfigError("not a number: '" + cur + "'");
    cur.clear();
  };
  for (char c : tok) {
    if (c == ',')
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

ExperimentConfig make_config(const Flags& fl, bool validate_now = true) {
  ExperimentConfig cfg;
  if (!fl.config_path.empty()) cfg = load_config_file(fl.config_path);
  if (!fl.spec.empty()) cfg.spec_name = fl.spec;
  if (!fl.out_dir.empty()) cfg.out_dir = fl.out_dir;
  if (!fl.P_tokens.empty()) {
    cfg.P_list.clear();
    for (const auto& tok : fl.P_tokens) cfg.P_list.push_back(parse_token(tok));
  }
  if (!fl.eps_values.empty()) cfg.eps_list = fl.eps_values;
  if (!fl.grid.empty()) {
    const auto x = fl.grid.find('x');
    try {
      if (x == std::string::npos) {
        cfg.n_x = cfg.n_t = std::stoi(fl.grid);
      } else {
        cfg.n_x = std::stoi(fl.grid.substr(0, x));
        cfg.n_t = std::stoi(fl.grid.substr(x + 1));
      }
    } catch (const std::exception&) {
      throw ConfigError("--grid expects N or NxM, got '" + fl.grid + "'");
    }
  }
  if (fl.seed >= 0) cfg.sde.seed = static_cast<std::uint64_t>(fl.seed);
  if (!fl.format.empty()) cfg.table_format = fl.format;
  if (validate_now) cfg.validate();
  return cfg;
}

// The single-cell subcommands target (sde_P, sde_eps); --P/--eps override
// those instead of the sweep axes. Validation waits until the axes are
// rewritten, otherwise the sweep-membership checks judge the wrong lists.
void single_cell_target(ExperimentConfig& cfg, const Flags& fl) {
  if (!fl.P_tokens.empty()) {
    if (fl.P_tokens.size() != 1)
      throw ConfigError("this subcommand takes exactly one --P value");
    cfg.sde_P = parse_token(fl.P_tokens[0]);
  }
  if (!fl.eps_values.empty()) {
    if (fl.eps_values.size() != 1)
      throw ConfigError("this subcommand takes exactly one --eps value");
    cfg.sde_eps = fl.eps_values[0];
  }
  if (cfg.sde_P.empty()) {
    try {
      cfg.sde_P.assign(make_hamiltonian(cfg.spec_name, cfg.spec_params)->dim(), 0.0);
      cfg.sde_P[0] = 0.5;
    } catch (const std::invalid_argument&) {
      // validate() below reports the unknown spec as a config error
    }
  }
  // membership in the sweep axes is irrelevant here
  cfg.P_list = {cfg.sde_P};
  cfg.eps_list = {cfg.sde_eps};
  cfg.verify_estimates = false;
  cfg.validate();
}

CellSolution solve_target(const ExperimentConfig& cfg) {
  const HamiltonianPtr spec = make_hamiltonian(cfg.spec_name, cfg.spec_params);
  const PeriodicGrid grid(spec->dim(), cfg.n_x, cfg.n_t);
  return solve_cell(spec, cfg.sde_P, cfg.sde_eps, grid, cfg.solver);
}

void add_common(CLI::App* cmd, Flags& fl, bool with_axes = true) {
  cmd->add_option("--config", fl.config_path, "config file (key = value lines)");
  cmd->add_option("--out", fl.out_dir, "output directory");
  if (with_axes) {
    cmd->add_option("--P", fl.P_tokens,
                    "momentum value(s); components comma-joined, e.g. 0.5 or 0.5,0");
    cmd->add_option("--eps", fl.eps_values, "viscosity value(s)");
  }
  cmd->add_option("--grid", fl.grid, "grid as N or NxM (n_x x n_t)");
  cmd->add_option("--seed", fl.seed, "SDE stream seed");
  cmd->add_option("--format", fl.format, "table format: csv or json");
  cmd->add_option("--spec", fl.spec, "catalog Hamiltonian name");
}

int do_cell(const Flags& fl) {
  ExperimentConfig cfg = make_config(fl, /*validate_now=*/false);
  single_cell_target(cfg, fl);
  const CellSolution sol = solve_target(cfg);
  std::cout << "id = " << sol.id() << '\n'
            << "hbar = " << format_full(sol.hbar) << '\n'
            << "p_sup = " << format_full(sol.p_sup) << '\n'
            << "residual_rms = " << format_full(sol.residual_rms) << '\n'
            << "periods = " << sol.periods << '\n';
  if (!fl.out_dir.empty()) {
    fs::create_directories(fl.out_dir);
    dump_field(sol.phi, (fs::path(fl.out_dir) / (sol.id() + "_phi.csv")).string());
    std::cout << "phi -> " << (fs::path(fl.out_dir) / (sol.id() + "_phi.csv")).string()
              << '\n';
  }
  return 0;
}

int do_sweep(const Flags& fl) {
  ExperimentConfig cfg = make_config(fl);
  const HamiltonianPtr spec = make_hamiltonian(cfg.spec_name, cfg.spec_params);
  const PeriodicGrid grid(spec->dim(), cfg.n_x, cfg.n_t);
  const SweepReport rep =
      sweep_effective(spec, cfg.P_list, cfg.eps_list, grid, cfg.solver);
  if (fl.out_dir.empty()) {
    std::cout << rep.to_csv();
  } else {
    fs::create_directories(fl.out_dir);
    const fs::path path = fs::path(fl.out_dir) / "sweep.csv";
    std::ofstream os(path, std::ios::binary);
    os << rep.to_csv();
    std::cout << "sweep -> " << path.string() << '\n';
  }
  for (const SweepRow& row : rep.rows)
    if (!row.converged) return 3;
  return 0;
}

int do_fp(const Flags& fl) {
  ExperimentConfig cfg = make_config(fl, /*validate_now=*/false);
  single_cell_target(cfg, fl);
  const CellSolution sol = solve_target(cfg);
  const DensitySolution th =
      solve_theta(sol.drift, sol.eps, cfg.fp_tol, cfg.fp_max_periods);
  double tmin = th.theta.values[0];
  for (double v : th.theta.values) tmin = std::min(tmin, v);
  std::cout << "id = " << sol.id() << '\n'
            << "periods = " << th.periods << '\n'
            << "defect_l1 = " << format_full(th.defect_l1) << '\n'
            << "theta_min = " << format_full(tmin) << '\n';
  if (!fl.out_dir.empty()) {
    fs::create_directories(fl.out_dir);
    const fs::path path = fs::path(fl.out_dir) / (sol.id() + "_theta.csv");
    dump_field(th.theta, path.string());
    std::cout << "theta -> " << path.string() << '\n';
  }
  return 0;
}

int do_measure(const Flags& fl) {
  ExperimentConfig cfg = make_config(fl, /*validate_now=*/false);
  single_cell_target(cfg, fl);
  const CellSolution sol = solve_target(cfg);
  const DensitySolution th =
      solve_theta(sol.drift, sol.eps, cfg.fp_tol, cfg.fp_max_periods);
  const GraphMeasure mu = build_measure(sol, th);
  const DissipationMatrix dm = dissipation_matrix(sol, mu);
  const auto fourier = fourier_test_functions(mu.d, 2, 2);
  std::cout << "id = " << sol.id() << '\n'
            << "particles = " << mu.particles.size() << '\n'
            << "total_weight = " << format_full(mu.total_weight()) << '\n'
            << "projection_max = " << format_full(project_check(mu, th.theta, fourier))
            << '\n'
            << "dissipation_min_eig = " << format_full(dm.min_eigenvalue()) << '\n';
  if (!fl.out_dir.empty()) {
    fs::create_directories(fl.out_dir);
    const fs::path path = fs::path(fl.out_dir) / ("particles_" + sol.id() + ".csv");
    dump_particles(mu, path.string());
    std::cout << "particles -> " << path.string() << '\n';
  }
  return 0;
}

int do_sde(const Flags& fl) {
  ExperimentConfig cfg = make_config(fl, /*validate_now=*/false);
  single_cell_target(cfg, fl);
  const CellSolution sol = solve_target(cfg);
  const auto dict =
      mu_observable_dictionary(sol.phi.grid.d, std::max(1.1 * sol.p_sup, 0.5));
  const TrajectoryBatch batch = simulate(sol, dict, cfg.sde);
  const std::string summary = batch_summary_json(batch);
  if (fl.out_dir.empty()) {
    std::cout << summary;
  } else {
    fs::create_directories(fl.out_dir);
    const fs::path path = fs::path(fl.out_dir) / "sde_summary.json";
    std::ofstream os(path, std::ios::binary);
    os << summary;
    std::cout << "summary -> " << path.string() << '\n';
  }
  return 0;
}

int do_run(const Flags& fl, bool with_sde) {
  ExperimentConfig cfg = make_config(fl);
  if (!with_sde) cfg.sde_enabled = false;
  const ExperimentResult res = run_experiment(cfg, &std::cout);
  for (const std::string& f : res.failures) std::cerr << "failure: " << f << '\n';
  return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("matherlab ") + kVersion +
               " - effective Hamiltonians and Mather measures on the torus"};
  app.require_subcommand(1);

  Flags fl;
  std::string export_in, export_out, export_format = "json";

  CLI::App* c_cell = app.add_subcommand("cell", "solve one viscous cell problem");
  add_common(c_cell, fl);
  CLI::App* c_sweep = app.add_subcommand("sweep", "effective Hamiltonian over (P, eps)");
  add_common(c_sweep, fl);
  CLI::App* c_fp = app.add_subcommand("fp", "projected density for one cell");
  add_common(c_fp, fl);
  CLI::App* c_measure = app.add_subcommand("measure", "graph measure and dissipation");
  add_common(c_measure, fl);
  CLI::App* c_sde = app.add_subcommand("sde", "Euler-Maruyama batch on one cell");
  add_common(c_sde, fl);
  CLI::App* c_verify =
      app.add_subcommand("verify", "full verification battery (no SDE stage)");
  add_common(c_verify, fl);
  CLI::App* c_run = app.add_subcommand("run", "full pipeline incl. SDE stage");
  add_common(c_run, fl);
  CLI::App* c_export = app.add_subcommand("export", "convert artifacts csv <-> json");
  c_export->add_option("--in", export_in, "input artifact")->required();
  c_export->add_option("--out", export_out, "output path")->required();
  c_export->add_option("--format", export_format, "target format: csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(c_cell)) return do_cell(fl);
    if (app.got_subcommand(c_sweep)) return do_sweep(fl);
    if (app.got_subcommand(c_fp)) return do_fp(fl);
    if (app.got_subcommand(c_measure)) return do_measure(fl);
    if (app.got_subcommand(c_sde)) return do_sde(fl);
    if (app.got_subcommand(c_verify)) return do_run(fl, false);
    if (app.got_subcommand(c_run)) return do_run(fl, true);
    if (app.got_subcommand(c_export)) {
      export_artifact(export_in, export_out, export_format);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const DensityError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
