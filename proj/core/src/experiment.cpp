#include "matherlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "matherlab/dictionary.hpp"
#include "matherlab/field.hpp"
#include "matherlab/fokker_planck.hpp"
#include "matherlab/hamiltonian.hpp"
#include "matherlab/measures.hpp"
#include "matherlab/numerics.hpp"
#include "matherlab/verify.hpp"
#include "matherlab/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace mather {

namespace {

// Systematic discretization allowances folded into the Monte Carlo error
// bars: time-stepping bias scales with dt, grid bias of the reference
// expectations with h^2. Calibrated on the reference configuration.
constexpr double kSdeDtAllowance = 2.0;
constexpr double kSdeGridAllowance = 30.0;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& tok, const std::string& key) {
  const std::string t = trim(tok);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("config key '" + key + "': not a number: '" + tok + "'");
  return v;
}

long long parse_ll(const std::string& tok, const std::string& key) {
  const double v = parse_double(tok, key);
  const long long i = static_cast<long long>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config key '" + key + "': not an integer: '" + tok + "'");
  return i;
}

bool parse_bool(const std::string& tok, const std::string& key) {
  const std::string t = trim(tok);
  if (t == "true" || t == "on" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "off" || t == "0" || t == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + tok + "'");
}

std::vector<double> parse_components(const std::string& tok, const std::string& key) {
  std::vector<double> out;
  for (const std::string& c : split_on(trim(tok), ','))
    out.push_back(parse_double(c, key));
  return out;
}

std::string join_components(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_full(v[i]);
  }
  return out;
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key.rfind("param.", 0) == 0) {
    const std::string name = key.substr(6);
    if (name.empty()) throw ConfigError("empty parameter name in '" + key + "'");
    c.spec_params[name] = parse_double(value, key);
    return;
  }
  if (key == "spec") {
    c.spec_name = trim(value);
  } else if (key == "P") {
    c.P_list.clear();
    for (const std::string& tok : split_ws(value))
      c.P_list.push_back(parse_components(tok, key));
  } else if (key == "eps") {
    c.eps_list.clear();
    for (const std::string& tok : split_ws(value))
      c.eps_list.push_back(parse_double(tok, key));
  } else if (key == "n_x") {
    c.n_x = static_cast<int>(parse_ll(value, key));
  } else if (key == "n_t") {
    c.n_t = static_cast<int>(parse_ll(value, key));
  } else if (key == "cfl") {
    c.solver.cfl = parse_double(value, key);
  } else if (key == "drift_tol") {
    c.solver.drift_tol = parse_double(value, key);
  } else if (key == "shape_tol") {
    c.solver.shape_tol = parse_double(value, key);
  } else if (key == "max_periods") {
    c.solver.max_periods = static_cast<int>(parse_ll(value, key));
  } else if (key == "p_box_margin") {
    c.solver.p_box_margin = parse_double(value, key);
  } else if (key == "fp_tol") {
    c.fp_tol = parse_double(value, key);
  } else if (key == "fp_max_periods") {
    c.fp_max_periods = static_cast<int>(parse_ll(value, key));
  } else if (key == "verify_estimates") {
    c.verify_estimates = parse_bool(value, key);
  } else if (key == "estimates_P") {
    c.estimates_P = parse_components(value, key);
  } else if (key == "estimates_eps") {
    c.estimates_eps = parse_double(value, key);
  } else if (key == "p_fd_step") {
    c.p_fd_step = parse_double(value, key);
  } else if (key == "tol_scale") {
    c.tol_scale = parse_double(value, key);
  } else if (key == "sde") {
    c.sde_enabled = parse_bool(value, key);
  } else if (key == "sde_P") {
    c.sde_P = parse_components(value, key);
  } else if (key == "sde_eps") {
    c.sde_eps = parse_double(value, key);
  } else if (key == "sde_paths") {
    c.sde.n_paths = static_cast<int>(parse_ll(value, key));
  } else if (key == "sde_dt") {
    c.sde.dt = parse_double(value, key);
  } else if (key == "sde_horizon") {
    c.sde.horizon_periods = static_cast<int>(parse_ll(value, key));
  } else if (key == "sde_burn_in") {
    c.sde.burn_in_periods = static_cast<int>(parse_ll(value, key));
  } else if (key == "sde_seed") {
    const long long s = parse_ll(value, key);
    if (s < 0) throw ConfigError("sde_seed must be nonnegative");
    c.sde.seed = static_cast<std::uint64_t>(s);
  } else if (key == "sde_stride") {
    c.sde.observable_stride = static_cast<int>(parse_ll(value, key));
  } else if (key == "out") {
    c.out_dir = trim(value);
  } else if (key == "dump_fields") {
    c.dump_fields = parse_bool(value, key);
  } else if (key == "format") {
    c.table_format = trim(value);
  } else if (key == "dict") {
    if (trim(value) != "v1")
      throw ConfigError("unknown dictionary version '" + trim(value) + "'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// CSV tables carry no quoting; every artifact writer joins plain tokens.
json csv_table_to_json(const std::string& text) {
  json out;
  out["header"] = json::array();
  out["rows"] = json::array();
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_on(line, ',');
    if (first) {
      for (const auto& c : cells) out["header"].push_back(c);
      first = false;
      continue;
    }
    json row = json::array();
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (!c.empty() && end == c.c_str() + c.size())
        row.push_back(v);
      else
        row.push_back(c);
    }
    out["rows"].push_back(std::move(row));
  }
  if (first) throw ConfigError("artifact has no header row");
  return out;
}

std::string json_table_to_csv(const json& j) {
  if (!j.contains("header") || !j.contains("rows"))
    throw ConfigError("JSON artifact is not a table (missing header/rows)");
  std::ostringstream os;
  const json& header = j["header"];
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os << ',';
    os << header[i].get<std::string>();
  }
  os << '\n';
  for (const json& row : j["rows"]) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (row[i].is_number())
        os << format_full(row[i].get<double>());
      else
        os << row[i].get<std::string>();
    }
    os << '\n';
  }
  return os.str();
}

std::string report_json_to_csv(const json& j) {
  std::ostringstream os;
  os << "context,name,kind,lhs,rhs,abs_residual,rel_residual,tolerance,pass\n";
  auto emit = [&os](const json& rep) {
    const std::string ctx = rep.value("context", std::string());
    for (const json& r : rep.at("rows")) {
      os << ctx << ',' << r.at("name").get<std::string>() << ','
         << r.at("kind").get<std::string>() << ','
         << format_full(r.at("lhs").get<double>()) << ','
         << format_full(r.at("rhs").get<double>()) << ','
         << format_full(r.at("abs_residual").get<double>()) << ','
         << format_full(r.at("rel_residual").get<double>()) << ','
         << format_full(r.at("tolerance").get<double>()) << ','
         << (r.at("pass").get<bool>() ? "true" : "false") << '\n';
    }
  };
  if (j.is_array())
    for (const json& rep : j) emit(rep);
  else
    emit(j);
  return os.str();
}

std::string mask_csv_seconds(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  long long col = -1;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto cells = split_on(line, ',');
    if (first) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] == "seconds") col = static_cast<long long>(i);
      first = false;
    } else if (col >= 0 && static_cast<std::size_t>(col) < cells.size()) {
      cells[static_cast<std::size_t>(col)] = "*";
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }
  return os.str();
}

std::string masked_for_compare(const fs::path& rel, const std::string& text) {
  const std::string name = rel.filename().string();
  if (name == "manifest.json") {
    json j = json::parse(text);
    j.erase("wall_seconds");
    return j.dump(2);
  }
  if (name.rfind("sweep.", 0) == 0) {
    if (name == "sweep.csv") return mask_csv_seconds(text);
    if (name == "sweep.json") {
      json j = json::parse(text);
      long long col = -1;
      for (std::size_t i = 0; i < j["header"].size(); ++i)
        if (j["header"][i].get<std::string>() == "seconds")
          col = static_cast<long long>(i);
      if (col >= 0)
        for (json& row : j["rows"]) row[static_cast<std::size_t>(col)] = "*";
      return j.dump(2);
    }
  }
  return text;
}

bool same_vector(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

} // namespace

void ExperimentConfig::validate() {
  HamiltonianPtr spec;
  try {
    spec = make_hamiltonian(spec_name, spec_params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int d = spec->dim();

  if (n_x < 8 || n_t < 8) throw ConfigError("grid must satisfy n_x, n_t >= 8");
  if (eps_list.empty()) eps_list = {0.2, 0.1, 0.05, 0.025, 0.0125};
  for (double e : eps_list)
    if (!(e > 0.0)) throw ConfigError("eps values must be positive");
  std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());

  if (P_list.empty())
    for (double v : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      std::vector<double> P(d, 0.0);
      P[0] = v;
      P_list.push_back(P);
    }
  for (const auto& P : P_list)
    if (static_cast<int>(P.size()) != d)
      throw ConfigError("P entries need exactly " + std::to_string(d) + " components");

  if (estimates_P.empty()) {
    estimates_P.assign(d, 0.0);
    estimates_P[0] = 0.5;
  }
  if (static_cast<int>(estimates_P.size()) != d)
    throw ConfigError("estimates_P needs exactly " + std::to_string(d) + " components");
  if (!(estimates_eps > 0.0)) throw ConfigError("estimates_eps must be positive");
  if (verify_estimates) {
    bool found = false;
    for (const auto& P : P_list) found = found || same_vector(P, estimates_P);
    bool eps_found = false;
    for (double e : eps_list) eps_found = eps_found || e == estimates_eps;
    if (!found || !eps_found)
      throw ConfigError("estimates cell (estimates_P, estimates_eps) must be part of the sweep");
  }

  if (sde_P.empty()) {
    sde_P.assign(d, 0.0);
    sde_P[0] = 0.5;
  }
  if (static_cast<int>(sde_P.size()) != d)
    throw ConfigError("sde_P needs exactly " + std::to_string(d) + " components");
  if (!(sde_eps > 0.0)) throw ConfigError("sde_eps must be positive");

  if (!(solver.cfl > 0.0 && solver.cfl <= 1.0))
    throw ConfigError("cfl must lie in (0, 1]");
  if (!(solver.drift_tol > 0.0) || !(solver.shape_tol > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (solver.max_periods < 2) throw ConfigError("max_periods must be at least 2");
  if (!(solver.p_box_margin > 0.0)) throw ConfigError("p_box_margin must be positive");
  if (!(fp_tol > 0.0)) throw ConfigError("fp_tol must be positive");
  if (fp_max_periods < 2) throw ConfigError("fp_max_periods must be at least 2");
  if (!(p_fd_step > 0.0)) throw ConfigError("p_fd_step must be positive");
  if (!(tol_scale > 0.0)) throw ConfigError("tol_scale must be positive");

  if (sde.n_paths < 1) throw ConfigError("sde_paths must be at least 1");
  if (!(sde.dt > 0.0)) throw ConfigError("sde_dt must be positive");
  if (sde.observable_stride < 1) throw ConfigError("sde_stride must be at least 1");
  if (sde.burn_in_periods < 0) throw ConfigError("sde_burn_in must be nonnegative");
  if (sde_enabled && sde.horizon_periods < sde.burn_in_periods + 10)
    throw ConfigError("sde_horizon must exceed sde_burn_in by at least 10 periods");

  if (table_format != "csv" && table_format != "json")
    throw ConfigError("format must be csv or json");
  if (out_dir.empty()) throw ConfigError("out must not be empty");
}

std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  os << "spec = " << spec_name << '\n';
  for (const auto& [k, v] : spec_params)
    os << "param." << k << " = " << format_full(v) << '\n';
  os << "P =";
  for (const auto& P : P_list) os << ' ' << join_components(P);
  os << '\n';
  os << "eps =";
  for (double e : eps_list) os << ' ' << format_full(e);
  os << '\n';
  os << "n_x = " << n_x << '\n';
  os << "n_t = " << n_t << '\n';
  os << "cfl = " << format_full(solver.cfl) << '\n';
  os << "drift_tol = " << format_full(solver.drift_tol) << '\n';
  os << "shape_tol = " << format_full(solver.shape_tol) << '\n';
  os << "max_periods = " << solver.max_periods << '\n';
  os << "p_box_margin = " << format_full(solver.p_box_margin) << '\n';
  os << "fp_tol = " << format_full(fp_tol) << '\n';
  os << "fp_max_periods = " << fp_max_periods << '\n';
  os << "verify_estimates = " << (verify_estimates ? "true" : "false") << '\n';
  os << "estimates_P = " << join_components(estimates_P) << '\n';
  os << "estimates_eps = " << format_full(estimates_eps) << '\n';
  os << "p_fd_step = " << format_full(p_fd_step) << '\n';
  os << "tol_scale = " << format_full(tol_scale) << '\n';
  os << "sde = " << (sde_enabled ? "true" : "false") << '\n';
  os << "sde_P = " << join_components(sde_P) << '\n';
  os << "sde_eps = " << format_full(sde_eps) << '\n';
  os << "sde_paths = " << sde.n_paths << '\n';
  os << "sde_dt = " << format_full(sde.dt) << '\n';
  os << "sde_horizon = " << sde.horizon_periods << '\n';
  os << "sde_burn_in = " << sde.burn_in_periods << '\n';
  os << "sde_seed = " << sde.seed << '\n';
  os << "sde_stride = " << sde.observable_stride << '\n';
  os << "dict = v1\n";
  os << "out = " << out_dir << '\n';
  os << "dump_fields = " << (dump_fields ? "true" : "false") << '\n';
  os << "format = " << table_format << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical_string())); }

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    try {
      apply_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config_text(os.str());
}

ExperimentConfig default_reference_config() {
  ExperimentConfig cfg;
  cfg.spec_name = "pendulum";
  cfg.sde_enabled = true;
  cfg.sde.n_paths = 400;
  cfg.sde.horizon_periods = 30;
  cfg.sde.burn_in_periods = 5;
  cfg.sde.seed = 1;
  cfg.sde.observable_stride = 10;
  cfg.validate();
  return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in, std::ostream* log) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();

  const HamiltonianPtr spec = make_hamiltonian(cfg.spec_name, cfg.spec_params);
  const int d = spec->dim();
  const PeriodicGrid grid(d, cfg.n_x, cfg.n_t);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  if (cfg.dump_fields) fs::create_directories(out / "fields");

  ExperimentResult result;
  std::vector<std::string> artifacts;
  json wall = json::object();
  auto note = [&](const std::string& line) {
    if (log != nullptr) *log << line << '\n';
  };

  // cells
  auto t0 = std::chrono::steady_clock::now();
  std::vector<CellSolution> kept;
  SweepReport sweep =
      sweep_effective(spec, cfg.P_list, cfg.eps_list, grid, cfg.solver, true, &kept);
  wall["cells"] = seconds_since(t0);
  std::vector<const CellSolution*> row_cell(sweep.rows.size(), nullptr);
  {
    std::size_t k = 0;
    for (std::size_t r = 0; r < sweep.rows.size(); ++r)
      if (sweep.rows[r].converged) row_cell[r] = &kept[k++];
  }
  for (const SweepRow& row : sweep.rows)
    if (!row.converged)
      result.failures.push_back("cell P=" + join_components(row.P) +
                                " eps=" + format_full(row.eps) + ": " + row.error);
  note("[cells] " + std::to_string(sweep.rows.size()) + " rows, " +
       std::to_string(kept.size()) + " converged");

  // densities
  t0 = std::chrono::steady_clock::now();
  std::vector<std::unique_ptr<DensitySolution>> row_theta(sweep.rows.size());
  for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
    if (row_cell[r] == nullptr) continue;
    try {
      row_theta[r] = std::make_unique<DensitySolution>(
          solve_theta(row_cell[r]->drift, row_cell[r]->eps, cfg.fp_tol, cfg.fp_max_periods));
    } catch (const DensityError& e) {
      result.failures.push_back("density " + row_cell[r]->id() + ": " + e.what());
    }
  }
  wall["densities"] = seconds_since(t0);

  // measures
  t0 = std::chrono::steady_clock::now();
  std::vector<std::unique_ptr<GraphMeasure>> row_mu(sweep.rows.size());
  std::vector<std::unique_ptr<DissipationMatrix>> row_dm(sweep.rows.size());
  for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
    if (row_cell[r] == nullptr || row_theta[r] == nullptr) continue;
    row_mu[r] = std::make_unique<GraphMeasure>(build_measure(*row_cell[r], *row_theta[r]));
    row_dm[r] = std::make_unique<DissipationMatrix>(
        dissipation_matrix(*row_cell[r], *row_mu[r]));
  }
  wall["measures"] = seconds_since(t0);

  // derivative fields at the configured cell
  t0 = std::chrono::steady_clock::now();
  std::unique_ptr<PDerivativeFields> pfd;
  std::size_t est_row = sweep.rows.size();
  if (cfg.verify_estimates) {
    for (std::size_t r = 0; r < sweep.rows.size(); ++r)
      if (same_vector(sweep.rows[r].P, cfg.estimates_P) &&
          sweep.rows[r].eps == cfg.estimates_eps)
        est_row = r;
    if (est_row < sweep.rows.size() && row_cell[est_row] != nullptr) {
      try {
        pfd = std::make_unique<PDerivativeFields>(
            p_derivative_fields(spec, cfg.estimates_P, cfg.estimates_eps, grid,
                                cfg.solver, cfg.p_fd_step, row_cell[est_row]));
      } catch (const SolverError& e) {
        result.failures.push_back(std::string("derivative fields: ") + e.what());
      }
    }
  }
  wall["derivative_fields"] = seconds_since(t0);

  // verification battery
  t0 = std::chrono::steady_clock::now();
  VerifyTolerances tol;
  tol.scale = cfg.tol_scale;
  const auto fourier = fourier_test_functions(d, 2, 2);
  double p_sup_all = 0.0;
  for (const CellSolution& c : kept) p_sup_all = std::max(p_sup_all, c.p_sup);
  const double flat_radius = std::max(1.1 * p_sup_all, 0.5);
  const auto mudict = mu_observable_dictionary(d, flat_radius);

  std::vector<VerificationReport> reports;

  {
    VerificationReport meas;
    meas.context = "measures";
    for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
      if (row_mu[r] == nullptr) continue;
      meas.rows.push_back(lower_bound_row("dissipation_min_eig[" + row_cell[r]->id() + "]",
                                          row_dm[r]->min_eigenvalue(), 0.0, 1e-10));
      meas.rows.push_back(equality_abs_row("projection_max[" + row_cell[r]->id() + "]",
                                           project_check(*row_mu[r], row_theta[r]->theta,
                                                         fourier),
                                           0.0, 1e-12));
    }
    if (!meas.rows.empty()) reports.push_back(std::move(meas));
  }

  for (const auto& P : cfg.P_list) {
    std::vector<std::size_t> col;
    for (std::size_t r = 0; r < sweep.rows.size(); ++r)
      if (same_vector(sweep.rows[r].P, P) && row_mu[r] != nullptr) col.push_back(r);

    std::vector<VerificationReport> adjoints;
    std::vector<double> col_eps;
    std::vector<SweepStage> stages;
    for (std::size_t r : col) {
      reports.push_back(check_mather_conditions(*row_cell[r], *row_theta[r], *row_mu[r],
                                                fourier, tol));
      adjoints.push_back(
          check_adjoint_identity(*row_cell[r], *row_mu[r], *row_dm[r], mudict, tol));
      col_eps.push_back(sweep.rows[r].eps);
      stages.push_back(SweepStage{sweep.rows[r].eps, row_cell[r], row_mu[r].get(),
                                  row_dm[r].get()});
    }
    // Bound checks are calibrated on the estimates column; symmetric columns
    // can sit at p_sup = 0 where the multiplicative band is meaningless.
    if (col.size() >= 3 && cfg.verify_estimates && same_vector(P, cfg.estimates_P)) {
      std::vector<const CellSolution*> cs;
      std::vector<const DensitySolution*> ts;
      std::vector<const PDerivativeFields*> ps;
      for (std::size_t r : col) {
        cs.push_back(row_cell[r]);
        ts.push_back(row_theta[r].get());
        ps.push_back(r == est_row ? pfd.get() : nullptr);
      }
      reports.push_back(check_uniform_bounds(cs, ts, ps, tol));
    }
    if (!stages.empty())
      reports.push_back(vanishing_viscosity_report(stages, mudict, tol));
    for (auto& a : adjoints) reports.push_back(a);
    if (col.size() >= 3) reports.push_back(adjoint_sweep_report(col_eps, adjoints, tol));
  }

  if (pfd != nullptr && est_row < sweep.rows.size() && row_theta[est_row] != nullptr)
    reports.push_back(
        check_estimates(*row_cell[est_row], *row_theta[est_row], pfd.get(), tol));
  wall["verify"] = seconds_since(t0);

  // SDE stage
  t0 = std::chrono::steady_clock::now();
  std::string sde_summary;
  if (cfg.sde_enabled) {
    const CellSolution* sde_cell = nullptr;
    const GraphMeasure* sde_mu = nullptr;
    std::unique_ptr<CellSolution> own_cell;
    std::unique_ptr<GraphMeasure> own_mu;
    std::unique_ptr<DensitySolution> own_theta;
    for (std::size_t r = 0; r < sweep.rows.size(); ++r)
      if (same_vector(sweep.rows[r].P, cfg.sde_P) && sweep.rows[r].eps == cfg.sde_eps &&
          row_mu[r] != nullptr) {
        sde_cell = row_cell[r];
        sde_mu = row_mu[r].get();
      }
    if (sde_cell == nullptr) {
      try {
        own_cell = std::make_unique<CellSolution>(
            solve_cell(spec, cfg.sde_P, cfg.sde_eps, grid, cfg.solver));
        own_theta = std::make_unique<DensitySolution>(
            solve_theta(own_cell->drift, cfg.sde_eps, cfg.fp_tol, cfg.fp_max_periods));
        own_mu = std::make_unique<GraphMeasure>(build_measure(*own_cell, *own_theta));
        sde_cell = own_cell.get();
        sde_mu = own_mu.get();
      } catch (const std::runtime_error& e) {
        result.failures.push_back(std::string("sde cell: ") + e.what());
      }
    }
    if (sde_cell != nullptr) try {
      const TrajectoryBatch batch = simulate(*sde_cell, mudict, cfg.sde);
      const auto stats = empirical_measure(batch);
      const auto dynkin = dynkin_residual(batch);
      const auto momentum = momentum_residual(batch);
      const double h = grid.dx();
      const double extra2 = kSdeDtAllowance * cfg.sde.dt * kSdeDtAllowance * cfg.sde.dt +
                            kSdeGridAllowance * h * h * kSdeGridAllowance * h * h;

      VerificationReport rep;
      rep.context = "sde_agreement " + sde_cell->id();
      rep.rows.push_back(equality_abs_row("sde_leak_fraction", batch.leak_fraction, 0.0,
                                          1e-12));
      for (std::size_t i = 0; i < stats.size(); ++i) {
        const double grid_value = expectation(*sde_mu, mudict[i]);
        const double band =
            3.0 * std::sqrt(stats[i].std_error * stats[i].std_error + extra2);
        rep.rows.push_back(upper_bound_row("sde_obs[" + stats[i].label + "]",
                                           std::abs(stats[i].mean - grid_value), band,
                                           0.0));
      }
      for (const DynkinRow& row : dynkin) {
        const double band =
            row.sigma3 + 3.0 * std::sqrt(extra2) / std::max(batch.averaging_time, 1.0);
        rep.rows.push_back(
            upper_bound_row("sde_dynkin[" + row.label + "]", row.residual, band, 0.0));
      }
      for (const MomentumRow& row : momentum) {
        rep.rows.push_back(info_row("sde_mom_drift[" + std::to_string(row.axis + 1) + "]",
                                    row.drift_residual, row.drift_sigma3));
        rep.rows.push_back(info_row(
            "sde_mom_var_ratio[" + std::to_string(row.axis + 1) + "]", row.variance_ratio,
            1.0));
      }
      reports.push_back(rep);

      json sj = json::parse(batch_summary_json(batch));
      json cmp = json::array();
      for (std::size_t i = 0; i < stats.size(); ++i) {
        json c;
        c["label"] = stats[i].label;
        c["empirical"] = stats[i].mean;
        c["std_error"] = stats[i].std_error;
        c["grid"] = expectation(*sde_mu, mudict[i]);
        cmp.push_back(std::move(c));
      }
      json top;
      top["batch"] = std::move(sj);
      top["comparison"] = std::move(cmp);
      sde_summary = top.dump(2) + "\n";
    } catch (const std::exception& e) {
      result.failures.push_back(std::string("sde: ") + e.what());
    }
  }
  wall["sde"] = seconds_since(t0);

  // artifact tree
  t0 = std::chrono::steady_clock::now();
  if (cfg.table_format == "csv") {
    write_text(out / "sweep.csv", sweep.to_csv());
    artifacts.push_back("sweep.csv");
  } else {
    write_text(out / "sweep.json", csv_table_to_json(sweep.to_csv()).dump(2) + "\n");
    artifacts.push_back("sweep.json");
  }
  if (cfg.dump_fields) {
    for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
      if (row_cell[r] == nullptr) continue;
      const std::string base = "fields/" + row_cell[r]->id();
      dump_field(row_cell[r]->phi, (out / (base + "_phi.csv")).string());
      artifacts.push_back(base + "_phi.csv");
      artifacts.push_back(base + "_phi.csv.meta.json");
      if (row_theta[r] != nullptr) {
        dump_field(row_theta[r]->theta, (out / (base + "_theta.csv")).string());
        artifacts.push_back(base + "_theta.csv");
        artifacts.push_back(base + "_theta.csv.meta.json");
      }
    }
  }
  if (est_row < sweep.rows.size() && row_mu[est_row] != nullptr) {
    const std::string name = "particles_" + row_cell[est_row]->id() + ".csv";
    dump_particles(*row_mu[est_row], (out / name).string());
    artifacts.push_back(name);
  }

  {
    json jreports = json::array();
    std::ostringstream text;
    for (const auto& rep : reports) {
      jreports.push_back(json::parse(rep.to_json()));
      text << rep.to_text() << '\n';
    }
    write_text(out / "verify.json", jreports.dump(2) + "\n");
    write_text(out / "verify.txt", text.str());
    artifacts.push_back("verify.json");
    artifacts.push_back("verify.txt");
  }
  if (!sde_summary.empty()) {
    write_text(out / "sde_summary.json", sde_summary);
    artifacts.push_back("sde_summary.json");
  }
  wall["artifacts"] = seconds_since(t0);

  bool verify_ok = true;
  for (const auto& rep : reports) verify_ok = verify_ok && rep.all_pass();
  result.exit_code = !result.failures.empty() ? 3 : (verify_ok ? 0 : 1);

  json manifest;
  manifest["version"] = kVersion;
  manifest["config_hash"] = cfg.hash();
  {
    json lines = json::array();
    std::istringstream is(cfg.canonical_string());
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    manifest["config"] = std::move(lines);
  }
  manifest["d"] = d;
  manifest["dictionary_size"] = mudict.size();
  manifest["dictionary_flat_radius"] = flat_radius;
  if (cfg.sde_enabled) manifest["sde_seed"] = cfg.sde.seed;
  manifest["artifacts"] = artifacts;
  manifest["failures"] = result.failures;
  manifest["verify_pass"] = verify_ok;
  manifest["exit_code"] = result.exit_code;
  manifest["wall_seconds"] = std::move(wall);
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  result.manifest_path = (out / "manifest.json").string();

  note("[done] exit " + std::to_string(result.exit_code) +
       (result.failures.empty() ? "" : ", " + std::to_string(result.failures.size()) +
                                           " failures"));
  return result;
}

void export_artifact(const std::string& in_path, const std::string& out_path,
                     const std::string& format) {
  if (format != "csv" && format != "json")
    throw ConfigError("export format must be csv or json");
  const std::string text = read_text(in_path);
  const std::string t = trim(text);
  const bool is_json = !t.empty() && (t[0] == '{' || t[0] == '[');
  if (format == "json") {
    if (is_json) {
      // canonical re-emit keeps stable key order and is idempotent
      write_text(out_path, json::parse(text).dump(2) + "\n");
      return;
    }
    write_text(out_path, csv_table_to_json(text).dump(2) + "\n");
    return;
  }
  if (!is_json) {
    write_text(out_path, text);
    return;
  }
  const json j = json::parse(text);
  if (j.is_object() && j.contains("header") && j.contains("rows")) {
    write_text(out_path, json_table_to_csv(j));
    return;
  }
  if ((j.is_object() && j.contains("rows")) ||
      (j.is_array() && !j.empty() && j[0].is_object() && j[0].contains("rows"))) {
    write_text(out_path, report_json_to_csv(j));
    return;
  }
  throw ConfigError("unknown artifact shape in " + in_path);
}

bool artifacts_match(const std::string& dir_a, const std::string& dir_b,
                     std::string* diff_report) {
  auto listing = [](const fs::path& root) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root));
    std::sort(rel.begin(), rel.end());
    return rel;
  };
  const auto la = listing(dir_a);
  const auto lb = listing(dir_b);
  bool ok = true;
  auto report = [&](const std::string& line) {
    ok = false;
    if (diff_report != nullptr) {
      *diff_report += line;
      *diff_report += '\n';
    }
  };
  for (const auto& p : la)
    if (std::find(lb.begin(), lb.end(), p) == lb.end())
      report("only in " + dir_a + ": " + p.string());
  for (const auto& p : lb)
    if (std::find(la.begin(), la.end(), p) == la.end())
      report("only in " + dir_b + ": " + p.string());
  for (const auto& p : la) {
    if (std::find(lb.begin(), lb.end(), p) == lb.end()) continue;
    const std::string a = masked_for_compare(p, read_text(fs::path(dir_a) / p));
    const std::string b = masked_for_compare(p, read_text(fs::path(dir_b) / p));
    if (a != b) report("differs: " + p.string());
  }
  return ok;
}

} // namespace mather
