#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "matherlab/cell_solver.hpp"
#include "matherlab/dictionary.hpp"
#include "matherlab/fokker_planck.hpp"
#include "matherlab/measures.hpp"
#include "matherlab/verify.hpp"

using namespace mather;

namespace {

SolverConfig tight_config() {
  SolverConfig cfg;
  cfg.drift_tol = 1e-10;
  cfg.shape_tol = 1e-9;
  cfg.max_periods = 4000;
  return cfg;
}

struct Stagelet {
  CellSolution cell;
  DensitySolution density;
  GraphMeasure mu;
  DissipationMatrix dm;
};

Stagelet make_stagelet(const HamiltonianPtr& spec, std::vector<double> P, double eps,
                       int n) {
  Stagelet s;
  s.cell = solve_cell(spec, P, eps, PeriodicGrid(static_cast<int>(P.size()), n, n),
                      tight_config());
  s.density = solve_theta(s.cell.drift, eps, 1e-11);
  s.mu = build_measure(s.cell, s.density);
  s.dm = dissipation_matrix(s.cell, s.mu);
  return s;
}

} // namespace

TEST_CASE("row constructors encode the pass rule of their kind") {
  CHECK(equality_rel_row("r", 1.0, 1.0 + 1e-8, 1e-6).pass);
  CHECK_FALSE(equality_rel_row("r", 1.0, 1.001, 1e-6).pass);
  CHECK(equality_abs_row("r", 2.0, 2.0005, 1e-3).pass);
  CHECK_FALSE(equality_abs_row("r", 2.0, 2.1, 1e-3).pass);
  CHECK(upper_bound_row("r", 1.0, 0.98, 0.05).pass);
  CHECK_FALSE(upper_bound_row("r", 1.0, 0.9, 0.05).pass);
  CHECK(lower_bound_row("r", 0.97, 1.0, 0.05).pass);
  CHECK_FALSE(lower_bound_row("r", 0.9, 1.0, 0.05).pass);
  // info rows never gate, whatever their residual
  CHECK(info_row("r", 1e9, 0.0).pass);

  const CheckRow row = equality_rel_row("named", 2.0, 1.0, 1e-6);
  CHECK(row.name == "named");
  CHECK(row.lhs == 2.0);
  CHECK(row.rhs == 1.0);
  CHECK(row.abs_residual == doctest::Approx(1.0));
  CHECK(row.rel_residual == doctest::Approx(0.5));
}

TEST_CASE("report aggregation, lookup and serialization") {
  VerificationReport rep;
  rep.context = "demo";
  rep.rows.push_back(info_row("noise", 123.0));
  CHECK(rep.all_pass());
  rep.rows.push_back(upper_bound_row("cap", 2.0, 1.0, 0.0));
  CHECK_FALSE(rep.all_pass());

  CHECK(rep.find("cap") != nullptr);
  CHECK(rep.find("absent") == nullptr);

  VerificationReport other;
  other.rows.push_back(info_row("extra", 1.0));
  rep.merge(other);
  CHECK(rep.rows.size() == 3);
  CHECK(rep.find("extra") != nullptr);

  SUBCASE("json carries every row with a stable schema") {
    const nlohmann::json j = nlohmann::json::parse(rep.to_json());
    CHECK(j["context"] == "demo");
    CHECK(j["all_pass"] == false);
    REQUIRE(j["rows"].size() == 3);
    for (const auto& r : j["rows"]) {
      CHECK(r.contains("name"));
      CHECK(r.contains("kind"));
      CHECK(r.contains("lhs"));
      CHECK(r.contains("rhs"));
      CHECK(r.contains("abs_residual"));
      CHECK(r.contains("rel_residual"));
      CHECK(r.contains("tolerance"));
      CHECK(r.contains("pass"));
    }
    CHECK(j["rows"][1]["pass"] == false);
  }

  SUBCASE("text table flags the row states") {
    const std::string txt = rep.to_text();
    CHECK(txt.find("INFO") != std::string::npos);
    CHECK(txt.find("FAIL") != std::string::npos);
    CHECK(txt.find("cap") != std::string::npos);
  }
}

TEST_CASE("measure conditions hold on a converged pendulum cell") {
  const Stagelet s = make_stagelet(make_hamiltonian("pendulum"), {0.0}, 0.2, 64);
  // gates are tagged to the n = 128 reference grid and the stationarity
  // defect is second order, so half the resolution scales them by 4
  VerifyTolerances tol;
  tol.scale = 4.0;
  const VerificationReport rep = check_mather_conditions(
      s.cell, s.density, s.mu, fourier_test_functions(1, 2, 2), tol);
  CHECK(rep.all_pass());
  REQUIRE(rep.find("a_identity") != nullptr);
  CHECK(rep.find("a_identity")->pass);
  REQUIRE(rep.find("c_stationarity_max") != nullptr);
  CHECK(rep.find("c_stationarity_max")->pass);
  // the momentum-pairing readings are reported, never gated
  REQUIRE(rep.find("b_full_vs_H") != nullptr);
  CHECK(rep.find("b_full_vs_H")->kind == RowKind::info);
}

TEST_CASE("derivative-energy identities close on both sides") {
  const PeriodicGrid grid(1, 64, 64);
  const HamiltonianPtr spec = make_hamiltonian("pendulum");
  const std::vector<double> P = {0.5};
  const CellSolution cell = solve_cell(spec, P, 0.1, grid, tight_config());
  const DensitySolution density = solve_theta(cell.drift, cell.eps, 1e-11);

  SUBCASE("spatial direction only") {
    const VerificationReport rep = check_estimates(cell, density);
    CHECK(rep.all_pass());
    CHECK(rep.find("est1_x1") != nullptr);
    CHECK(rep.find("est2_x1") != nullptr);
    CHECK(rep.find("est3_x1") != nullptr);
    CHECK(rep.find("est1_P1") == nullptr);
    // literal doubled variants are informational
    REQUIRE(rep.find("est1_x1_doubled_rhs") != nullptr);
    CHECK(rep.find("est1_x1_doubled_rhs")->kind == RowKind::info);
  }

  SUBCASE("momentum direction from centered solves") {
    const PDerivativeFields pfd =
        p_derivative_fields(spec, P, cell.eps, grid, tight_config(), 1e-3, &cell);
    const VerificationReport rep = check_estimates(cell, density, &pfd);
    CHECK(rep.all_pass());
    CHECK(rep.find("est1_P1") != nullptr);
    CHECK(rep.find("est2_P1") != nullptr);
    CHECK(rep.find("est3_P1") != nullptr);
  }
}

TEST_CASE("uniform bounds across a short descending sweep") {
  const HamiltonianPtr spec = make_hamiltonian("pendulum");
  std::vector<Stagelet> st;
  for (double eps : {0.2, 0.1, 0.05})
    st.push_back(make_stagelet(spec, {0.5}, eps, 32));
  std::vector<const CellSolution*> cells;
  std::vector<const DensitySolution*> thetas;
  std::vector<const PDerivativeFields*> pfds;
  for (const Stagelet& s : st) {
    cells.push_back(&s.cell);
    thetas.push_back(&s.density);
    pfds.push_back(nullptr);
  }
  const VerificationReport rep = check_uniform_bounds(cells, thetas, pfds);
  CHECK(rep.all_pass());
  REQUIRE(rep.find("lip_band_p_sup") != nullptr);
  CHECK(rep.find("lip_band_p_sup")->rhs == 2.0);

  SUBCASE("fewer than three rows is a caller error") {
    cells.pop_back();
    thetas.pop_back();
    pfds.pop_back();
    CHECK_THROWS_AS(check_uniform_bounds(cells, thetas, pfds), std::invalid_argument);
  }
}

TEST_CASE("adjoint identity is exact for the flat free cell") {
  const Stagelet s = make_stagelet(make_hamiltonian("free"), {0.0}, 0.1, 16);
  const std::vector<MuObservable> dict = mu_observable_dictionary(1, 1.0);
  const VerificationReport rep = check_adjoint_identity(s.cell, s.mu, s.dm, dict);
  CHECK(rep.all_pass());
  REQUIRE(rep.find("din2_max") != nullptr);
  CHECK(rep.find("din2_max")->lhs <= 1e-10);
  REQUIRE(rep.find("support_leak_count") != nullptr);
  CHECK(rep.find("support_leak_count")->lhs == 0.0);
}

TEST_CASE("vanishing-viscosity trends for the free spec are flat and exact") {
  std::vector<Stagelet> st;
  for (double eps : {0.2, 0.1, 0.05})
    st.push_back(make_stagelet(make_hamiltonian("free"), {0.0}, eps, 16));
  std::vector<SweepStage> stages;
  for (const Stagelet& s : st)
    stages.push_back(SweepStage{s.cell.eps, &s.cell, &s.mu, &s.dm});
  const std::vector<MuObservable> dict = mu_observable_dictionary(1, 1.0);
  const VerificationReport rep = vanishing_viscosity_report(stages, dict);
  CHECK(rep.all_pass());
  REQUIRE(rep.find("action_tail") != nullptr);
  CHECK(rep.find("action_tail")->lhs <= 1e-12);
  CHECK(rep.find("expectation_cauchy_tail") != nullptr);
}

TEST_CASE("adjoint sweep aggregation on synthetic per-eps reports") {
  const std::vector<double> eps_list = {0.2, 0.1, 0.05, 0.025};
  auto make_report = [](double idenmat, double eterm) {
    VerificationReport r;
    r.rows.push_back(info_row("idenmat_max", idenmat));
    r.rows.push_back(info_row("eps_term_max", eterm));
    return r;
  };

  SUBCASE("shrinking tail passes both gates") {
    const std::vector<VerificationReport> reps = {
        make_report(0.05, 0.08), make_report(0.02, 0.04), make_report(0.01, 0.02),
        make_report(0.005, 0.01)};
    const VerificationReport rep = adjoint_sweep_report(eps_list, reps);
    CHECK(rep.all_pass());
    REQUIRE(rep.find("idenmat_tail_monotone") != nullptr);
    REQUIRE(rep.find("eps_term_rate") != nullptr);
    CHECK(rep.find("eps_term_rate")->lhs == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("growing truncated identity fails the monotone gate") {
    const std::vector<VerificationReport> reps = {
        make_report(0.005, 0.08), make_report(0.01, 0.04), make_report(0.02, 0.02),
        make_report(0.04, 0.01)};
    const VerificationReport rep = adjoint_sweep_report(eps_list, reps);
    CHECK_FALSE(rep.find("idenmat_tail_monotone")->pass);
  }

  SUBCASE("flat eps terms fail the decay-rate gate") {
    const std::vector<VerificationReport> reps = {
        make_report(0.05, 0.04), make_report(0.02, 0.04), make_report(0.01, 0.04),
        make_report(0.005, 0.04)};
    const VerificationReport rep = adjoint_sweep_report(eps_list, reps);
    CHECK_FALSE(rep.find("eps_term_rate")->pass);
  }

  SUBCASE("short or malformed input is a caller error") {
    const std::vector<VerificationReport> two = {make_report(1, 1), make_report(1, 1)};
    CHECK_THROWS_AS(adjoint_sweep_report({0.2, 0.1}, two), std::invalid_argument);
    std::vector<VerificationReport> bare(4);
    CHECK_THROWS_AS(adjoint_sweep_report(eps_list, bare), std::invalid_argument);
  }
}
