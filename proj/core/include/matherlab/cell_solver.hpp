#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "matherlab/field.hpp"
#include "matherlab/hamiltonian.hpp"

namespace mather {

enum class NumericalScheme { lax_friedrichs };

struct SolverConfig {
  double cfl = 0.4;
  double drift_tol = 1e-8;
  double shape_tol = 1e-7;
  int max_periods = 5000;
  double p_box_margin = 1.0;
  NumericalScheme scheme = NumericalScheme::lax_friedrichs;
  // The explicit monotone Hamiltonian carries alpha*h/2 of numerical
  // diffusion per axis; when set, that amount is subtracted from the
  // implicit diffusion so the total stays at eps to second order.
  bool compensate_lf_viscosity = true;
};

// Thrown when the period map fails to reach its fixed point. Carries the
// per-period drift sequence so callers can inspect oscillations.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> drift_history)
      : std::runtime_error(what), drift_history(std::move(drift_history)) {}
  std::vector<double> drift_history;
};

struct CellSolution {
  HamiltonianPtr spec;
  std::vector<double> P;
  double eps = 0.0;

  ScalarField phi;  // zero mean
  double hbar = 0.0;
  VectorField grad_phi;
  std::vector<ScalarField> hess_phi; // d*d, row-major, symmetric bitwise
  // Trace of the stored Hessian diagonal; kept as its own field so every
  // identity assembled from "the Laplacian" uses identical bits.
  ScalarField laplacian_phi;
  // Recovered from the equation: hbar - eps*lap - H(x, P + grad, t).
  ScalarField phi_t;
  VectorField drift; // D_pH(x, P + grad, t)

  double residual_rms = 0.0; // time-periodicity defect of the converged orbit
  double p_sup = 0.0;        // sup |P + D phi|
  int periods = 0;
  double seconds = 0.0;
  std::vector<double> drift_history;

  std::string id() const;
};

CellSolution solve_cell(const HamiltonianPtr& spec, std::span<const double> P,
                        double eps, const PeriodicGrid& grid, const SolverConfig& cfg,
                        const ScalarField* warm_start = nullptr);

// Fills every derived field (gradient, Hessian, Laplacian trace, drift,
// phi_t, p_sup) from spec, P, eps, hbar and the zero-mean phi. Also the
// rebuild path when a solution is reloaded from its phi dump, so reloaded
// and freshly solved cells carry identical bits.
void derive_cell_fields(CellSolution& sol);

struct SweepRow {
  std::vector<double> P;
  double eps = 0.0;
  double hbar = 0.0;
  double p_sup = 0.0;
  double residual_rms = 0.0;
  int periods = 0;
  double seconds = 0.0;
  bool converged = false;
  std::string error;
};

struct SweepReport {
  int d = 1;
  std::vector<SweepRow> rows;
  std::string to_csv() const; // P..., eps, hbar, p_sup, residual_rms, periods, seconds
};

// One row per (P, eps), ordered by P as listed and eps descending; within a
// P column each solve warm-starts from the previous (larger) eps. A failed
// row is recorded and does not abort siblings. When `keep` is non-null the
// full solutions are appended in row order (failed rows are skipped).
SweepReport sweep_effective(const HamiltonianPtr& spec,
                            const std::vector<std::vector<double>>& P_list,
                            std::vector<double> eps_list, const PeriodicGrid& grid,
                            const SolverConfig& cfg, bool warm_start = true,
                            std::vector<CellSolution>* keep = nullptr);

struct DiscountedSolution {
  ScalarField phi;       // not mean-normalized; its level carries the estimate
  double hbar_estimate;  // mean(discount * phi)
  int periods;
};

// Long-time march of the unit-viscosity discounted equation at P = 0:
//   phi_t + lap(phi) + H(x, Dphi, t) - discount*phi = 0.
// Cross-check only; discount*phi approaches the ergodic constant as the
// discount vanishes.
DiscountedSolution solve_discounted(const HamiltonianPtr& spec, const PeriodicGrid& grid,
                                    double discount, const SolverConfig& cfg);

struct PDerivativeFields {
  double fd_step = 0.0;
  CellSolution base;                  // re-solved at tightened tolerances
  std::vector<ScalarField> dphi_dP;   // centered first difference per component
  std::vector<ScalarField> d2phi_dP2; // centered second difference per component
  std::vector<double> dhbar_dP;
  std::vector<double> d2hbar_dP2;
};

// Centered differences of full solves at P +- h e_i. All solves run at
// tolerances tightened to 1e-12 so the finite-difference noise floor stays
// well below the h^2 truncation.
PDerivativeFields p_derivative_fields(const HamiltonianPtr& spec,
                                      std::span<const double> P, double eps,
                                      const PeriodicGrid& grid, const SolverConfig& cfg,
                                      double h, const CellSolution* warm_from = nullptr);

} // namespace mather
