#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "matherlab/dictionary.hpp"
#include "matherlab/field.hpp"

namespace mather {

class DensityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DensitySolution {
  ScalarField theta; // nonnegative, unit mass on every time slice
  int periods = 0;
  double defect_l1 = 0.0; // final period-map defect, mean |theta - theta_prev|
};

// Time-periodic Fokker-Planck march
//   theta_t + div(U theta) = eps * lap(theta)
// with Scharfetter-Gummel exponential-fitting fluxes and a Crank-Nicolson
// step (Peaceman-Rachford splitting in 2D). The flux operator has exactly
// zero column sums, so mass is conserved to solver roundoff; the substep
// count is chosen so the explicit half keeps a nonnegative diagonal, which
// together with the M-matrix implicit half preserves positivity. Iterates
// the period map from a uniform start until the L1 defect drops below tol.
DensitySolution solve_theta(const VectorField& drift, double eps, double tol = 1e-10,
                            int max_periods = 20000);

// Weighted mean of the generator applied to a test function,
//   integral of (w_t + U . grad w + eps lap w) d(theta),
// which vanishes for every smooth w when theta is an invariant density.
double generator_residual(const ScalarField& theta, const VectorField& drift, double eps,
                          const TestFunction& w);

struct ResidualRow {
  std::string label;
  double value = 0.0;
};

std::vector<ResidualRow> stationarity_rows(const ScalarField& theta,
                                           const VectorField& drift, double eps,
                                           const std::vector<TestFunction>& ws);

} // namespace mather
