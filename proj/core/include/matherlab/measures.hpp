#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "matherlab/cell_solver.hpp"
#include "matherlab/dictionary.hpp"
#include "matherlab/fokker_planck.hpp"

namespace mather {

struct Particle {
  std::array<double, 2> x{};
  double t = 0.0;
  std::array<double, 2> p{}; // full momentum P + D phi at the node
  double w = 0.0;
  std::size_t node = 0; // flat grid index the particle came from
};

// Pushforward of the invariant density onto the graph p = P + D phi. One
// particle per grid node carrying w = theta * (cell volume); zero-weight
// nodes are pruned at 1e-16 of the max weight.
struct GraphMeasure {
  int d = 1;
  double eps = 0.0;
  std::vector<double> P;
  double hbar = 0.0;
  std::string cell_id;
  PeriodicGrid grid;
  std::vector<Particle> particles;

  double total_weight() const; // 1 within 1e-12
};

GraphMeasure build_measure(const CellSolution& cell, const DensitySolution& theta);

using PhaseObservable = std::function<double(const double* x, double t, const double* p)>;

// Weighted sum over particles in fixed order.
double expectation(const GraphMeasure& mu, const PhaseObservable& f);
double expectation(const GraphMeasure& mu, const MuObservable& f);

// Max over the dictionary of |E_mu[w] - integral of w d(theta)|; zero up to
// summation roundoff when mu was built from theta, since the pushforward
// leaves (x,t)-marginals untouched.
double project_check(const GraphMeasure& mu, const ScalarField& theta,
                     const std::vector<TestFunction>& dictionary);

// Matrix of measures with the same support as mu and particle weights
// eps * sum_i phi_{x_i x_k} phi_{x_i x_j} * w, the Gram form that survives
// the vanishing-viscosity limit.
struct DissipationMatrix {
  int d = 1;
  double eps = 0.0;
  std::array<double, 4> total_mass{}; // row-major d*d, symmetric bitwise
  std::vector<std::vector<double>> weights; // d*d vectors over particles

  double min_eigenvalue() const;
};

DissipationMatrix dissipation_matrix(const CellSolution& cell, const GraphMeasure& mu);

// CSV dump `x...,t,p...,w`, full 17-digit decimals.
void dump_particles(const GraphMeasure& mu, const std::string& csv_path);

} // namespace mather
