#include "matherlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "matherlab/numerics.hpp"

namespace mather {

double GraphMeasure::total_weight() const {
  std::vector<double> ws(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) ws[i] = particles[i].w;
  return pairwise_sum(ws);
}

GraphMeasure build_measure(const CellSolution& cell, const DensitySolution& theta) {
  const PeriodicGrid& grid = cell.phi.grid;
  if (!(grid == theta.theta.grid))
    throw std::invalid_argument("cell and density live on different grids");

  const double cell_volume = 1.0 / static_cast<double>(grid.node_count());
  double wmax = 0.0;
  for (double v : theta.theta.values) wmax = std::max(wmax, v * cell_volume);
  const double prune = 1e-16 * wmax;

  GraphMeasure mu;
  mu.d = grid.d;
  mu.eps = cell.eps;
  mu.P = cell.P;
  mu.hbar = cell.hbar;
  mu.cell_id = cell.id();
  mu.grid = grid;
  mu.particles.reserve(grid.node_count());
  double x[2];
  double t = 0.0;
  for (std::size_t i = 0; i < theta.theta.values.size(); ++i) {
    const double w = theta.theta.values[i] * cell_volume;
    if (w <= prune) continue;
    Particle pt;
    grid.node_coords(i, x, t);
    pt.x[0] = x[0];
    if (grid.d == 2) pt.x[1] = x[1];
    pt.t = t;
    for (int k = 0; k < grid.d; ++k)
      pt.p[k] = cell.P[k] + cell.grad_phi.comp[k].values[i];
    pt.w = w;
    pt.node = i;
    mu.particles.push_back(pt);
  }
  return mu;
}

double expectation(const GraphMeasure& mu, const PhaseObservable& f) {
  std::vector<double> terms(mu.particles.size());
  for (std::size_t i = 0; i < mu.particles.size(); ++i) {
    const Particle& pt = mu.particles[i];
    terms[i] = pt.w * f(pt.x.data(), pt.t, pt.p.data());
  }
  return pairwise_sum(terms);
}

double expectation(const GraphMeasure& mu, const MuObservable& f) {
  std::vector<double> terms(mu.particles.size());
  for (std::size_t i = 0; i < mu.particles.size(); ++i) {
    const Particle& pt = mu.particles[i];
    terms[i] = pt.w * f.eval(pt.x.data(), pt.t, pt.p.data()).value;
  }
  return pairwise_sum(terms);
}

double project_check(const GraphMeasure& mu, const ScalarField& theta,
                     const std::vector<TestFunction>& dictionary) {
  const PeriodicGrid& grid = theta.grid;
  double worst = 0.0;
  std::vector<double> terms(theta.values.size());
  double x[2];
  double t = 0.0;
  for (const auto& w : dictionary) {
    const double lhs = expectation(
        mu, [&w](const double* xx, double tt, const double*) { return w.value(xx, tt); });
    for (std::size_t i = 0; i < theta.values.size(); ++i) {
      grid.node_coords(i, x, t);
      terms[i] = theta.values[i] * w.value(x, t);
    }
    const double rhs = mean(terms);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

DissipationMatrix dissipation_matrix(const CellSolution& cell, const GraphMeasure& mu) {
  const int d = mu.d;
  if (cell.hess_phi.empty()) throw std::invalid_argument("cell Hessian fields missing");
  DissipationMatrix dm;
  dm.d = d;
  dm.eps = mu.eps;
  dm.weights.assign(static_cast<std::size_t>(d) * d,
                    std::vector<double>(mu.particles.size(), 0.0));
  for (int k = 0; k < d; ++k)
    for (int j = k; j < d; ++j) {
      auto& wkj = dm.weights[static_cast<std::size_t>(k) * d + j];
      for (std::size_t i = 0; i < mu.particles.size(); ++i) {
        const std::size_t node = mu.particles[i].node;
        double gram = 0.0;
        for (int a = 0; a < d; ++a)
          gram += cell.hess_phi[static_cast<std::size_t>(a) * d + k].values[node] *
                  cell.hess_phi[static_cast<std::size_t>(a) * d + j].values[node];
        wkj[i] = mu.eps * gram * mu.particles[i].w;
      }
      dm.total_mass[static_cast<std::size_t>(k) * d + j] = pairwise_sum(wkj);
      if (j != k) {
        dm.weights[static_cast<std::size_t>(j) * d + k] = wkj;
        dm.total_mass[static_cast<std::size_t>(j) * d + k] =
            dm.total_mass[static_cast<std::size_t>(k) * d + j];
      }
    }
  return dm;
}

double DissipationMatrix::min_eigenvalue() const {
  if (d == 1) return total_mass[0];
  const double a = total_mass[0], b = total_mass[1], c = total_mass[3];
  const double half_tr = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return half_tr - disc;
}

void dump_particles(const GraphMeasure& mu, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot open " + csv_path);
  if (mu.d == 1)
    out << "x1,t,p1,w\n";
  else
    out << "x1,x2,t,p1,p2,w\n";
  for (const auto& pt : mu.particles) {
    out << format_full(pt.x[0]) << ",";
    if (mu.d == 2) out << format_full(pt.x[1]) << ",";
    out << format_full(pt.t) << "," << format_full(pt.p[0]) << ",";
    if (mu.d == 2) out << format_full(pt.p[1]) << ",";
    out << format_full(pt.w) << "\n";
  }
}

} // namespace mather
