#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mather {

// Uniform grid on the space-time torus T^{d+1}, unit period per axis.
// Nodes sit at j/n; index layout is row-major with t outermost, so a time
// slice is contiguous.
struct PeriodicGrid {
  int d = 1;
  int n_x = 8;
  int n_t = 8;

  PeriodicGrid() = default;
  PeriodicGrid(int d_, int n_x_, int n_t_);

  double dx() const { return 1.0 / n_x; }
  double dt() const { return 1.0 / n_t; }
  std::size_t nodes_per_slice() const {
    return d == 1 ? static_cast<std::size_t>(n_x)
                  : static_cast<std::size_t>(n_x) * n_x;
  }
  std::size_t node_count() const { return nodes_per_slice() * n_t; }

  std::size_t index(int it, int i1) const {
    return static_cast<std::size_t>(it) * n_x + i1;
  }
  std::size_t index(int it, int i1, int i2) const {
    return (static_cast<std::size_t>(it) * n_x + i1) * n_x + i2;
  }

  // Node coordinates; out must have d entries.
  void node_coords(std::size_t flat, double* x, double& t) const;

  bool operator==(const PeriodicGrid&) const = default;
};

struct ScalarField {
  PeriodicGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const PeriodicGrid& g, double fill = 0.0)
      : grid(g), values(g.node_count(), fill) {}

  double& at(int it, int i1) { return values[grid.index(it, i1)]; }
  double at(int it, int i1) const { return values[grid.index(it, i1)]; }
  double& at(int it, int i1, int i2) { return values[grid.index(it, i1, i2)]; }
  double at(int it, int i1, int i2) const { return values[grid.index(it, i1, i2)]; }

  std::span<double> slice(int it) {
    return {values.data() + static_cast<std::size_t>(it) * grid.nodes_per_slice(),
            grid.nodes_per_slice()};
  }
  std::span<const double> slice(int it) const {
    return {values.data() + static_cast<std::size_t>(it) * grid.nodes_per_slice(),
            grid.nodes_per_slice()};
  }
};

struct VectorField {
  PeriodicGrid grid;
  std::vector<ScalarField> comp; // one per spatial axis

  VectorField() = default;
  explicit VectorField(const PeriodicGrid& g) : grid(g) {
    comp.assign(g.d, ScalarField(g));
  }
};

enum class DiffScheme { central2, spectral };

// Samples f(x, t) at every node.
ScalarField sample_field(const PeriodicGrid& grid,
                         const std::function<double(const double*, double)>& f);

// Periodic derivatives. central2 is the production scheme; spectral is
// exact on band-limited data and used for smooth-field cross-checks.
VectorField grad_x(const ScalarField& f, DiffScheme scheme = DiffScheme::central2);
ScalarField d_t(const ScalarField& f, DiffScheme scheme = DiffScheme::central2);
ScalarField laplacian_x(const ScalarField& f, DiffScheme scheme = DiffScheme::central2);

// d*d entries, row-major. Off-diagonal blocks are averaged over the two
// differentiation orders and then mirrored, so m_kj == m_jk bitwise.
std::vector<ScalarField> hessian_xx(const ScalarField& f,
                                    DiffScheme scheme = DiffScheme::central2);

// Mean over the grid; the torus has unit volume, so the midpoint rule is
// the plain average. Deterministic pairwise reduction.
double integrate(const ScalarField& f);

// Spatial mean of one time slice.
double integrate_slice(const ScalarField& f, int it);

// Periodic multilinear interpolation; exact at the nodes.
double interpolate(const ScalarField& f, const double* x, double t);

double sup_abs(const ScalarField& f);
double rms(const ScalarField& f);

// CSV dump `t,x1[,x2],value` with 17-significant-digit decimals in row-major
// order, plus a JSON sidecar `<path>.meta.json` with the grid shape.
void dump_field(const ScalarField& f, const std::string& csv_path);
ScalarField load_field(const std::string& csv_path);

} // namespace mather
