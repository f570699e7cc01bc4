#include "matherlab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "matherlab/numerics.hpp"

namespace mather {

namespace {

// Bernoulli function z / (e^z - 1), the exponential-fitting weight.
double bern(double z) {
  if (std::abs(z) < 1e-10) return 1.0 - 0.5 * z;
  return z / std::expm1(z);
}

// Drift component at node index within a slice, linearly interpolated
// between the two bracketing time slices.
struct DriftInterp {
  const VectorField& drift;
  int j0 = 0, j1 = 0;
  double w = 0.0;

  DriftInterp(const VectorField& d, double t) : drift(d) {
    const int nt = d.grid.n_t;
    double u = (t - std::floor(t)) * nt;
    j0 = static_cast<int>(u);
    if (j0 >= nt) j0 = nt - 1;
    w = u - j0;
    j1 = j0 + 1 < nt ? j0 + 1 : 0;
  }

  double at(int comp, std::size_t node) const {
    const std::size_t nsp = drift.grid.nodes_per_slice();
    const double* v = drift.comp[comp].values.data();
    return (1.0 - w) * v[j0 * nsp + node] + w * v[j1 * nsp + node];
  }
};

// Scharfetter-Gummel coefficients along one periodic line of length n.
// For node i the operator reads
//   (L theta)_i = lo[i]*theta[i-1] + di[i]*theta[i] + up[i]*theta[i+1],
// assembled from face fluxes so each column sums to zero bitwise.
struct LineOperator {
  std::vector<double> lo, di, up;
  std::vector<double> bm, bp; // B(-Pe), B(Pe) per face i+1/2

  explicit LineOperator(int n) : lo(n), di(n), up(n), bm(n), bp(n) {}

  void assemble(int n, double scale, const std::vector<double>& pe) {
    for (int i = 0; i < n; ++i) {
      bm[i] = bern(-pe[i]);
      bp[i] = bern(pe[i]);
    }
    for (int i = 0; i < n; ++i) {
      const int im = i > 0 ? i - 1 : n - 1;
      lo[i] = scale * bm[im];
      up[i] = scale * bp[i];
      di[i] = -(scale * bp[im] + scale * bm[i]);
    }
  }
};

double positivity_dt(double u_sup, double eps, double h) {
  // The diagonal of the flux operator is bounded by
  // (eps/h^2) * (2 B(pe) + pe) at pe = u_sup*h/eps, an even increasing
  // envelope; the explicit Crank-Nicolson half stays nonnegative while
  // dt/2 * |diag| <= 1.
  const double pe = u_sup * h / eps;
  const double diag = eps / (h * h) * (2.0 * bern(pe) + pe);
  return 0.9 * 2.0 / diag;
}

class ThetaMarcher {
public:
  ThetaMarcher(const VectorField& drift, double eps)
      : drift_(drift), grid_(drift.grid), eps_(eps), nsp_(grid_.nodes_per_slice()),
        cur_(nsp_, 1.0), rhs_(nsp_), pe_(grid_.n_x), work_(4 * grid_.n_x),
        a_(grid_.n_x), b_(grid_.n_x), c_(grid_.n_x), line_(grid_.n_x),
        opx_(grid_.n_x), opy_(grid_.n_x) {
    const double h = grid_.dx();
    double dt_pos = 1.0 / grid_.n_t;
    for (int k = 0; k < grid_.d; ++k) {
      const double us = sup_abs(drift.comp[k]);
      dt_pos = std::min(dt_pos, positivity_dt(us, eps, h));
    }
    m_ = std::max(1, static_cast<int>(std::ceil((1.0 / grid_.n_t) / dt_pos)));
    dt_ = 1.0 / (static_cast<double>(grid_.n_t) * m_);
  }

  int substeps_per_slice() const { return m_; }
  std::vector<double>& state() { return cur_; }

  void march_period(ScalarField* rec) {
    const int total = grid_.n_t * m_;
    for (int j = 0; j < total; ++j) {
      if (rec != nullptr && j % m_ == 0) {
        auto dst = rec->slice(j / m_);
        std::copy(cur_.begin(), cur_.end(), dst.begin());
      }
      const double tmid = (j + 0.5) / total;
      if (grid_.d == 1)
        step_1d(tmid);
      else
        step_2d(tmid);
    }
  }

  // Renormalizes slice mass and clears roundoff-level negatives; genuine
  // negative values mean the scheme lost positivity and are fatal.
  void project() {
    double mx = 0.0, mn = 0.0;
    for (double v : cur_) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    if (mn < -1e-12 * std::max(mx, 1.0))
      throw DensityError("density went negative: min " + format_full(mn));
    if (mn < 0.0)
      for (double& v : cur_)
        if (v < 0.0) v = 0.0;
    const double total = pairwise_sum(cur_);
    if (!(total > 0.0)) throw DensityError("density lost all mass");
    const double scale = static_cast<double>(nsp_) / total;
    for (double& v : cur_) v *= scale;
  }

private:
  void step_1d(double tmid) {
    const int n = grid_.n_x;
    const double h = grid_.dx();
    const DriftInterp di(drift_, tmid);
    for (int i = 0; i < n; ++i) {
      const int ip = i + 1 < n ? i + 1 : 0;
      const double uf = 0.5 * (di.at(0, i) + di.at(0, ip));
      pe_[i] = uf * h / eps_;
    }
    opx_.assemble(n, eps_ / (h * h), pe_);
    const double half = 0.5 * dt_;
    for (int i = 0; i < n; ++i) {
      const int ip = i + 1 < n ? i + 1 : 0;
      const int im = i > 0 ? i - 1 : n - 1;
      rhs_[i] = cur_[i] + half * (opx_.lo[i] * cur_[im] + opx_.di[i] * cur_[i] +
                                  opx_.up[i] * cur_[ip]);
      a_[i] = -half * opx_.lo[i];
      b_[i] = 1.0 - half * opx_.di[i];
      c_[i] = -half * opx_.up[i];
    }
    solve_cyclic_tridiagonal(a_, b_, c_, rhs_, work_);
    cur_.swap(rhs_);
  }

  void step_2d(double tmid) {
    const int n = grid_.n_x;
    const double h = grid_.dx();
    const double half = 0.5 * dt_;
    const DriftInterp di(drift_, tmid);

    // Half step A: explicit along axis 1, implicit along axis 0.
    auto axis1_pe = [&](int i1) {
      for (int i2 = 0; i2 < n; ++i2) {
        const std::size_t node = static_cast<std::size_t>(i1) * n + i2;
        const std::size_t nodep =
            static_cast<std::size_t>(i1) * n + (i2 + 1 < n ? i2 + 1 : 0);
        pe_[i2] = 0.5 * (di.at(1, node) + di.at(1, nodep)) * h / eps_;
      }
    };
    auto axis0_pe = [&](int i2) {
      for (int i1 = 0; i1 < n; ++i1) {
        const std::size_t node = static_cast<std::size_t>(i1) * n + i2;
        const std::size_t nodep =
            static_cast<std::size_t>(i1 + 1 < n ? i1 + 1 : 0) * n + i2;
        pe_[i1] = 0.5 * (di.at(0, node) + di.at(0, nodep)) * h / eps_;
      }
    };

    // rhs = (I + half*L1) theta, rowwise along axis 1
    for (int i1 = 0; i1 < n; ++i1) {
      axis1_pe(i1);
      opy_.assemble(n, eps_ / (h * h), pe_);
      const double* row = cur_.data() + static_cast<std::size_t>(i1) * n;
      double* out = rhs_.data() + static_cast<std::size_t>(i1) * n;
      for (int i2 = 0; i2 < n; ++i2) {
        const int ip = i2 + 1 < n ? i2 + 1 : 0;
        const int im = i2 > 0 ? i2 - 1 : n - 1;
        out[i2] = row[i2] + half * (opy_.lo[i2] * row[im] + opy_.di[i2] * row[i2] +
                                    opy_.up[i2] * row[ip]);
      }
    }
    // solve (I - half*L0) theta* = rhs, columnwise along axis 0
    for (int i2 = 0; i2 < n; ++i2) {
      axis0_pe(i2);
      opx_.assemble(n, eps_ / (h * h), pe_);
      for (int i1 = 0; i1 < n; ++i1) {
        line_[i1] = rhs_[static_cast<std::size_t>(i1) * n + i2];
        a_[i1] = -half * opx_.lo[i1];
        b_[i1] = 1.0 - half * opx_.di[i1];
        c_[i1] = -half * opx_.up[i1];
      }
      solve_cyclic_tridiagonal(a_, b_, c_, line_, work_);
      for (int i1 = 0; i1 < n; ++i1)
        rhs_[static_cast<std::size_t>(i1) * n + i2] = line_[i1];
    }

    // Half step B: explicit along axis 0, implicit along axis 1.
    for (int i2 = 0; i2 < n; ++i2) {
      axis0_pe(i2);
      opx_.assemble(n, eps_ / (h * h), pe_);
      for (int i1 = 0; i1 < n; ++i1) {
        const int ip = i1 + 1 < n ? i1 + 1 : 0;
        const int im = i1 > 0 ? i1 - 1 : n - 1;
        line_[i1] = rhs_[static_cast<std::size_t>(i1) * n + i2] +
                    half * (opx_.lo[i1] * rhs_[static_cast<std::size_t>(im) * n + i2] +
                            opx_.di[i1] * rhs_[static_cast<std::size_t>(i1) * n + i2] +
                            opx_.up[i1] * rhs_[static_cast<std::size_t>(ip) * n + i2]);
      }
      for (int i1 = 0; i1 < n; ++i1)
        cur_[static_cast<std::size_t>(i1) * n + i2] = line_[i1];
    }
    for (int i1 = 0; i1 < n; ++i1) {
      axis1_pe(i1);
      opy_.assemble(n, eps_ / (h * h), pe_);
      double* row = cur_.data() + static_cast<std::size_t>(i1) * n;
      for (int i2 = 0; i2 < n; ++i2) {
        a_[i2] = -half * opy_.lo[i2];
        b_[i2] = 1.0 - half * opy_.di[i2];
        c_[i2] = -half * opy_.up[i2];
        line_[i2] = row[i2];
      }
      solve_cyclic_tridiagonal(a_, b_, c_, line_, work_);
      for (int i2 = 0; i2 < n; ++i2) row[i2] = line_[i2];
    }
  }

  const VectorField& drift_;
  const PeriodicGrid& grid_;
  double eps_;
  std::size_t nsp_;
  int m_ = 1;
  double dt_ = 0.0;
  std::vector<double> cur_, rhs_, pe_, work_, a_, b_, c_, line_;
  LineOperator opx_, opy_;
};

} // namespace

DensitySolution solve_theta(const VectorField& drift, double eps, double tol,
                            int max_periods) {
  if (!(eps > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (drift.comp.empty() || static_cast<int>(drift.comp.size()) != drift.grid.d)
    throw std::invalid_argument("drift field has wrong component count");

  ThetaMarcher mm(drift, eps);
  std::vector<double> prev(mm.state().size());
  bool converged = false;
  int periods = 0;
  double defect = 0.0;
  for (int per = 1; per <= max_periods; ++per) {
    periods = per;
    std::copy(mm.state().begin(), mm.state().end(), prev.begin());
    mm.march_period(nullptr);
    mm.project();
    double acc = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i)
      acc += std::abs(mm.state()[i] - prev[i]);
    defect = acc / static_cast<double>(prev.size());
    if (defect < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw DensityError("invariant density iteration did not converge in " +
                       std::to_string(max_periods) + " periods (defect " +
                       format_full(defect) + ")");

  DensitySolution out;
  out.theta = ScalarField(drift.grid);
  mm.march_period(&out.theta);
  mm.project();
  out.periods = periods + 1;
  out.defect_l1 = defect;

  // Per-slice normalization of the recorded block: each slice is a
  // probability density in x, and their average is the space-time measure.
  const std::size_t nsp = drift.grid.nodes_per_slice();
  for (int j = 0; j < drift.grid.n_t; ++j) {
    auto sl = out.theta.slice(j);
    const double total = pairwise_sum(sl);
    if (!(total > 0.0)) throw DensityError("recorded slice lost all mass");
    const double scale = static_cast<double>(nsp) / total;
    for (double& v : sl) v *= scale;
  }
  return out;
}

double generator_residual(const ScalarField& theta, const VectorField& drift, double eps,
                          const TestFunction& w) {
  const PeriodicGrid& grid = theta.grid;
  if (!(grid == drift.grid))
    throw std::invalid_argument("density and drift live on different grids");
  std::vector<double> terms(theta.values.size());
  double x[2];
  double g[2] = {0.0, 0.0};
  double t = 0.0;
  for (std::size_t i = 0; i < theta.values.size(); ++i) {
    grid.node_coords(i, x, t);
    w.grad_x(x, t, g);
    double adv = 0.0;
    for (int k = 0; k < grid.d; ++k) adv += drift.comp[k].values[i] * g[k];
    terms[i] = theta.values[i] * (w.dt(x, t) + adv + eps * w.lap_x(x, t));
  }
  return mean(terms);
}

std::vector<ResidualRow> stationarity_rows(const ScalarField& theta,
                                           const VectorField& drift, double eps,
                                           const std::vector<TestFunction>& ws) {
  std::vector<ResidualRow> rows;
  rows.reserve(ws.size());
  for (const auto& w : ws)
    rows.push_back({w.label, generator_residual(theta, drift, eps, w)});
  return rows;
}

} // namespace mather
