#include "matherlab/cell_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

#include "matherlab/numerics.hpp"

namespace mather {

namespace {

bool drift_oscillates(const std::vector<double>& hist) {
  if (hist.size() < 6) return false;
  int flips = 0;
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = hist.size() - 5; k < hist.size(); ++k) {
    const double d0 = hist[k - 1] - hist[k - 2];
    const double d1 = hist[k] - hist[k - 1];
    if (d0 * d1 < 0.0) ++flips;
    hi = std::max(hi, std::abs(d1));
    lo = std::min(lo, std::abs(d1));
  }
  return flips >= 3 && hi > 0.0 && lo > 0.1 * hi;
}

// Long-time integrator for the backward cell equation, run in the reversed
// time variable s so the march is forward-parabolic:
//   psi_s = eps*lap(psi) + H(x, P + D psi, tau(s)) - discount*psi,
//   tau(s) = (-s) mod 1.
// Explicit stage: central gradient plus per-axis Lax-Friedrichs diffusion
// alpha_k*h/2. Implicit stage: per-axis cyclic tridiagonal solves carrying
// the (optionally compensated) viscosity. The per-axis speeds alpha_k bound
// |H_{p_k}| over a momentum box tracking sup |P + D psi|; the box is cached
// with hysteresis so the operator set is rebuilt only when the iterate
// leaves it.
struct Marcher {
  const Hamiltonian& spec;
  const PeriodicGrid& grid;
  const SolverConfig& cfg;
  std::vector<double> P;
  double eps;
  double discount;

  std::vector<double> cur, nxt;
  double box = -1.0;
  std::array<double, 2> alpha{0.0, 0.0};
  int m = 1;
  double dt = 0.0;
  std::unique_ptr<CyclicTridiagonal> ax0, ax1;
  std::vector<double> drift_history;

  Marcher(const Hamiltonian& spec_, const PeriodicGrid& grid_, const SolverConfig& cfg_,
          std::span<const double> P_, double eps_, double discount_)
      : spec(spec_), grid(grid_), cfg(cfg_), P(P_.begin(), P_.end()), eps(eps_),
        discount(discount_), cur(grid_.nodes_per_slice(), 0.0),
        nxt(grid_.nodes_per_slice(), 0.0) {}

  double grad_sup() const {
    const int n = grid.n_x;
    const double inv2h = 0.5 * n;
    double best = 0.0;
    if (grid.d == 1) {
      for (int i = 0; i < n; ++i) {
        const int ip = i + 1 < n ? i + 1 : 0;
        const int im = i > 0 ? i - 1 : n - 1;
        best = std::max(best, std::abs(P[0] + (cur[ip] - cur[im]) * inv2h));
      }
    } else {
      for (int i1 = 0; i1 < n; ++i1) {
        const int i1p = i1 + 1 < n ? i1 + 1 : 0;
        const int i1m = i1 > 0 ? i1 - 1 : n - 1;
        for (int i2 = 0; i2 < n; ++i2) {
          const int i2p = i2 + 1 < n ? i2 + 1 : 0;
          const int i2m = i2 > 0 ? i2 - 1 : n - 1;
          const double g1 = P[0] + (cur[i1p * n + i2] - cur[i1m * n + i2]) * inv2h;
          const double g2 = P[1] + (cur[i1 * n + i2p] - cur[i1 * n + i2m]) * inv2h;
          best = std::max(best, std::hypot(g1, g2));
        }
      }
    }
    return best;
  }

  void estimate_alpha() {
    const int d = grid.d;
    const int np = d == 1 ? 33 : 17;
    const int nxs = std::min(grid.n_x, d == 1 ? 16 : 8);
    const int nts = d == 1 ? 8 : 6;
    const double h = grid.dx();
    const int xstride = grid.n_x / nxs;
    alpha = {0.0, 0.0};
    double x[2] = {0.0, 0.0};
    double p[2] = {0.0, 0.0};
    auto scan = [&](double t) {
      for (int a = 0; a < np; ++a) {
        p[0] = -box + 2.0 * box * a / (np - 1);
        for (int b = 0; b < (d == 2 ? np : 1); ++b) {
          if (d == 2) p[1] = -box + 2.0 * box * b / (np - 1);
          for (int i = 0; i < nxs; ++i) {
            x[0] = i * xstride * h;
            for (int j = 0; j < (d == 2 ? nxs : 1); ++j) {
              if (d == 2) x[1] = j * xstride * h;
              const HamiltonianBundle bun = spec.eval(x, p, t);
              for (int k = 0; k < d; ++k)
                alpha[k] = std::max(alpha[k], std::abs(bun.dp[k]));
            }
          }
        }
      }
    };
    for (int l = 0; l < nts; ++l) scan(static_cast<double>(l) / nts);
  }

  void maybe_rebuild() {
    const double need = grad_sup() + cfg.p_box_margin;
    if (box >= 0.0 && need <= box && need >= 0.55 * box) return;
    box = 1.05 * need;
    estimate_alpha();
    const double h = grid.dx();
    const double speed = alpha[0] + alpha[1];
    const double dt_lim = speed > 0.0 ? cfg.cfl * h / speed : 1.0 / grid.n_t;
    const int steps = static_cast<int>(std::ceil((1.0 / grid.n_t) / dt_lim));
    m = std::max(1, steps);
    if (m > 200000)
      throw SolverError("time step underflow: " + std::to_string(m) +
                            " substeps per slice interval",
                        drift_history);
    dt = 1.0 / (static_cast<double>(grid.n_t) * m);
    ax0.reset();
    ax1.reset();
    for (int k = 0; k < grid.d; ++k) {
      double eps_imp = eps;
      if (cfg.compensate_lf_viscosity) eps_imp = std::max(eps - alpha[k] * h / 2.0, 0.0);
      const double r = dt * eps_imp / (h * h);
      if (r > 0.0) {
        auto op = std::make_unique<CyclicTridiagonal>(grid.n_x, 1.0 + 2.0 * r, -r);
        (k == 0 ? ax0 : ax1) = std::move(op);
      }
    }
  }

  // Advances one full time period. When rec is non-null the state is copied
  // out just before every m-th substep, giving n_t slices at s = j/n_t.
  void march_period(ScalarField* rec) {
    const int n = grid.n_x;
    const double h = grid.dx();
    const double inv2h = 0.5 * n;
    const int total = grid.n_t * m;
    const double lf0 = alpha[0] / (2.0 * h);
    const double lf1 = alpha[1] / (2.0 * h);
    double x[2] = {0.0, 0.0};
    double p[2] = {0.0, 0.0};
    for (int j = 0; j < total; ++j) {
      if (rec != nullptr && j % m == 0) {
        auto dst = rec->slice(j / m);
        std::copy(cur.begin(), cur.end(), dst.begin());
      }
      const double tau = j == 0 ? 0.0 : 1.0 - static_cast<double>(j) / total;
      if (grid.d == 1) {
        for (int i = 0; i < n; ++i) {
          const int ip = i + 1 < n ? i + 1 : 0;
          const int im = i > 0 ? i - 1 : n - 1;
          x[0] = i * h;
          p[0] = P[0] + (cur[ip] - cur[im]) * inv2h;
          const double hval = spec.value(x, p, tau);
          nxt[i] = cur[i] + dt * (hval + lf0 * (cur[ip] - 2.0 * cur[i] + cur[im]) -
                                  discount * cur[i]);
        }
        if (ax0) ax0->solve(nxt.data(), 1);
      } else {
        for (int i1 = 0; i1 < n; ++i1) {
          const int i1p = i1 + 1 < n ? i1 + 1 : 0;
          const int i1m = i1 > 0 ? i1 - 1 : n - 1;
          x[0] = i1 * h;
          for (int i2 = 0; i2 < n; ++i2) {
            const int i2p = i2 + 1 < n ? i2 + 1 : 0;
            const int i2m = i2 > 0 ? i2 - 1 : n - 1;
            x[1] = i2 * h;
            const std::size_t c = static_cast<std::size_t>(i1) * n + i2;
            const double f1p = cur[static_cast<std::size_t>(i1p) * n + i2];
            const double f1m = cur[static_cast<std::size_t>(i1m) * n + i2];
            const double f2p = cur[static_cast<std::size_t>(i1) * n + i2p];
            const double f2m = cur[static_cast<std::size_t>(i1) * n + i2m];
            p[0] = P[0] + (f1p - f1m) * inv2h;
            p[1] = P[1] + (f2p - f2m) * inv2h;
            const double hval = spec.value(x, p, tau);
            nxt[c] = cur[c] + dt * (hval + lf0 * (f1p - 2.0 * cur[c] + f1m) +
                                    lf1 * (f2p - 2.0 * cur[c] + f2m) - discount * cur[c]);
          }
        }
        if (ax1)
          for (int i1 = 0; i1 < n; ++i1) ax1->solve(nxt.data() + static_cast<std::size_t>(i1) * n, 1);
        if (ax0)
          for (int i2 = 0; i2 < n; ++i2) ax0->solve(nxt.data() + i2, n);
      }
      cur.swap(nxt);
    }
  }
};

void check_inputs(const Hamiltonian& spec, std::span<const double> P, double eps,
                  const PeriodicGrid& grid) {
  if (grid.d != spec.dim())
    throw std::invalid_argument("grid dimension does not match the Hamiltonian");
  if (static_cast<int>(P.size()) != grid.d)
    throw std::invalid_argument("P has wrong number of components");
  if (!(eps >= 0.0)) throw std::invalid_argument("viscosity must be nonnegative");
}

ScalarField slices_to_field(const PeriodicGrid& grid, const ScalarField& rec,
                            double lam) {
  // rec holds psi at s = j/n_t; the exact orbit is psi(s) = phi(x, -s) +
  // lam*s + c, so slice j lands at t-index (n_t - j) % n_t after removing
  // the secular part.
  ScalarField out(grid);
  for (int tidx = 0; tidx < grid.n_t; ++tidx) {
    const int j = (grid.n_t - tidx) % grid.n_t;
    const double sec = lam * static_cast<double>(j) / grid.n_t;
    auto src = rec.slice(j);
    auto dst = out.slice(tidx);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] - sec;
  }
  return out;
}

} // namespace

std::string CellSolution::id() const {
  std::ostringstream os;
  os << spec->name();
  if (!spec->parameters().empty()) {
    os << "{";
    bool first = true;
    for (const auto& [k, v] : spec->parameters()) {
      if (!first) os << ",";
      first = false;
      os << k << "=" << format_shortest(v);
    }
    os << "}";
  }
  os << "_P" << format_shortest(P[0]);
  if (P.size() > 1) os << "," << format_shortest(P[1]);
  os << "_eps" << format_shortest(eps);
  os << "_g" << phi.grid.n_x << "x" << phi.grid.n_t;
  return os.str();
}

CellSolution solve_cell(const HamiltonianPtr& spec, std::span<const double> P,
                        double eps, const PeriodicGrid& grid, const SolverConfig& cfg,
                        const ScalarField* warm_start) {
  check_inputs(*spec, P, eps, grid);
  const auto t0 = std::chrono::steady_clock::now();

  Marcher mm(*spec, grid, cfg, P, eps, 0.0);
  if (warm_start != nullptr) {
    if (warm_start->grid.d != grid.d || warm_start->grid.n_x != grid.n_x)
      throw std::invalid_argument("warm start field lives on a different spatial grid");
    auto src = warm_start->slice(0);
    std::copy(src.begin(), src.end(), mm.cur.begin());
  }

  std::vector<double> prev(mm.cur.size());
  double lam_prev = 0.0;
  bool converged = false;
  int periods = 0;
  for (int per = 1; per <= cfg.max_periods; ++per) {
    periods = per;
    mm.maybe_rebuild();
    std::copy(mm.cur.begin(), mm.cur.end(), prev.begin());
    mm.march_period(nullptr);
    const double lam = mean(mm.cur) - mean(prev);
    mm.drift_history.push_back(lam);
    double shape_sup = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < mm.cur.size(); ++i) {
      const double dft = mm.cur[i] - prev[i] - lam;
      shape_sup = std::max(shape_sup, std::abs(dft));
      acc += dft * dft;
    }
    const double defect_rms = std::sqrt(acc / mm.cur.size());
    const double shift = mean(mm.cur);
    for (double& v : mm.cur) v -= shift;
    if (per >= 2 && std::abs(lam - lam_prev) < cfg.drift_tol &&
        shape_sup < cfg.shape_tol && defect_rms <= 9.0 * cfg.drift_tol) {
      converged = true;
      break;
    }
    lam_prev = lam;
  }
  if (!converged) {
    std::string msg = "cell solve did not converge in " +
                      std::to_string(cfg.max_periods) + " periods";
    if (drift_oscillates(mm.drift_history))
      msg += "; drift sequence oscillates (period map not contracting; "
             "try a smaller cfl or a finer grid)";
    throw SolverError(msg, mm.drift_history);
  }

  // Two more recorded periods. No renormalization in between, so slice-wise
  // differences B - A measure exactly one period of secular growth.
  ScalarField rec_a(grid), rec_b(grid);
  mm.maybe_rebuild();
  mm.march_period(&rec_a);
  mm.march_period(&rec_b);
  periods += 2;

  double lam_rec = 0.0;
  for (std::size_t i = 0; i < rec_a.values.size(); ++i)
    lam_rec += rec_b.values[i] - rec_a.values[i];
  lam_rec /= static_cast<double>(rec_a.values.size());
  mm.drift_history.push_back(lam_rec);

  double acc = 0.0;
  for (std::size_t i = 0; i < rec_a.values.size(); ++i) {
    const double dft = rec_b.values[i] - rec_a.values[i] - lam_rec;
    acc += dft * dft;
  }

  CellSolution sol;
  sol.spec = spec;
  sol.P.assign(P.begin(), P.end());
  sol.eps = eps;
  sol.hbar = lam_rec;
  sol.residual_rms = std::sqrt(acc / rec_a.values.size());
  sol.periods = periods;
  sol.drift_history = std::move(mm.drift_history);

  sol.phi = slices_to_field(grid, rec_b, lam_rec);
  const double mean_phi = integrate(sol.phi);
  for (double& v : sol.phi.values) v -= mean_phi;

  derive_cell_fields(sol);

  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

void derive_cell_fields(CellSolution& sol) {
  const PeriodicGrid& grid = sol.phi.grid;
  sol.grad_phi = grad_x(sol.phi);
  sol.hess_phi = hessian_xx(sol.phi);
  sol.laplacian_phi = ScalarField(grid);
  if (grid.d == 1) {
    sol.laplacian_phi.values = sol.hess_phi[0].values;
  } else {
    for (std::size_t i = 0; i < sol.laplacian_phi.values.size(); ++i)
      sol.laplacian_phi.values[i] = sol.hess_phi[0].values[i] + sol.hess_phi[3].values[i];
  }

  sol.drift = VectorField(grid);
  sol.phi_t = ScalarField(grid);
  double x[2];
  double p[2] = {0.0, 0.0};
  double t = 0.0;
  double psup = 0.0;
  for (std::size_t i = 0; i < sol.phi.values.size(); ++i) {
    grid.node_coords(i, x, t);
    double nrm2 = 0.0;
    for (int k = 0; k < grid.d; ++k) {
      p[k] = sol.P[k] + sol.grad_phi.comp[k].values[i];
      nrm2 += p[k] * p[k];
    }
    psup = std::max(psup, nrm2);
    const HamiltonianBundle bun = sol.spec->eval(x, p, t);
    for (int k = 0; k < grid.d; ++k) sol.drift.comp[k].values[i] = bun.dp[k];
    sol.phi_t.values[i] = sol.hbar - sol.eps * sol.laplacian_phi.values[i] - bun.h;
  }
  sol.p_sup = std::sqrt(psup);
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  if (d == 1)
    os << "P,eps,hbar,p_sup,residual_rms,periods,seconds\n";
  else
    os << "P1,P2,eps,hbar,p_sup,residual_rms,periods,seconds\n";
  for (const auto& r : rows) {
    for (double pc : r.P) os << format_full(pc) << ",";
    os << format_full(r.eps) << "," << format_full(r.hbar) << ","
       << format_full(r.p_sup) << "," << format_full(r.residual_rms) << ","
       << r.periods << "," << format_full(r.seconds) << "\n";
  }
  return os.str();
}

SweepReport sweep_effective(const HamiltonianPtr& spec,
                            const std::vector<std::vector<double>>& P_list,
                            std::vector<double> eps_list, const PeriodicGrid& grid,
                            const SolverConfig& cfg, bool warm_start,
                            std::vector<CellSolution>* keep) {
  std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
  SweepReport rep;
  rep.d = grid.d;
  for (const auto& P : P_list) {
    ScalarField warm;
    bool have_warm = false;
    for (double eps : eps_list) {
      SweepRow row;
      row.P = P;
      row.eps = eps;
      try {
        CellSolution sol = solve_cell(spec, P, eps, grid, cfg,
                                      warm_start && have_warm ? &warm : nullptr);
        row.hbar = sol.hbar;
        row.p_sup = sol.p_sup;
        row.residual_rms = sol.residual_rms;
        row.periods = sol.periods;
        row.seconds = sol.seconds;
        row.converged = true;
        if (warm_start) {
          warm = sol.phi;
          have_warm = true;
        }
        if (keep != nullptr) keep->push_back(std::move(sol));
      } catch (const std::exception& e) {
        row.hbar = std::numeric_limits<double>::quiet_NaN();
        row.p_sup = std::numeric_limits<double>::quiet_NaN();
        row.residual_rms = std::numeric_limits<double>::quiet_NaN();
        row.converged = false;
        row.error = e.what();
      }
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

DiscountedSolution solve_discounted(const HamiltonianPtr& spec, const PeriodicGrid& grid,
                                    double discount, const SolverConfig& cfg) {
  std::vector<double> P(spec->dim(), 0.0);
  check_inputs(*spec, P, 1.0, grid);
  if (!(discount > 0.0)) throw std::invalid_argument("discount must be positive");

  Marcher mm(*spec, grid, cfg, P, 1.0, discount);
  std::vector<double> prev(mm.cur.size());
  bool converged = false;
  int periods = 0;
  for (int per = 1; per <= cfg.max_periods; ++per) {
    periods = per;
    mm.maybe_rebuild();
    std::copy(mm.cur.begin(), mm.cur.end(), prev.begin());
    mm.march_period(nullptr);
    double sup = 0.0;
    for (std::size_t i = 0; i < mm.cur.size(); ++i)
      sup = std::max(sup, std::abs(mm.cur[i] - prev[i]));
    if (sup < cfg.shape_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SolverError("discounted solve did not converge in " +
                          std::to_string(cfg.max_periods) + " periods",
                      {});

  ScalarField rec(grid);
  mm.maybe_rebuild();
  mm.march_period(&rec);
  periods += 1;

  DiscountedSolution out;
  out.phi = slices_to_field(grid, rec, 0.0);
  out.hbar_estimate = discount * integrate(out.phi);
  out.periods = periods;
  return out;
}

PDerivativeFields p_derivative_fields(const HamiltonianPtr& spec,
                                      std::span<const double> P, double eps,
                                      const PeriodicGrid& grid, const SolverConfig& cfg,
                                      double h, const CellSolution* warm_from) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  SolverConfig tight = cfg;
  tight.drift_tol = std::min(cfg.drift_tol, 1e-12);
  tight.shape_tol = std::min(cfg.shape_tol, 1e-12);
  tight.max_periods = std::max(cfg.max_periods, 20000);

  PDerivativeFields out;
  out.fd_step = h;
  out.base = solve_cell(spec, P, eps, grid, tight,
                        warm_from != nullptr ? &warm_from->phi : nullptr);
  const int d = grid.d;
  out.dphi_dP.assign(d, ScalarField(grid));
  out.d2phi_dP2.assign(d, ScalarField(grid));
  out.dhbar_dP.assign(d, 0.0);
  out.d2hbar_dP2.assign(d, 0.0);
  for (int k = 0; k < d; ++k) {
    std::vector<double> Pp(P.begin(), P.end()), Pm(P.begin(), P.end());
    Pp[k] += h;
    Pm[k] -= h;
    const CellSolution sp = solve_cell(spec, Pp, eps, grid, tight, &out.base.phi);
    const CellSolution sm = solve_cell(spec, Pm, eps, grid, tight, &out.base.phi);
    for (std::size_t i = 0; i < out.base.phi.values.size(); ++i) {
      out.dphi_dP[k].values[i] = (sp.phi.values[i] - sm.phi.values[i]) / (2.0 * h);
      out.d2phi_dP2[k].values[i] =
          (sp.phi.values[i] - 2.0 * out.base.phi.values[i] + sm.phi.values[i]) / (h * h);
    }
    out.dhbar_dP[k] = (sp.hbar - sm.hbar) / (2.0 * h);
    out.d2hbar_dP2[k] = (sp.hbar - 2.0 * out.base.hbar + sm.hbar) / (h * h);
  }
  return out;
}

} // namespace mather
