#include "matherlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "matherlab/numerics.hpp"

namespace mather {

namespace {

constexpr double kTiny = 1e-300;

// Scale floor for relative comparisons. Every gated identity compares
// quantities whose physical scale is well above this, while flat cells
// drive both sides to stencil-amplified machine noise (~1e-13 at n = 128);
// two sides below the floor are equal and must not be ranked by the ratio
// of their rounding errors.
constexpr double kRelScaleFloor = 1e-10;

double rel_residual_of(double lhs, double rhs) {
  const double
      scale = std::max(std::max(std::abs(lhs), std::abs(rhs)), kRelScaleFloor);
  return std::abs(lhs - rhs) / scale;
}

CheckRow base_row(std::string name, RowKind kind, double lhs, double rhs, double tol) {
  CheckRow r;
  r.name = std::move(name);
  r.kind = kind;
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_residual = std::abs(lhs - rhs);
  r.rel_residual = rel_residual_of(lhs, rhs);
  r.tolerance = tol;
  switch (kind) {
    case RowKind::equality_rel: r.pass = r.rel_residual <= tol; break;
    case RowKind::equality_abs: r.pass = r.abs_residual <= tol; break;
    case RowKind::upper_bound: r.pass = lhs <= rhs + tol; break;
    case RowKind::lower_bound: r.pass = lhs >= rhs - tol; break;
    case RowKind::info: r.pass = true; break;
  }
  return r;
}

const char* kind_name(RowKind k) {
  switch (k) {
    case RowKind::equality_rel: return "equality_rel";
    case RowKind::equality_abs: return "equality_abs";
    case RowKind::upper_bound: return "upper_bound";
    case RowKind::lower_bound: return "lower_bound";
    case RowKind::info: return "info";
  }
  return "info";
}

// (1/N) sum theta_i f_i, the space-time integral of f against the density.
double weighted_mean(const ScalarField& theta, const std::vector<double>& f) {
  std::vector<double> terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) terms[i] = theta.values[i] * f[i];
  return mean(terms);
}

std::vector<HamiltonianBundle> node_bundles(const CellSolution& cell) {
  const PeriodicGrid& grid = cell.phi.grid;
  std::vector<HamiltonianBundle> out(grid.node_count());
  double x[2];
  double p[2] = {0.0, 0.0};
  double t = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    grid.node_coords(i, x, t);
    for (int k = 0; k < grid.d; ++k)
      p[k] = cell.P[k] + cell.grad_phi.comp[k].values[i];
    out[i] = cell.spec->eval(x, p, t);
  }
  return out;
}

std::string eps_tag(double eps) { return "eps=" + format_shortest(eps); }

} // namespace

CheckRow equality_rel_row(std::string name, double lhs, double rhs, double rel_tol) {
  return base_row(std::move(name), RowKind::equality_rel, lhs, rhs, rel_tol);
}
CheckRow equality_abs_row(std::string name, double lhs, double rhs, double abs_tol) {
  return base_row(std::move(name), RowKind::equality_abs, lhs, rhs, abs_tol);
}
CheckRow upper_bound_row(std::string name, double lhs, double rhs, double abs_tol) {
  return base_row(std::move(name), RowKind::upper_bound, lhs, rhs, abs_tol);
}
CheckRow lower_bound_row(std::string name, double lhs, double rhs, double abs_tol) {
  return base_row(std::move(name), RowKind::lower_bound, lhs, rhs, abs_tol);
}
CheckRow info_row(std::string name, double lhs, double rhs) {
  return base_row(std::move(name), RowKind::info, lhs, rhs, 0.0);
}

bool VerificationReport::all_pass() const {
  for (const auto& r : rows)
    if (r.kind != RowKind::info && !r.pass) return false;
  return true;
}

const CheckRow* VerificationReport::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

void VerificationReport::merge(const VerificationReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string VerificationReport::to_text() const {
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::ostringstream os;
  if (!context.empty()) os << "# " << context << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %13s  %13s  %10s  %10s  %10s  %s\n",
                static_cast<int>(w), "name", "lhs", "rhs", "abs", "rel", "tol",
                "status");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %13.6e  %13.6e  %10.3e  %10.3e  %10.3e  %s\n",
                  static_cast<int>(w), r.name.c_str(), r.lhs, r.rhs, r.abs_residual,
                  r.rel_residual, r.tolerance,
                  r.kind == RowKind::info ? "INFO" : (r.pass ? "PASS" : "FAIL"));
    os << buf;
  }
  return os.str();
}

std::string VerificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["context"] = context;
  j["all_pass"] = all_pass();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    row["kind"] = kind_name(r.kind);
    row["lhs"] = r.lhs;
    row["rhs"] = r.rhs;
    row["abs_residual"] = r.abs_residual;
    row["rel_residual"] = r.rel_residual;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

VerificationReport check_mather_conditions(const CellSolution& cell,
                                           const DensitySolution& theta,
                                           const GraphMeasure& mu,
                                           const std::vector<TestFunction>& dictionary,
                                           const VerifyTolerances& tol) {
  const int d = mu.d;
  VerificationReport rep;
  rep.context = "mather_conditions " + cell.id();

  const std::size_t np = mu.particles.size();
  std::vector<double> t_defect2(np), t_lap2(np), t_graph(np), t_stat(np), t_full(np),
      t_rhs_full(np), t_double(np), t_psi(np);
  for (std::size_t i = 0; i < np; ++i) {
    const Particle& pt = mu.particles[i];
    const std::size_t node = pt.node;
    const HamiltonianBundle bun = cell.spec->eval(pt.x.data(), pt.p.data(), pt.t);
    const double lap = cell.laplacian_phi.values[node];
    const double phit = cell.phi_t.values[node];
    const double defect = phit + bun.h - cell.hbar;
    double adv_rel = 0.0, adv_full = 0.0, adv_double = 0.0, grad2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double g = cell.grad_phi.comp[k].values[node];
      adv_rel += g * bun.dp[k];
      adv_full += pt.p[k] * bun.dp[k];
      adv_double += (pt.p[k] + cell.P[k]) * bun.dp[k];
      grad2 += g * g;
    }
    t_defect2[i] = pt.w * defect * defect;
    t_lap2[i] = pt.w * lap * lap;
    t_graph[i] = pt.w * (phit + adv_rel);
    t_stat[i] = pt.w * (phit + adv_rel + cell.eps * lap);
    t_full[i] = pt.w * adv_full;
    t_rhs_full[i] = pt.w * (cell.hbar - cell.eps * lap - phit);
    t_double[i] = pt.w * adv_double;
    t_psi[i] = pt.w * (phit + adv_rel + cell.eps * (lap + grad2));
  }
  const double rms_defect = std::sqrt(std::max(pairwise_sum(t_defect2), 0.0));
  const double rms_lap = std::sqrt(std::max(pairwise_sum(t_lap2), 0.0));

  rep.rows.push_back(info_row("a_rms_mu", rms_defect));
  rep.rows.push_back(equality_rel_row("a_identity", rms_defect, cell.eps * rms_lap,
                                      tol.a_identity_rel * tol.scale));
  rep.rows.push_back(info_row("b_graph", pairwise_sum(t_graph)));
  rep.rows.push_back(info_row("b_stationarity", pairwise_sum(t_stat)));
  rep.rows.push_back(
      info_row("b_full_vs_H", pairwise_sum(t_full), pairwise_sum(t_rhs_full)));
  rep.rows.push_back(info_row("b_literal_double_shift", pairwise_sum(t_double)));
  rep.rows.push_back(info_row("b_psi_test", pairwise_sum(t_psi)));

  double worst = 0.0;
  for (const auto& w : dictionary)
    worst = std::max(worst,
                     std::abs(generator_residual(theta.theta, cell.drift, cell.eps, w)));
  rep.rows.push_back(equality_abs_row("c_stationarity_max", worst, 0.0,
                                      tol.stationarity_abs * tol.scale));
  return rep;
}

namespace {

struct BetaFields {
  std::string tag;
  double hbar_b = 0.0;
  double hbar_bb = 0.0;
  ScalarField phi_b, phi_bb;
  VectorField grad_b, grad_bb;
  std::vector<double> Hb, Hbb, cross, quad; // per node
};

BetaFields make_beta_x(const CellSolution& cell,
                       const std::vector<HamiltonianBundle>& bun, int axis) {
  const int d = cell.phi.grid.d;
  BetaFields b;
  b.tag = "x" + std::to_string(axis + 1);
  b.phi_b = grad_x(cell.phi, DiffScheme::spectral).comp[axis];
  b.phi_bb = hessian_xx(cell.phi, DiffScheme::spectral)[static_cast<std::size_t>(axis) * d + axis];
  b.grad_b = grad_x(b.phi_b, DiffScheme::spectral);
  b.grad_bb = grad_x(b.phi_bb, DiffScheme::spectral);
  const std::size_t N = cell.phi.values.size();
  b.Hb.resize(N);
  b.Hbb.resize(N);
  b.cross.resize(N);
  b.quad.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    b.Hb[i] = bun[i].dx[axis];
    b.Hbb[i] = bun[i].dxx[static_cast<std::size_t>(axis) * d + axis];
    double cr = 0.0, qd = 0.0;
    for (int k = 0; k < d; ++k) {
      const double gbk = b.grad_b.comp[k].values[i];
      cr += bun[i].dpx[static_cast<std::size_t>(k) * d + axis] * gbk;
      for (int j = 0; j < d; ++j)
        qd += bun[i].dpp[static_cast<std::size_t>(k) * d + j] * gbk *
              b.grad_b.comp[j].values[i];
    }
    b.cross[i] = 2.0 * cr;
    b.quad[i] = qd;
  }
  return b;
}

BetaFields make_beta_P(const CellSolution& cell,
                       const std::vector<HamiltonianBundle>& bun,
                       const PDerivativeFields& pfd, int axis) {
  const int d = cell.phi.grid.d;
  BetaFields b;
  b.tag = "P" + std::to_string(axis + 1);
  b.hbar_b = pfd.dhbar_dP[axis];
  b.hbar_bb = pfd.d2hbar_dP2[axis];
  b.phi_b = pfd.dphi_dP[axis];
  b.phi_bb = pfd.d2phi_dP2[axis];
  b.grad_b = grad_x(b.phi_b, DiffScheme::spectral);
  b.grad_bb = grad_x(b.phi_bb, DiffScheme::spectral);
  const std::size_t N = cell.phi.values.size();
  b.Hb.resize(N);
  b.Hbb.resize(N);
  b.cross.resize(N);
  b.quad.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    b.Hb[i] = bun[i].dp[axis];
    b.Hbb[i] = bun[i].dpp[static_cast<std::size_t>(axis) * d + axis];
    double cr = 0.0, qd = 0.0;
    for (int k = 0; k < d; ++k) {
      const double gbk = b.grad_b.comp[k].values[i];
      cr += bun[i].dpp[static_cast<std::size_t>(k) * d + axis] * gbk;
      for (int j = 0; j < d; ++j)
        qd += bun[i].dpp[static_cast<std::size_t>(k) * d + j] * gbk *
              b.grad_b.comp[j].values[i];
    }
    b.cross[i] = 2.0 * cr;
    b.quad[i] = qd;
  }
  return b;
}

void append_estimate_rows(VerificationReport& rep, const CellSolution& cell,
                          const DensitySolution& theta, const BetaFields& b,
                          double rel_tol) {
  const int d = cell.phi.grid.d;
  const std::size_t N = cell.phi.values.size();
  const ScalarField& th = theta.theta;

  std::vector<double> f(N);

  // (1) eps int |D phi_b|^2 = int phi_b (H_b - hbar_b)
  for (std::size_t i = 0; i < N; ++i) {
    double g2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double g = b.grad_b.comp[k].values[i];
      g2 += g * g;
    }
    f[i] = g2;
  }
  const double e1_lhs = cell.eps * weighted_mean(th, f);
  for (std::size_t i = 0; i < N; ++i)
    f[i] = b.phi_b.values[i] * (b.Hb[i] - b.hbar_b);
  const double e1_rhs = weighted_mean(th, f);
  rep.rows.push_back(equality_rel_row("est1_" + b.tag, e1_lhs, e1_rhs, rel_tol));
  rep.rows.push_back(info_row("est1_" + b.tag + "_doubled_rhs", e1_lhs, 2.0 * e1_rhs));

  // (2) hbar_bb = int (H_bb + cross + quad)
  for (std::size_t i = 0; i < N; ++i) f[i] = b.Hbb[i] + b.cross[i] + b.quad[i];
  const double e2_rhs = weighted_mean(th, f);
  for (std::size_t i = 0; i < N; ++i)
    f[i] = std::abs(b.Hbb[i]) + std::abs(b.cross[i]) + std::abs(b.quad[i]);
  const double e2_ref = std::max(weighted_mean(th, f), 1e-12);
  rep.rows.push_back(
      equality_abs_row("est2_" + b.tag, b.hbar_bb, e2_rhs, rel_tol * e2_ref));

  // (3) eps int |D phi_bb|^2 = -int phi_bb (hbar_bb - H_bb - cross - quad)
  for (std::size_t i = 0; i < N; ++i) {
    double g2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double g = b.grad_bb.comp[k].values[i];
      g2 += g * g;
    }
    f[i] = g2;
  }
  const double e3_lhs = cell.eps * weighted_mean(th, f);
  for (std::size_t i = 0; i < N; ++i)
    f[i] = -b.phi_bb.values[i] * (b.hbar_bb - b.Hbb[i] - b.cross[i] - b.quad[i]);
  const double e3_rhs = weighted_mean(th, f);
  rep.rows.push_back(equality_rel_row("est3_" + b.tag, e3_lhs, e3_rhs, rel_tol));
  rep.rows.push_back(info_row("est3_" + b.tag + "_doubled_rhs", e3_lhs, 2.0 * e3_rhs));
}

} // namespace

VerificationReport check_estimates(const CellSolution& cell, const DensitySolution& theta,
                                   const PDerivativeFields* pfd,
                                   const VerifyTolerances& tol) {
  const PeriodicGrid& grid = cell.phi.grid;
  if (!(grid == theta.theta.grid))
    throw std::invalid_argument("cell and density live on different grids");
  VerificationReport rep;
  rep.context = "estimates " + cell.id();
  const auto bun = node_bundles(cell);
  for (int axis = 0; axis < grid.d; ++axis)
    append_estimate_rows(rep, cell, theta, make_beta_x(cell, bun, axis),
                         tol.estimate_x_rel * tol.scale);
  if (pfd != nullptr) {
    for (int axis = 0; axis < grid.d; ++axis)
      append_estimate_rows(rep, cell, theta, make_beta_P(cell, bun, *pfd, axis),
                           tol.estimate_P_rel * tol.scale);
  }
  return rep;
}

VerificationReport check_uniform_bounds(const std::vector<const CellSolution*>& cells,
                                        const std::vector<const DensitySolution*>& thetas,
                                        const std::vector<const PDerivativeFields*>& pfds,
                                        const VerifyTolerances&) {
  // every gate here is either a fixed ratio or calibrated from the two
  // largest-eps rows, so the shared tolerance block has nothing to scale
  if (cells.size() < 3 || cells.size() != thetas.size() || cells.size() != pfds.size())
    throw std::invalid_argument("uniform bounds need >= 3 aligned sweep rows");
  const int d = cells[0]->phi.grid.d;
  const std::size_t nrows = cells.size();
  VerificationReport rep;
  rep.context = "uniform_bounds " + cells[0]->id() + " sweep of " +
                std::to_string(nrows);

  // Lipschitz band rows
  double psup_min = 1e300, psup_max = 0.0, grad_min = 1e300, grad_max = 0.0,
         phit_max = 0.0;
  for (const CellSolution* c : cells) {
    psup_min = std::min(psup_min, c->p_sup);
    psup_max = std::max(psup_max, c->p_sup);
    double gs = 0.0;
    for (std::size_t i = 0; i < c->phi.values.size(); ++i) {
      double g2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double g = c->grad_phi.comp[k].values[i];
        g2 += g * g;
      }
      gs = std::max(gs, g2);
    }
    grad_min = std::min(grad_min, std::sqrt(gs));
    grad_max = std::max(grad_max, std::sqrt(gs));
    phit_max = std::max(phit_max, sup_abs(c->phi_t));
  }
  rep.rows.push_back(upper_bound_row("lip_band_p_sup",
                                     psup_max / std::max(psup_min, kTiny), 2.0, 0.0));
  rep.rows.push_back(info_row("lip_band_grad", grad_max / std::max(grad_min, kTiny)));
  rep.rows.push_back(info_row("sup_phi_t_max", phit_max));

  // eps int |D2 phi|^2 dtheta, capped by 1.5x the larger of the first two rows
  std::vector<double> d2(nrows), cubic(nrows);
  for (std::size_t r = 0; r < nrows; ++r) {
    const CellSolution& c = *cells[r];
    const std::size_t N = c.phi.values.size();
    std::vector<double> frob2(N), frob3(N);
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (int a = 0; a < d * d; ++a) {
        const double hh = c.hess_phi[a].values[i];
        s += hh * hh;
      }
      frob2[i] = s;
      frob3[i] = s * std::sqrt(s);
    }
    d2[r] = c.eps * weighted_mean(thetas[r]->theta, frob2);
    cubic[r] = weighted_mean(thetas[r]->theta, frob3);
  }
  const double d2_cap = 1.5 * std::max(d2[0], d2[1]);
  for (std::size_t r = 0; r < nrows; ++r)
    rep.rows.push_back(
        upper_bound_row("d2phi_" + eps_tag(cells[r]->eps), d2[r], d2_cap, 0.0));

  // eps int |D phi_xx|^2 <= C (1 + int |D2 phi|^3), C calibrated on the
  // first two rows
  std::vector<double> dxx_lhs(nrows);
  for (std::size_t r = 0; r < nrows; ++r) {
    const CellSolution& c = *cells[r];
    const std::size_t N = c.phi.values.size();
    std::vector<double> acc(N, 0.0);
    for (int axis = 0; axis < d; ++axis) {
      const VectorField g =
          grad_x(c.hess_phi[static_cast<std::size_t>(axis) * d + axis]);
      for (std::size_t i = 0; i < N; ++i) {
        double g2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double gg = g.comp[k].values[i];
          g2 += gg * gg;
        }
        acc[i] += g2;
      }
    }
    dxx_lhs[r] = c.eps * weighted_mean(thetas[r]->theta, acc);
  }
  const double c_dxx =
      1.5 * std::max(dxx_lhs[0] / (1.0 + cubic[0]), dxx_lhs[1] / (1.0 + cubic[1]));
  for (std::size_t r = 0; r < nrows; ++r) {
    const double rhs = c_dxx * (1.0 + cubic[r]);
    rep.rows.push_back(upper_bound_row("dxphixx_" + eps_tag(cells[r]->eps), dxx_lhs[r],
                                       rhs, 0.05 * rhs));
  }

  // Young-inequality bound on the mixed P-x energy where derivative fields
  // are available
  for (std::size_t r = 0; r < nrows; ++r) {
    if (pfds[r] == nullptr) continue;
    const CellSolution& c = *cells[r];
    const PDerivativeFields& pfd = *pfds[r];
    const auto bun = node_bundles(c);
    const std::size_t N = c.phi.values.size();
    double lhs = 0.0, rhs = 0.0;
    std::vector<double> f(N);
    for (int axis = 0; axis < d; ++axis) {
      const VectorField g = grad_x(pfd.dphi_dP[axis], DiffScheme::spectral);
      for (std::size_t i = 0; i < N; ++i) {
        double g2 = 0.0;
        for (int k = 0; k < d; ++k) g2 += g.comp[k].values[i] * g.comp[k].values[i];
        f[i] = g2;
      }
      lhs += c.eps * weighted_mean(thetas[r]->theta, f);
      for (std::size_t i = 0; i < N; ++i) {
        const double v = pfd.dphi_dP[axis].values[i];
        f[i] = 0.5 * v * v;
      }
      rhs += weighted_mean(thetas[r]->theta, f);
      for (std::size_t i = 0; i < N; ++i) {
        const double v = bun[i].dp[axis] - pfd.dhbar_dP[axis];
        f[i] = 0.5 * v * v;
      }
      rhs += weighted_mean(thetas[r]->theta, f);
    }
    rep.rows.push_back(
        upper_bound_row("d2Px_" + eps_tag(c.eps), lhs, rhs, 0.05 * rhs));
  }
  return rep;
}

VerificationReport check_adjoint_identity(const CellSolution& cell, const GraphMeasure& mu,
                                          const DissipationMatrix& dissipation,
                                          const std::vector<MuObservable>& dictionary,
                                          const VerifyTolerances& tol) {
  const int d = mu.d;
  VerificationReport rep;
  rep.context = "adjoint_identity " + cell.id();

  // support must sit inside the flat bump region
  long long leaks = 0;
  const double flat = dictionary.empty() ? 0.0 : dictionary.front().flat_radius();
  for (const auto& pt : mu.particles) {
    double p2 = 0.0;
    for (int k = 0; k < d; ++k) p2 += pt.p[k] * pt.p[k];
    if (std::sqrt(p2) > flat) ++leaks;
  }
  rep.rows.push_back(
      equality_abs_row("support_leak_count", static_cast<double>(leaks), 0.0, 0.5));

  const std::size_t np = mu.particles.size();
  std::vector<double> t1(np), t2(np), t3(np);
  double din2_max = 0.0, idenmat_max = 0.0, eps_term_max = 0.0;

  // density recovered from the particle weights, for the delegated rows
  ScalarField theta_rec(cell.phi.grid, 0.0);
  {
    const double N = static_cast<double>(cell.phi.grid.node_count());
    for (const auto& pt : mu.particles) theta_rec.values[pt.node] = pt.w * N;
  }

  for (const auto& obs : dictionary) {
    if (obs.momentum_degree() == 0 && leaks == 0) {
      // phi = w(x,t) on the support: every momentum derivative vanishes
      // there and the identity degenerates to the stationarity residual,
      // so route it through the same grid-side code path.
      TestFunction w;
      w.label = obs.label();
      const MuObservable* po = &obs;
      w.value = [po](const double* x, double t) {
        const double p0[2] = {0.0, 0.0};
        return po->eval(x, t, p0).value;
      };
      w.dt = [po](const double* x, double t) {
        const double p0[2] = {0.0, 0.0};
        return po->eval(x, t, p0).dt;
      };
      w.grad_x = [po](const double* x, double t, double* g) {
        const double p0[2] = {0.0, 0.0};
        const MuObservableEval e = po->eval(x, t, p0);
        g[0] = e.dx[0];
        g[1] = e.dx[1];
      };
      w.lap_x = [po](const double* x, double t) {
        const double p0[2] = {0.0, 0.0};
        return po->eval(x, t, p0).lap_x;
      };
      const double din2 = generator_residual(theta_rec, cell.drift, cell.eps, w);
      std::vector<double> lap_terms(theta_rec.values.size());
      double x[2];
      double t = 0.0;
      for (std::size_t i = 0; i < theta_rec.values.size(); ++i) {
        cell.phi.grid.node_coords(i, x, t);
        lap_terms[i] = theta_rec.values[i] * w.lap_x(x, t);
      }
      const double Ieps = cell.eps * mean(lap_terms);
      const double idenmat = din2 - Ieps;
      rep.rows.push_back(info_row("din2[" + obs.label() + "]", din2));
      rep.rows.push_back(info_row("idenmat[" + obs.label() + "]", idenmat));
      din2_max = std::max(din2_max, std::abs(din2));
      idenmat_max = std::max(idenmat_max, std::abs(idenmat));
      eps_term_max = std::max(eps_term_max, std::abs(Ieps));
      continue;
    }
    for (std::size_t i = 0; i < np; ++i) {
      const Particle& pt = mu.particles[i];
      const std::size_t node = pt.node;
      const HamiltonianBundle bun = cell.spec->eval(pt.x.data(), pt.p.data(), pt.t);
      const MuObservableEval e = obs.eval(pt.x.data(), pt.t, pt.p.data());
      double pois = 0.0;
      for (int k = 0; k < d; ++k) pois += bun.dp[k] * e.dx[k] - bun.dx[k] * e.dp[k];
      double cross = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          cross += cell.hess_phi[static_cast<std::size_t>(a) * d + b].values[node] *
                   e.dxp[a * d + b];
      t1[i] = pt.w * (e.dt + pois);
      t2[i] = pt.w * (e.lap_x + 2.0 * cross);
      double mterm = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          mterm += dissipation.weights[static_cast<std::size_t>(a) * d + b][i] *
                   e.dpp[a * d + b];
      t3[i] = mterm;
    }
    const double I1 = pairwise_sum(t1);
    const double Ieps = cell.eps * pairwise_sum(t2);
    const double Im = pairwise_sum(t3);
    const double din2 = I1 + Ieps + Im;
    const double idenmat = I1 + Im;
    rep.rows.push_back(info_row("din2[" + obs.label() + "]", din2));
    rep.rows.push_back(info_row("idenmat[" + obs.label() + "]", idenmat));
    din2_max = std::max(din2_max, std::abs(din2));
    idenmat_max = std::max(idenmat_max, std::abs(idenmat));
    eps_term_max = std::max(eps_term_max, std::abs(Ieps));
  }

  rep.rows.push_back(
      equality_abs_row("din2_max", din2_max, 0.0, tol.din2_abs * tol.scale));
  rep.rows.push_back(info_row("idenmat_max", idenmat_max));
  rep.rows.push_back(info_row("eps_term_max", eps_term_max));
  return rep;
}

VerificationReport vanishing_viscosity_report(const std::vector<SweepStage>& stages,
                                              const std::vector<MuObservable>& dictionary,
                                              const VerifyTolerances& tol) {
  VerificationReport rep;
  rep.context = "vanishing_viscosity";
  if (stages.empty()) return rep;
  const int d = stages[0].cell->phi.grid.d;

  for (const auto& st : stages)
    rep.rows.push_back(info_row("hbar_" + eps_tag(st.eps), st.cell->hbar));
  for (std::size_t r = 0; r + 1 < stages.size(); ++r)
    rep.rows.push_back(info_row("hbar_diff_" + eps_tag(stages[r + 1].eps),
                                std::abs(stages[r + 1].cell->hbar - stages[r].cell->hbar)));

  // dictionary expectations along the sweep; successive max differences
  // should shrink toward the small-eps end
  std::vector<std::vector<double>> expect(stages.size());
  for (std::size_t r = 0; r < stages.size(); ++r) {
    expect[r].reserve(dictionary.size());
    for (const auto& obs : dictionary) expect[r].push_back(expectation(*stages[r].mu, obs));
  }
  std::vector<double> diffs;
  for (std::size_t r = 0; r + 1 < stages.size(); ++r) {
    double worst = 0.0;
    for (std::size_t i = 0; i < dictionary.size(); ++i)
      worst = std::max(worst, std::abs(expect[r + 1][i] - expect[r][i]));
    diffs.push_back(worst);
    rep.rows.push_back(
        info_row("expectation_diff_max_" + eps_tag(stages[r + 1].eps), worst));
  }
  if (diffs.size() >= 2) {
    double worst_growth = -1e300;
    for (std::size_t r = diffs.size() >= 3 ? diffs.size() - 3 : 0;
         r + 1 < diffs.size(); ++r)
      worst_growth = std::max(worst_growth, diffs[r + 1] - 1.1 * diffs[r]);
    // absolute allowance covers sweeps whose expectations already agree at
    // summation noise, where successive differences stop shrinking
    rep.rows.push_back(upper_bound_row("expectation_cauchy_tail", worst_growth, 0.0, 1e-12));
  }

  for (const auto& st : stages) {
    double frob = 0.0;
    for (int a = 0; a < d * d; ++a)
      frob += st.dissipation->total_mass[a] * st.dissipation->total_mass[a];
    rep.rows.push_back(
        info_row("dissipation_mass_" + eps_tag(st.eps), std::sqrt(frob)));
  }

  // convex specs at P = 0: the Legendre action integral matches -hbar in
  // the vanishing-viscosity limit
  bool at_zero = true;
  for (double pc : stages[0].cell->P) at_zero = at_zero && std::abs(pc) < 1e-14;
  if (stages[0].cell->spec->convex() && at_zero) {
    std::vector<double> action(stages.size());
    for (std::size_t r = 0; r < stages.size(); ++r) {
      const GraphMeasure& mu = *stages[r].mu;
      std::vector<double> terms(mu.particles.size());
      for (std::size_t i = 0; i < mu.particles.size(); ++i) {
        const Particle& pt = mu.particles[i];
        const HamiltonianBundle bun =
            stages[r].cell->spec->eval(pt.x.data(), pt.p.data(), pt.t);
        double pdp = 0.0;
        for (int k = 0; k < d; ++k) pdp += pt.p[k] * bun.dp[k];
        terms[i] = pt.w * (pdp - bun.h);
      }
      action[r] = std::abs(pairwise_sum(terms) + stages[r].cell->hbar);
      rep.rows.push_back(info_row("action_" + eps_tag(stages[r].eps), action[r]));
    }
    // gate at eps = 0.025 when present, otherwise the second-smallest eps
    std::size_t gate = stages.size() >= 2 ? stages.size() - 2 : 0;
    for (std::size_t r = 0; r < stages.size(); ++r)
      if (std::abs(stages[r].eps - 0.025) < 1e-12) gate = r;
    rep.rows.push_back(upper_bound_row("action_tail", action[gate], 0.0,
                                       tol.action_abs * tol.scale));
    if (stages.size() >= 3) {
      double worst_growth = -1e300;
      for (std::size_t r = stages.size() - 3; r + 1 < stages.size(); ++r)
        worst_growth = std::max(worst_growth, action[r + 1] - action[r]);
      rep.rows.push_back(
          upper_bound_row("action_monotone_tail", worst_growth, 0.0, 0.005));
    }
  }
  return rep;
}

VerificationReport adjoint_sweep_report(const std::vector<double>& eps_list,
                                        const std::vector<VerificationReport>& adjoint_reports,
                                        const VerifyTolerances& tol) {
  if (eps_list.size() != adjoint_reports.size() || eps_list.size() < 3)
    throw std::invalid_argument("adjoint sweep needs >= 3 aligned reports");
  VerificationReport rep;
  rep.context = "adjoint_sweep";
  std::vector<double> idenmat(eps_list.size()), eterm(eps_list.size());
  for (std::size_t r = 0; r < eps_list.size(); ++r) {
    const CheckRow* im = adjoint_reports[r].find("idenmat_max");
    const CheckRow* et = adjoint_reports[r].find("eps_term_max");
    if (im == nullptr || et == nullptr)
      throw std::invalid_argument("adjoint report missing aggregate rows");
    idenmat[r] = im->lhs;
    eterm[r] = et->lhs;
    rep.rows.push_back(info_row("idenmat_max_" + eps_tag(eps_list[r]), idenmat[r]));
    rep.rows.push_back(info_row("eps_term_max_" + eps_tag(eps_list[r]), eterm[r]));
  }

  // tail of the sweep: eps <= 0.1 (the largest eps sits outside the
  // asymptotic regime on coarse grids and may carry a physical hump)
  std::vector<std::size_t> tail;
  for (std::size_t r = 0; r < eps_list.size(); ++r)
    if (eps_list[r] <= 0.1 + 1e-12) tail.push_back(r);
  if (tail.size() >= 2) {
    double worst_growth = -1e300;
    for (std::size_t q = 0; q + 1 < tail.size(); ++q)
      worst_growth =
          std::max(worst_growth, idenmat[tail[q + 1]] - idenmat[tail[q]]);
    rep.rows.push_back(
        upper_bound_row("idenmat_tail_monotone", worst_growth, 0.0, 1e-12));
  }
  if (tail.size() >= 2) {
    double tail_max = 0.0;
    for (std::size_t q : tail) tail_max = std::max(tail_max, eterm[q]);
    if (tail_max <= 1e-13) {
      // nothing left to decay: the eps terms sit at summation noise, so the
      // rate requirement is met by arrival and a log-log fit of noise would
      // report a meaningless slope
      rep.rows.push_back(upper_bound_row("eps_term_floor", tail_max, 1e-13, 0.0));
    } else {
      // least-squares log-log slope of the eps-term magnitudes over the tail
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      for (std::size_t q : tail) {
        const double lx = std::log(eps_list[q]);
        const double ly = std::log(std::max(eterm[q], kTiny));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      const double n = static_cast<double>(tail.size());
      const double rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      rep.rows.push_back(lower_bound_row("eps_term_rate", rate, 0.5, 0.0));
    }
  }
  (void)tol;
  return rep;
}

} // namespace mather
