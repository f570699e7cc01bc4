#include "matherlab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "matherlab/numerics.hpp"

namespace mather {

namespace {

inline double wrap01(double u) { return u - std::floor(u); }

void check_params(const std::map<std::string, double>& given,
                  std::initializer_list<const char*> known) {
  for (const auto& [k, v] : given) {
    (void)v;
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* s) { return k == s; }) == known.end())
      throw std::invalid_argument("unknown parameter '" + k + "'");
  }
}

double get(const std::map<std::string, double>& params, const std::string& key,
           double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

class FreeQuadratic final : public Hamiltonian {
public:
  explicit FreeQuadratic(std::map<std::string, double> params)
      : Hamiltonian("free", 1, true, 0.0, std::move(params)) {
    check_params(params_, {"d"});
    d_ = static_cast<int>(get(params_, "d", 1.0));
    if (d_ != 1 && d_ != 2) throw std::invalid_argument("free: d must be 1 or 2");
  }
  HamiltonianBundle eval(const double*, const double* p, double) const override {
    HamiltonianBundle b;
    for (int i = 0; i < d_; ++i) {
      b.h += 0.5 * p[i] * p[i];
      b.dp[i] = p[i];
      b.dpp[i * d_ + i] = 1.0;
    }
    return b;
  }
};

class TimeLinear final : public Hamiltonian {
public:
  explicit TimeLinear(std::map<std::string, double> params)
      : Hamiltonian("time_linear", 1, true, 0.0, std::move(params)) {
    check_params(params_, {"c0", "c1", "v0", "v1"});
    c0_ = get(params_, "c0", 0.0);
    c1_ = get(params_, "c1", 1.0);
    v0_ = get(params_, "v0", 0.0);
    v1_ = get(params_, "v1", 1.0);
  }
  HamiltonianBundle eval(const double*, const double* p, double t) const override {
    const double tw = wrap01(t);
    const double s = std::sin(kTwoPi * tw), c = std::cos(kTwoPi * tw);
    HamiltonianBundle b;
    const double ct = c0_ + c1_ * s;
    b.h = ct * p[0] + v0_ + v1_ * c * c;
    b.dp[0] = ct;
    return b;
  }
  double mean_c() const { return c0_; }
  double mean_v() const { return v0_ + 0.5 * v1_; }

private:
  double c0_, c1_, v0_, v1_;
};

class Pendulum final : public Hamiltonian {
public:
  explicit Pendulum(std::map<std::string, double> params)
      : Hamiltonian("pendulum", 1, true, 0.0, std::move(params)) {
    check_params(params_, {"amplitude", "x_offset"});
    amp_ = get(params_, "amplitude", 1.0);
    x0_ = get(params_, "x_offset", 0.0);
  }
  HamiltonianBundle eval(const double* x, const double* p, double) const override {
    const double u = wrap01(x[0] - x0_);
    const double c = std::cos(kTwoPi * u), s = std::sin(kTwoPi * u);
    HamiltonianBundle b;
    b.h = 0.5 * p[0] * p[0] + amp_ * c;
    b.dx[0] = -kTwoPi * amp_ * s;
    b.dp[0] = p[0];
    b.dpp[0] = 1.0;
    b.dxx[0] = -kTwoPi * kTwoPi * amp_ * c;
    return b;
  }

private:
  double amp_, x0_;
};

class ForcedPendulum final : public Hamiltonian {
public:
  explicit ForcedPendulum(std::map<std::string, double> params)
      : Hamiltonian("forced_pendulum", 1, true, 0.0, std::move(params)) {
    check_params(params_, {"amplitude", "x_offset", "t_offset"});
    amp_ = get(params_, "amplitude", 1.0);
    x0_ = get(params_, "x_offset", 0.0);
    t0_ = get(params_, "t_offset", 0.0);
  }
  HamiltonianBundle eval(const double* x, const double* p, double t) const override {
    const double u = wrap01(x[0] - x0_);
    const double tw = wrap01(t - t0_);
    const double c = std::cos(kTwoPi * u), s = std::sin(kTwoPi * u);
    const double mod = 1.0 + 0.5 * std::cos(kTwoPi * tw);
    HamiltonianBundle b;
    b.h = 0.5 * p[0] * p[0] + amp_ * c * mod;
    b.dx[0] = -kTwoPi * amp_ * s * mod;
    b.dp[0] = p[0];
    b.dpp[0] = 1.0;
    b.dxx[0] = -kTwoPi * kTwoPi * amp_ * c * mod;
    return b;
  }

private:
  double amp_, x0_, t0_;
};

class DoubleWell final : public Hamiltonian {
public:
  explicit DoubleWell(std::map<std::string, double> params)
      : Hamiltonian("double_well", 1, false, 0.0, std::move(params)) {
    check_params(params_, {"x_offset"});
    x0_ = get(params_, "x_offset", 0.0);
  }
  HamiltonianBundle eval(const double* x, const double* p, double) const override {
    const double u = wrap01(x[0] - x0_);
    const double c = std::cos(kTwoPi * u), s = std::sin(kTwoPi * u);
    const double q = p[0] * p[0] - 1.0;
    HamiltonianBundle b;
    b.h = q * q - c;
    b.dx[0] = kTwoPi * s;
    b.dp[0] = 4.0 * p[0] * q;
    b.dpp[0] = 12.0 * p[0] * p[0] - 4.0;
    b.dxx[0] = kTwoPi * kTwoPi * c;
    return b;
  }

private:
  double x0_;
};

class Smoothed2d final : public Hamiltonian {
public:
  explicit Smoothed2d(std::map<std::string, double> params)
      : Hamiltonian("smoothed2d", 2, false, 0.1, std::move(params)) {
    check_params(params_, {"delta", "amplitude", "x1_offset", "x2_offset", "t_offset"});
    delta_ = get(params_, "delta", 0.1);
    if (delta_ <= 0.0) throw std::invalid_argument("smoothed2d: delta must be positive");
    amp_ = get(params_, "amplitude", 1.0);
    x10_ = get(params_, "x1_offset", 0.0);
    x20_ = get(params_, "x2_offset", 0.0);
    t0_ = get(params_, "t_offset", 0.0);
  }
  HamiltonianBundle eval(const double* x, const double* p, double t) const override {
    const double u1 = wrap01(x[0] - x10_), u2 = wrap01(x[1] - x20_);
    const double tw = wrap01(t - t0_);
    const double c1 = std::cos(kTwoPi * u1), s1 = std::sin(kTwoPi * u1);
    const double c2 = std::cos(kTwoPi * u2), s2 = std::sin(kTwoPi * u2);
    const double mod = 1.0 + 0.5 * std::cos(kTwoPi * tw);

    const double r1 = std::sqrt(p[0] * p[0] + delta_ * delta_);
    const double r2 = std::sqrt(p[1] * p[1] + delta_ * delta_);

    HamiltonianBundle b;
    b.h = r1 - r2 + amp_ * c1 * c2 * mod;
    b.dp[0] = p[0] / r1;
    b.dp[1] = -p[1] / r2;
    // d^2/dp^2 of sqrt(p^2 + delta^2) = delta^2 / r^3
    b.dpp[0] = delta_ * delta_ / (r1 * r1 * r1);
    b.dpp[3] = -delta_ * delta_ / (r2 * r2 * r2);
    b.dx[0] = -kTwoPi * amp_ * s1 * c2 * mod;
    b.dx[1] = -kTwoPi * amp_ * c1 * s2 * mod;
    b.dxx[0] = -kTwoPi * kTwoPi * amp_ * c1 * c2 * mod;
    b.dxx[3] = -kTwoPi * kTwoPi * amp_ * c1 * c2 * mod;
    b.dxx[1] = kTwoPi * kTwoPi * amp_ * s1 * s2 * mod;
    b.dxx[2] = b.dxx[1];
    return b;
  }

private:
  double amp_, x10_, x20_, t0_;
};

} // namespace

HamiltonianPtr make_hamiltonian(const std::string& name,
                                const std::map<std::string, double>& params) {
  if (name == "free") return std::make_shared<FreeQuadratic>(params);
  if (name == "time_linear") return std::make_shared<TimeLinear>(params);
  if (name == "pendulum") return std::make_shared<Pendulum>(params);
  if (name == "forced_pendulum") return std::make_shared<ForcedPendulum>(params);
  if (name == "double_well") return std::make_shared<DoubleWell>(params);
  if (name == "smoothed2d") return std::make_shared<Smoothed2d>(params);
  throw std::invalid_argument("unknown catalog entry '" + name + "'");
}

std::vector<std::string> catalog_names() {
  return {"free", "time_linear", "pendulum", "forced_pendulum", "double_well", "smoothed2d"};
}

GrowthReport growth_report(const Hamiltonian& spec, std::span<const double> radii,
                           int samples_per_shell) {
  if (radii.empty()) throw std::invalid_argument("growth_report: radii empty");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1])
      throw std::invalid_argument("growth_report: radii must increase");

  const int d = spec.dim();
  GrowthReport rep;
  rep.radii.assign(radii.begin(), radii.end());
  rep.radius_max = radii.back();

  // Low-discrepancy (x, t, direction) samples per shell; deterministic.
  for (double r : radii) {
    double worst = 0.0;
    for (int j = 0; j < samples_per_shell; ++j) {
      const double g = static_cast<double>(j);
      double x[2] = {std::fmod(g * 0.7548776662466927, 1.0),
                     std::fmod(g * 0.5698402909980532, 1.0)};
      const double t = std::fmod(g * 0.3247179572447458, 1.0);
      double p[2] = {0.0, 0.0};
      if (d == 1) {
        p[0] = (j % 2 == 0) ? r : -r;
      } else {
        const double ang = kTwoPi * g / samples_per_shell;
        p[0] = r * std::cos(ang);
        p[1] = r * std::sin(ang);
      }
      worst = std::max(worst, std::abs(spec.value(x, p, t)));
    }
    rep.sup_abs_h.push_back(worst);
  }

  // Calibration window: the inner half of the shells. Candidate (a, C)
  // vertices come from pairs of active constraints plus the two axes.
  const std::size_t n = radii.size();
  const std::size_t n_cal = (n + 1) / 2;
  struct Cand { double a, C; };
  std::vector<Cand> cands;
  double max_s = 0.0, max_ratio = 0.0;
  for (std::size_t k = 0; k < n_cal; ++k) {
    max_s = std::max(max_s, rep.sup_abs_h[k]);
    if (radii[k] > 0.0) max_ratio = std::max(max_ratio, rep.sup_abs_h[k] / radii[k]);
    for (std::size_t l = k + 1; l < n_cal; ++l) {
      const double a = (rep.sup_abs_h[l] - rep.sup_abs_h[k]) / (radii[l] - radii[k]);
      const double C = rep.sup_abs_h[k] - a * radii[k];
      cands.push_back({a, C});
    }
  }
  cands.push_back({0.0, max_s});
  cands.push_back({max_ratio, 0.0});

  // Among admissible candidates (nonnegative coefficients dominating the
  // calibration window) keep the one with the largest worst-shell margin.
  // A nonnegative best margin witnesses the affine bound on every shell;
  // when even the best candidate dips below an outer shell the growth is
  // superlinear and no calibrated line can reach it.
  double best = -std::numeric_limits<double>::infinity();
  Cand pick{0.0, max_s};
  const double slack = 1e-12 * std::max(1.0, max_s);
  for (const Cand& c : cands) {
    if (c.a < 0.0 || c.C < 0.0) continue;
    bool ok = true;
    for (std::size_t k = 0; k < n_cal; ++k)
      if (c.a * radii[k] + c.C < rep.sup_abs_h[k] - slack) { ok = false; break; }
    if (!ok) continue;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      margin = std::min(margin, c.a * radii[k] + c.C - rep.sup_abs_h[k]);
    if (margin > best + 1e-15 || (std::abs(margin - best) <= 1e-15 && c.a < pick.a)) {
      best = margin;
      pick = c;
    }
  }

  rep.a = pick.a;
  rep.C = pick.C;
  rep.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
    rep.margin = std::min(rep.margin, rep.a * radii[k] + rep.C - rep.sup_abs_h[k]);
  // binding calibration shells can leave the margin a rounding step below zero
  rep.satisfied = rep.margin >= -slack;
  return rep;
}

LegendreResult legendre(const Hamiltonian& spec, const double* x, const double* v,
                        double t, double p_lo, double p_hi, int n_p) {
  if (!spec.convex())
    throw std::invalid_argument("legendre transform requires a convex catalog entry");
  if (n_p < 3 || p_hi <= p_lo) throw std::invalid_argument("legendre: bad search box");

  const int d = spec.dim();
  const double step = (p_hi - p_lo) / (n_p - 1);

  auto objective = [&](const double* p) {
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += p[i] * v[i];
    return dot - spec.value(x, p, t);
  };

  LegendreResult res;
  double best = -std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  const int nj = (d == 2) ? n_p : 1;
  for (int i = 0; i < n_p; ++i) {
    for (int j = 0; j < nj; ++j) {
      double p[2] = {p_lo + i * step, p_lo + j * step};
      const double val = objective(p);
      if (val > best) {
        best = val;
        bi = i;
        bj = j;
      }
    }
  }
  res.boundary = (bi == 0 || bi == n_p - 1) || (d == 2 && (bj == 0 || bj == n_p - 1));

  // One parabolic refinement per axis around the discrete argmax.
  double p_star[2] = {p_lo + bi * step, p_lo + bj * step};
  if (!res.boundary) {
    for (int axis = 0; axis < d; ++axis) {
      double pA[2] = {p_star[0], p_star[1]};
      double pB[2] = {p_star[0], p_star[1]};
      pA[axis] -= step;
      pB[axis] += step;
      const double fa = objective(pA), fm = objective(p_star), fb = objective(pB);
      const double denom = fa - 2.0 * fm + fb;
      if (denom < -1e-300) {
        double shift = 0.5 * (fa - fb) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        p_star[axis] += shift * step;
      }
    }
  }
  res.value = objective(p_star);
  res.argmax[0] = p_star[0];
  if (d == 2) res.argmax[1] = p_star[1];
  return res;
}

} // namespace mather
