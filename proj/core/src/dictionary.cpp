#include "matherlab/dictionary.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "matherlab/numerics.hpp"

namespace mather {

namespace {

double wrap01(double u) { return u - std::floor(u); }

std::string mode_label(int d, const std::array<int, 2>& k, int m, bool use_sin) {
  std::ostringstream os;
  os << (use_sin ? "sin" : "cos") << "[k=" << k[0];
  if (d == 2) os << "," << k[1];
  os << ",m=" << m << "]";
  return os.str();
}

TestFunction make_mode(int d, std::array<int, 2> k, int m, bool use_sin) {
  TestFunction f;
  f.label = mode_label(d, k, m, use_sin);
  const double k0 = k[0], k1 = k[1], mm = m;
  const double knorm2 = kTwoPi * kTwoPi * (k0 * k0 + k1 * k1);
  auto phase = [d, k0, k1, mm](const double* x, double t) {
    double th = k0 * x[0] + mm * t;
    if (d == 2) th += k1 * x[1];
    return kTwoPi * wrap01(th);
  };
  if (use_sin) {
    f.value = [phase](const double* x, double t) { return std::sin(phase(x, t)); };
    f.dt = [phase, mm](const double* x, double t) {
      return kTwoPi * mm * std::cos(phase(x, t));
    };
    f.grad_x = [phase, d, k0, k1](const double* x, double t, double* g) {
      const double c = std::cos(phase(x, t));
      g[0] = kTwoPi * k0 * c;
      if (d == 2) g[1] = kTwoPi * k1 * c;
    };
    f.lap_x = [phase, knorm2](const double* x, double t) {
      return -knorm2 * std::sin(phase(x, t));
    };
  } else {
    f.value = [phase](const double* x, double t) { return std::cos(phase(x, t)); };
    f.dt = [phase, mm](const double* x, double t) {
      return -kTwoPi * mm * std::sin(phase(x, t));
    };
    f.grad_x = [phase, d, k0, k1](const double* x, double t, double* g) {
      const double s = std::sin(phase(x, t));
      g[0] = -kTwoPi * k0 * s;
      if (d == 2) g[1] = -kTwoPi * k1 * s;
    };
    f.lap_x = [phase, knorm2](const double* x, double t) {
      return -knorm2 * std::cos(phase(x, t));
    };
  }
  return f;
}

// One representative per +-(k, m) pair: first nonzero of (k_1, k_2, m) must
// be positive.
bool half_space(int d, const std::array<int, 2>& k, int m) {
  if (k[0] != 0) return k[0] > 0;
  if (d == 2 && k[1] != 0) return k[1] > 0;
  return m > 0;
}

} // namespace

std::vector<TestFunction> fourier_test_functions(int d, int k_max, int m_max) {
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");
  std::vector<TestFunction> out;
  for (int k0 = -k_max; k0 <= k_max; ++k0)
    for (int k1 = (d == 2 ? -k_max : 0); k1 <= (d == 2 ? k_max : 0); ++k1)
      for (int m = -m_max; m <= m_max; ++m) {
        const std::array<int, 2> k{k0, k1};
        if (!half_space(d, k, m)) continue;
        out.push_back(make_mode(d, k, m, false));
        out.push_back(make_mode(d, k, m, true));
      }
  return out;
}

MuObservable::MuObservable(int d, std::array<int, 2> k, int m, bool use_sin, int qa,
                           int qb, double flat_radius)
    : d_(d), k_(k), m_(m), use_sin_(use_sin),
      constant_w_(k[0] == 0 && (d == 1 || k[1] == 0) && m == 0), qa_(qa), qb_(qb),
      degree_((qa >= 0 ? 1 : 0) + (qb >= 0 ? 1 : 0)), flat_(flat_radius) {
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (!(flat_radius > 0.0)) throw std::invalid_argument("flat radius must be positive");
  if (qb >= 0 && qa < 0) throw std::invalid_argument("qb set without qa");
  if (qa >= d || qb >= d) throw std::invalid_argument("momentum index out of range");
  std::ostringstream os;
  os << (constant_w_ ? std::string("1") : mode_label(d, k, m, use_sin));
  os << "*";
  if (qa_ < 0)
    os << "1";
  else if (qb_ < 0)
    os << "p" << qa_ + 1;
  else
    os << "p" << qa_ + 1 << "p" << qb_ + 1;
  label_ = os.str();
}

MuObservableEval MuObservable::eval(const double* x, double t, const double* p) const {
  // w block
  double w, wt, lapw;
  double wx[2] = {0.0, 0.0};
  if (constant_w_) {
    w = 1.0;
    wt = 0.0;
    lapw = 0.0;
  } else {
    double th = k_[0] * x[0] + static_cast<double>(m_) * t;
    if (d_ == 2) th += k_[1] * x[1];
    th = kTwoPi * wrap01(th);
    const double c = std::cos(th);
    const double s = std::sin(th);
    const double knorm2 = kTwoPi * kTwoPi * (k_[0] * k_[0] + k_[1] * k_[1]);
    if (use_sin_) {
      w = s;
      wt = kTwoPi * m_ * c;
      for (int i = 0; i < d_; ++i) wx[i] = kTwoPi * k_[i] * c;
      lapw = -knorm2 * s;
    } else {
      w = c;
      wt = -kTwoPi * m_ * s;
      for (int i = 0; i < d_; ++i) wx[i] = -kTwoPi * k_[i] * s;
      lapw = -knorm2 * c;
    }
  }

  // q block: value, gradient, Hessian of the momentum monomial
  double q = 1.0;
  double qd[2] = {0.0, 0.0};
  double qh[4] = {0.0, 0.0, 0.0, 0.0};
  if (qa_ >= 0 && qb_ < 0) {
    q = p[qa_];
    qd[qa_] = 1.0;
  } else if (qa_ >= 0) {
    q = p[qa_] * p[qb_];
    if (qa_ == qb_) {
      qd[qa_] = 2.0 * p[qa_];
      qh[qa_ * d_ + qa_] = 2.0;
    } else {
      qd[qa_] = p[qb_];
      qd[qb_] = p[qa_];
      qh[qa_ * d_ + qb_] = 1.0;
      qh[qb_ * d_ + qa_] = 1.0;
    }
  }

  // radial cutoff block
  double r2 = p[0] * p[0];
  if (d_ == 2) r2 += p[1] * p[1];
  const double r = std::sqrt(r2);
  double chi = 1.0, dchi = 0.0, d2chi = 0.0;
  if (r >= 2.0 * flat_) {
    chi = 0.0;
  } else if (r > flat_) {
    const double u = (r - flat_) / flat_;
    const double s5 = ((6.0 * u - 15.0) * u + 10.0) * u * u * u;
    const double s5p = ((30.0 * u - 60.0) * u + 30.0) * u * u;
    const double s5pp = ((120.0 * u - 180.0) * u + 60.0) * u;
    chi = 1.0 - s5;
    dchi = -s5p / flat_;
    d2chi = -s5pp / (flat_ * flat_);
  }

  // g(p) = q(p) * chi(|p|) and its derivatives; the radial terms vanish in
  // the flat region so r = 0 never divides.
  double g = q * chi;
  double gd[2] = {0.0, 0.0};
  double gh[4] = {0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < d_; ++i) gd[i] = qd[i] * chi;
  for (int i = 0; i < d_ * d_; ++i) gh[i] = qh[i] * chi;
  if (dchi != 0.0 || d2chi != 0.0) {
    for (int i = 0; i < d_; ++i) gd[i] += q * dchi * p[i] / r;
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        double term = qd[i] * dchi * p[j] / r + qd[j] * dchi * p[i] / r;
        term += q * (d2chi * p[i] * p[j] / r2 +
                     dchi * ((i == j ? 1.0 : 0.0) / r - p[i] * p[j] / (r2 * r)));
        gh[i * d_ + j] += term;
      }
  }

  MuObservableEval e;
  e.value = w * g;
  e.dt = wt * g;
  e.lap_x = lapw * g;
  for (int i = 0; i < d_; ++i) {
    e.dx[i] = wx[i] * g;
    e.dp[i] = w * gd[i];
    for (int j = 0; j < d_; ++j) {
      e.dxp[i * d_ + j] = wx[i] * gd[j];
      e.dpp[i * d_ + j] = w * gh[i * d_ + j];
    }
  }
  return e;
}

std::vector<MuObservable> mu_observable_dictionary(int d, double flat_radius) {
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");
  std::vector<std::array<int, 2>> qs; // (qa, qb) pairs, -1 meaning absent
  qs.push_back({-1, -1});
  for (int a = 0; a < d; ++a) qs.push_back({a, -1});
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) qs.push_back({a, b});

  std::vector<MuObservable> out;
  for (const auto& q : qs)
    out.emplace_back(d, std::array<int, 2>{0, 0}, 0, false, q[0], q[1], flat_radius);
  for (int k0 = -1; k0 <= 1; ++k0)
    for (int k1 = (d == 2 ? -1 : 0); k1 <= (d == 2 ? 1 : 0); ++k1)
      for (int m = -1; m <= 1; ++m) {
        const std::array<int, 2> k{k0, k1};
        if (!half_space(d, k, m)) continue;
        for (bool use_sin : {false, true})
          for (const auto& q : qs)
            out.emplace_back(d, k, m, use_sin, q[0], q[1], flat_radius);
      }
  return out;
}

} // namespace mather
