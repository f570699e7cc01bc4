#include "matherlab/numerics.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

namespace mather {

namespace {

// Recursive halving with a small sequential base case. The split point is a
// pure function of the length, which fixes the reduction tree.
double pairwise_sum_impl(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

} // namespace

double pairwise_sum(std::span<const double> v) {
  return pairwise_sum_impl(v.data(), v.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

void solve_cyclic_tridiagonal(std::span<const double> a,
                              std::span<const double> b,
                              std::span<const double> c,
                              std::span<double> r,
                              std::span<double> work) {
  const std::size_t n = b.size();
  if (n < 3) throw std::invalid_argument("cyclic tridiagonal needs n >= 3");
  if (a.size() != n || c.size() != n || r.size() != n || work.size() < 4 * n)
    throw std::invalid_argument("cyclic tridiagonal size mismatch");

  double* bb = work.data();      // modified diagonal
  double* u = work.data() + n;   // rank-one column
  double* z = work.data() + 2 * n;
  double* cp = work.data() + 3 * n;

  const double gamma = -b[0];
  for (std::size_t i = 0; i < n; ++i) {
    bb[i] = b[i];
    u[i] = 0.0;
  }
  bb[0] = b[0] - gamma;
  bb[n - 1] = b[n - 1] - c[n - 1] * a[0] / gamma;
  u[0] = gamma;
  u[n - 1] = c[n - 1];

  // Thomas elimination applied simultaneously to r and u.
  double piv = bb[0];
  r[0] /= piv;
  z[0] = u[0] / piv;
  cp[0] = c[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = bb[i] - a[i] * cp[i - 1];
    cp[i] = c[i] / piv;
    r[i] = (r[i] - a[i] * r[i - 1]) / piv;
    z[i] = (u[i] - a[i] * z[i - 1]) / piv;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    r[i] -= cp[i] * r[i + 1];
    z[i] -= cp[i] * z[i + 1];
  }

  const double vn = a[0] / gamma;
  const double vy = r[0] + vn * r[n - 1];
  const double vz = z[0] + vn * z[n - 1];
  const double factor = vy / (1.0 + vz);
  for (std::size_t i = 0; i < n; ++i) r[i] -= factor * z[i];
}

CyclicTridiagonal::CyclicTridiagonal(std::size_t n, double diag, double off)
    : n_(n), diag_(diag), off_(off) {
  if (n < 3) throw std::invalid_argument("cyclic tridiagonal needs n >= 3");
  gamma_ = -diag;
  vn_ = off / gamma_;

  cp_.resize(n_);
  inv_.resize(n_);
  z_.resize(n_);
  buf_.resize(n_);

  // Modified diagonal for the Sherman-Morrison split.
  std::vector<double> bb(n_, diag);
  bb[0] = diag - gamma_;
  bb[n_ - 1] = diag - off * off / gamma_;

  double piv = bb[0];
  inv_[0] = 1.0 / piv;
  cp_[0] = off * inv_[0];
  z_[0] = gamma_ * inv_[0];
  for (std::size_t i = 1; i < n_; ++i) {
    piv = bb[i] - off * cp_[i - 1];
    inv_[i] = 1.0 / piv;
    cp_[i] = off * inv_[i];
    const double ui = (i == n_ - 1) ? off : 0.0;
    z_[i] = (ui - off * z_[i - 1]) * inv_[i];
  }
  for (std::size_t i = n_ - 1; i-- > 0;) z_[i] -= cp_[i] * z_[i + 1];
  denom_ = 1.0 + (z_[0] + vn_ * z_[n_ - 1]);
}

void CyclicTridiagonal::solve(double* x, std::size_t stride) const {
  double* y = buf_.data();
  y[0] = x[0] * inv_[0];
  for (std::size_t i = 1; i < n_; ++i)
    y[i] = (x[i * stride] - off_ * y[i - 1]) * inv_[i];
  for (std::size_t i = n_ - 1; i-- > 0;) y[i] -= cp_[i] * y[i + 1];

  const double vy = y[0] + vn_ * y[n_ - 1];
  const double factor = vy / denom_;
  for (std::size_t i = 0; i < n_; ++i)
    x[i * stride] = y[i] - factor * z_[i];
}

void spectral_derivative_line(std::span<const double> f, int order,
                              std::span<double> out) {
  const std::size_t n = f.size();
  if (out.size() != n) throw std::invalid_argument("output size mismatch");
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");

  const double two_pi = kTwoPi;
  std::vector<std::complex<double>> F(n / 2 + 1, {0.0, 0.0});
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = -two_pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      s += f[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    F[k] = s / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double w = two_pi * static_cast<double>(k);
      const double angle = two_pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      const double re = F[k].real(), im = F[k].imag();
      const bool nyquist = (n % 2 == 0) && (k == n / 2);
      if (order == 1) {
        // d/dx of the real signal; the Nyquist mode has no odd derivative.
        if (nyquist) continue;
        acc += 2.0 * w * (-re * std::sin(angle) - im * std::cos(angle));
      } else {
        const double scale = nyquist ? 1.0 : 2.0;
        acc += -scale * w * w * (re * std::cos(angle) - im * std::sin(angle));
      }
    }
    out[j] = acc;
  }
}

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

std::string format_shortest(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

} // namespace mather
