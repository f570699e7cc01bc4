#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "matherlab/numerics.hpp"

using namespace mather;

namespace {

// dense Gaussian elimination with partial pivoting, reference for the
// cyclic tridiagonal kernels
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (std::size_t k = col; k < n; ++k) A[r][k] -= f * A[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

} // namespace

TEST_CASE("pairwise sum matches extended precision and is deterministic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(1001);
  long double acc = 0.0L;
  for (double& x : v) {
    x = u(rng) * std::pow(10.0, static_cast<int>(u(rng) * 6));
    acc += static_cast<long double>(x);
  }
  const double s1 = pairwise_sum(v);
  const double s2 = pairwise_sum(v);
  CHECK(s1 == s2);
  CHECK(std::abs(s1 - static_cast<double>(acc)) <=
        1e-12 * std::max(1.0, std::abs(static_cast<double>(acc))) + 1e-9);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{3.5}) == 3.5);
}

TEST_CASE("mean of a constant vector is the constant") {
  std::vector<double> v(17, 0.3125);
  CHECK(mean(v) == doctest::Approx(0.3125).epsilon(1e-15));
}

TEST_CASE("cyclic tridiagonal solve agrees with a dense reference") {
  const std::size_t n = 12;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(n), b(n), c(n), r(n), r0(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = 0.3 * u(rng);
    c[i] = 0.3 * u(rng);
    b[i] = 2.0 + std::abs(u(rng)); // diagonally dominant
    r0[i] = u(rng);
  }
  r = r0;
  std::vector<double> work(4 * n);
  solve_cyclic_tridiagonal(a, b, c, r, work);

  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    A[i][i] = b[i];
    A[i][(i + n - 1) % n] += a[i];
    A[i][(i + 1) % n] += c[i];
  }
  const auto x = dense_solve(A, r0);
  for (std::size_t i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-11));
}

TEST_CASE("constant-coefficient cyclic operator matches the general kernel") {
  const std::size_t n = 16;
  const double diag = 3.7, off = -0.9;
  CyclicTridiagonal op(n, diag, off);
  std::vector<double> rhs(n), general(n);
  for (std::size_t i = 0; i < n; ++i)
    rhs[i] = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(n)) + 0.1;
  general = rhs;
  std::vector<double> a(n, off), b(n, diag), c(n, off), work(4 * n);
  solve_cyclic_tridiagonal(a, b, c, general, work);

  std::vector<double> x = rhs;
  op.solve(x.data());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(x[i] == doctest::Approx(general[i]).epsilon(1e-12));

  // strided solve: three interleaved copies give identical bits per lane
  std::vector<double> inter(3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t lane = 0; lane < 3; ++lane) inter[3 * i + lane] = rhs[i];
  for (std::size_t lane = 0; lane < 3; ++lane) op.solve(inter.data() + lane, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t lane = 0; lane < 3; ++lane) CHECK(inter[3 * i + lane] == x[i]);
}

TEST_CASE("cyclic solve reproduces the residual identity") {
  const std::size_t n = 9;
  CyclicTridiagonal op(n, 5.0, 1.3);
  std::vector<double> rhs(n), x(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = std::cos(kTwoPi * (3.0 * i) / n);
  x = rhs;
  op.solve(x.data());
  for (std::size_t i = 0; i < n; ++i) {
    const double lhs = 1.3 * x[(i + n - 1) % n] + 5.0 * x[i] + 1.3 * x[(i + 1) % n];
    CHECK(lhs == doctest::Approx(rhs[i]).epsilon(1e-12));
  }
}

TEST_CASE("spectral line derivative is exact on band-limited samples") {
  const std::size_t n = 16;
  std::vector<double> f(n), d1(n), d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n);
    f[i] = std::sin(kTwoPi * s) + 0.5 * std::cos(2.0 * kTwoPi * s);
  }
  spectral_derivative_line(f, 1, d1);
  spectral_derivative_line(f, 2, d2);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n);
    const double e1 = kTwoPi * std::cos(kTwoPi * s) - kTwoPi * std::sin(2.0 * kTwoPi * s);
    const double e2 = -kTwoPi * kTwoPi * std::sin(kTwoPi * s) -
                      2.0 * kTwoPi * kTwoPi * std::cos(2.0 * kTwoPi * s);
    CHECK(d1[i] == doctest::Approx(e1).epsilon(1e-11));
    CHECK(d2[i] == doctest::Approx(e2).epsilon(1e-11));
  }
}

TEST_CASE("full-precision formatting round-trips bitwise") {
  for (double x : {0.1, 1.0 / 3.0, 0.0125, -1e-300, 6.02e23, -0.0, 123456789.123456789}) {
    const std::string s = format_full(x);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::signbit(back) == std::signbit(x));
    CHECK(back == x);
  }
}

TEST_CASE("shortest formatting round-trips and stays short") {
  CHECK(format_shortest(0.5) == "0.5");
  CHECK(format_shortest(-2.0) == "-2");
  const double x = 0.1 + 0.2;
  CHECK(std::strtod(format_shortest(x).c_str(), nullptr) == x);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(hex64(0x1ULL) == "0000000000000001");
}
