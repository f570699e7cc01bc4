#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mather {

inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kTwoPi = 2.0 * kPi;

// Fixed-order pairwise summation. The reduction tree depends only on the
// length, so a given value sequence always produces the same bits; error
// grows like O(log n) instead of O(n).
double pairwise_sum(std::span<const double> v);

double mean(std::span<const double> v);

// Solves the cyclic tridiagonal system
//   a[i]*x[i-1] + b[i]*x[i] + c[i]*x[i+1] = r[i]   (indices mod n)
// in place via the Sherman-Morrison rank-one correction. `work` must hold
// at least 4*n doubles. Requires n >= 3 and a diagonally dominant system.
void solve_cyclic_tridiagonal(std::span<const double> a,
                              std::span<const double> b,
                              std::span<const double> c,
                              std::span<double> r,
                              std::span<double> work);

// Constant-coefficient cyclic tridiagonal operator diag(b) + off-diagonal o
// with periodic corners. Factored once, then solved many times, optionally
// on strided data (2D lines).
class CyclicTridiagonal {
public:
  CyclicTridiagonal(std::size_t n, double diag, double off);

  std::size_t size() const { return n_; }
  double diag() const { return diag_; }
  double off() const { return off_; }

  // Solves A x = rhs in place; stride addresses x[0], x[stride], ...
  void solve(double* x, std::size_t stride = 1) const;

private:
  std::size_t n_;
  double diag_, off_;
  double gamma_;
  double vn_;               // last component of the correction vector v
  double denom_;            // 1 + v.z for the Sherman-Morrison update
  std::vector<double> cp_;  // precomputed forward-elimination multipliers
  std::vector<double> inv_; // precomputed reciprocal pivots
  std::vector<double> z_;   // solve of the rank-one column, reused every call
  mutable std::vector<double> buf_;
};

// Forward DFT-based spectral derivative of a periodic sample; order 1 gives
// the first derivative, order 2 the second. Exact on band-limited data.
// O(n^2), intended for smooth-field checks, not production stepping.
void spectral_derivative_line(std::span<const double> f, int order,
                              std::span<double> out);

// Prints a double with enough digits to round-trip exactly (%.17g).
std::string format_full(double x);

// Shortest decimal that round-trips (std::to_chars).
std::string format_shortest(double x);

// FNV-1a 64-bit hash, used for config and artifact fingerprints.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

} // namespace mather
