#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace mather {

// Smooth test function on the space-time torus with analytic derivatives.
struct TestFunction {
  std::string label;
  std::function<double(const double* x, double t)> value;
  std::function<double(const double* x, double t)> dt;
  std::function<void(const double* x, double t, double* g)> grad_x;
  std::function<double(const double* x, double t)> lap_x;
};

// Fourier dictionary trig(2*pi*(k.x + m*t)) with |k|_inf <= k_max and
// |m| <= m_max, one representative per +-(k, m) pair and no constant.
// Sizes: d=1, k_max=m_max=2 gives 24 rows; d=2 gives 124.
std::vector<TestFunction> fourier_test_functions(int d, int k_max, int m_max);

struct MuObservableEval {
  double value = 0.0;
  double dt = 0.0;
  double lap_x = 0.0;
  std::array<double, 2> dx{};  // d/dx_i
  std::array<double, 2> dp{};  // d/dp_i
  std::array<double, 4> dxp{}; // d^2/dx_i dp_j, row-major d*d
  std::array<double, 4> dpp{}; // d^2/dp_i dp_j, row-major d*d
};

// Compactly supported phase-space observable
//   phi(x, t, p) = w(x, t) * q(p) * chi(|p|)
// with w a Fourier mode (or 1), q a momentum monomial of degree <= 2, and
// chi a C^2 radial cutoff: identically 1 for |p| <= flat_radius, a reversed
// quintic smoothstep on [flat_radius, 2*flat_radius], zero beyond. Inside
// the flat region the observable coincides with w*q, so moments computed
// against measures supported there are undistorted.
class MuObservable {
public:
  // qa, qb in {-1, 0, .., d-1}: q = 1 (qa = qb = -1), q = p_qa (qb = -1),
  // or q = p_qa * p_qb. Pass k = {0, 0}, m = 0, use_sin = false for w = 1.
  MuObservable(int d, std::array<int, 2> k, int m, bool use_sin, int qa, int qb,
               double flat_radius);

  const std::string& label() const { return label_; }
  int dim() const { return d_; }
  double flat_radius() const { return flat_; }
  double cutoff_radius() const { return 2.0 * flat_; }
  int momentum_degree() const { return degree_; }

  MuObservableEval eval(const double* x, double t, const double* p) const;

private:
  int d_;
  std::array<int, 2> k_;
  int m_;
  bool use_sin_;
  bool constant_w_;
  int qa_, qb_;
  int degree_;
  double flat_;
  std::string label_;
};

// Full dictionary: ({1} union modes with |k|_inf <= 1, |m| <= 1) times all
// momentum monomials of degree <= 2. 27 observables in d=1, 162 in d=2.
std::vector<MuObservable> mu_observable_dictionary(int d, double flat_radius);

} // namespace mather
