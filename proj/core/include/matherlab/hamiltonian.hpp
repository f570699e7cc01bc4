#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mather {

// Value and hand-coded analytic derivatives of H at one (x, p, t). Arrays
// are sized for d <= 2; only the first d (or d*d) entries are meaningful.
struct HamiltonianBundle {
  double h = 0.0;
  std::array<double, 2> dx{};   // D_x H
  std::array<double, 2> dp{};   // D_p H
  std::array<double, 4> dpp{};  // D^2_pp H, row-major, symmetric
  std::array<double, 4> dpx{};  // d/dp_i d/dx_j H, index i*d + j
  std::array<double, 4> dxx{};  // D^2_xx H, row-major, symmetric
};

// A catalog Hamiltonian: smooth, Z^{d+1}-periodic in (x, t), with every
// derivative in closed form. Arguments are wrapped into [0,1) before any
// trigonometry so periodicity holds bitwise.
class Hamiltonian {
public:
  virtual ~Hamiltonian() = default;

  const std::string& name() const { return name_; }
  int dim() const { return d_; }
  bool convex() const { return convex_; }
  double delta() const { return delta_; }
  const std::map<std::string, double>& parameters() const { return params_; }

  virtual HamiltonianBundle eval(const double* x, const double* p, double t) const = 0;

  double value(const double* x, const double* p, double t) const {
    return eval(x, p, t).h;
  }

protected:
  Hamiltonian(std::string name, int d, bool convex, double delta,
              std::map<std::string, double> params)
      : name_(std::move(name)), d_(d), convex_(convex), delta_(delta),
        params_(std::move(params)) {}

  std::string name_;
  int d_;
  bool convex_;
  double delta_;
  std::map<std::string, double> params_;
};

using HamiltonianPtr = std::shared_ptr<const Hamiltonian>;

// Catalog lookup. Unknown names and unknown parameter keys throw
// std::invalid_argument. Catalog:
//   free            H = |p|^2/2                        (d from "d" param, default 1)
//   time_linear     H = c(t) p + V(t), c = c0 + c1 sin(2 pi t),
//                   V = v0 + v1 cos^2(2 pi t)
//   pendulum        H = p^2/2 + A cos(2 pi (x - x_offset))
//   forced_pendulum H = p^2/2 + A cos(2 pi (x - x_offset)) (1 + cos(2 pi (t - t_offset))/2)
//   double_well     H = (p^2 - 1)^2 - cos(2 pi (x - x_offset))
//   smoothed2d      H = sqrt(p1^2 + delta^2) - sqrt(p2^2 + delta^2) + A V(x, t),
//                   V = cos(2 pi (x1 - x1_offset)) cos(2 pi (x2 - x2_offset))
//                       (1 + cos(2 pi (t - t_offset))/2)
HamiltonianPtr make_hamiltonian(const std::string& name,
                                const std::map<std::string, double>& params = {});

std::vector<std::string> catalog_names();

// Result of fitting an affine majorant chi(u) = a u + C (a, C >= 0) to
// sup |H| over momentum shells. Candidates are calibrated to dominate the
// inner half of the shells and the one with the largest worst-shell margin
// is reported, so super-linear Hamiltonians fail on the outer shells no
// matter which calibrated line is chosen.
struct GrowthReport {
  std::string chi_name = "affine";
  double a = 0.0;
  double C = 0.0;
  double margin = 0.0;      // min over shells of chi(|p|) - sup|H|
  double radius_max = 0.0;
  bool satisfied = false;   // margin >= 0
  bool integral_diverges = true; // integral of 1/chi diverges; automatic for affine chi
  std::vector<double> radii;
  std::vector<double> sup_abs_h; // per shell
};

GrowthReport growth_report(const Hamiltonian& spec, std::span<const double> radii,
                           int samples_per_shell);

// Numeric Legendre transform L(x, v, t) = max_p p.v - H(x, p, t) for convex
// catalog entries: brute-force grid search over [p_lo, p_hi]^d followed by
// one parabolic refinement per axis.
struct LegendreResult {
  double value = 0.0;
  std::array<double, 2> argmax{};
  bool boundary = false; // argmax landed on the box edge: box too small
};

LegendreResult legendre(const Hamiltonian& spec, const double* x, const double* v,
                        double t, double p_lo, double p_hi, int n_p);

} // namespace mather
