#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matherlab/cell_solver.hpp"
#include "matherlab/dictionary.hpp"

namespace mather {

// Counter-based gaussian stream. A (seed, path, step) triple is hashed with
// the splitmix64 finalizer into two 64-bit words, which Box-Muller turns
// into a gaussian pair. No state is carried between calls, so any thread
// may generate any path's noise and the stream is identical under every
// scheduling.
struct CounterRng {
  static std::uint64_t mix(std::uint64_t z);
  static void gauss_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                         double& g0, double& g1);
};

struct SdeConfig {
  int n_paths = 10000;
  double dt = 1e-3;
  int horizon_periods = 200; // T, whole periods
  int burn_in_periods = 10;  // discarded before averaging
  std::uint64_t seed = 1;
  // Dictionary observables and residual integrands are sampled every this
  // many Euler-Maruyama steps; the state update itself runs every step.
  int observable_stride = 10;
};

// Per-path running sums from one simulation. Slot layout is path-major, so
// results are independent of how paths were scheduled across threads;
// reductions over paths use the fixed pairwise order.
struct TrajectoryBatch {
  SdeConfig cfg;
  int d = 1;
  double eps = 0.0;
  std::vector<double> P;
  std::vector<std::string> labels; // dictionary labels, row order of all slots

  long long total_steps = 0;
  long long burn_steps = 0;
  long long samples_per_path = 0;
  double averaging_time = 0.0; // (total_steps - burn_steps) * dt

  std::vector<double> path_obs_mean; // [path * n_obs + i]: time mean of phi_i
  std::vector<double> path_dyn_gen;  // [path * n_obs + i]: time mean of the generator integrand
  std::vector<double> path_dyn_bnd;  // [path * n_obs + i]: (phi_i(end) - phi_i(start)) / averaging_time

  // graph-momentum increment accumulators per path and axis:
  // sums of (dp_k + H_{x_k} dt) and its square over sampled steps, plus the
  // predicted quadratic variation 2 eps |D^2phi row k|^2 dt
  std::vector<double> path_mom_drift; // [path * d + k]
  std::vector<double> path_mom_var;   // [path * d + k]
  std::vector<double> path_mom_pred;  // [path * d + k]
  long long mom_samples_per_path = 0;

  double max_speed = 0.0;     // sup |p| seen at sample points
  double leak_fraction = 0.0; // fraction of samples beyond the bump flat radius
  std::vector<double> end_x;  // [path * d + k], wrapped
  std::vector<double> end_p;  // [path * d + k]
  double end_t = 0.0;

  std::size_t n_obs() const { return labels.size(); }
};

// Euler-Maruyama on X only: dX = D_pH(X, P + Dphi(X,t), t) dt + sqrt(2 eps) dW,
// with the momentum read off the graph p = P + Dphi by interpolation. The
// p-equation of the coupled system is a consequence of the cell equation
// and is checked through the momentum residual slots, not integrated.
TrajectoryBatch simulate(const CellSolution& cell, const std::vector<MuObservable>& dict,
                         const SdeConfig& cfg);

struct ObservableStat {
  std::string label;
  double mean = 0.0;
  double std_error = 0.0; // across-path standard error of the path means
};

std::vector<ObservableStat> empirical_measure(const TrajectoryBatch& batch);

struct DynkinRow {
  std::string label;
  double boundary = 0.0;  // (1/T) E[phi(end) - phi(start)]
  double generator = 0.0; // (1/T) E integral of the full drift-generator term
  double residual = 0.0;  // |boundary - generator|
  double sigma3 = 0.0;    // 3 standard errors of (boundary - generator)
};

// Pathwise Dynkin identity: along trajectories the expected increment of a
// compactly supported observable equals the expected time integral of
//   phi_t + {H, phi} + eps*lap_x(phi) + 2 eps phi^cell_{x_i x_j} phi_{x_i p_j}
//   + eps phi^cell_{x_i x_k} phi^cell_{x_i x_j} phi_{p_k p_j}.
std::vector<DynkinRow> dynkin_residual(const TrajectoryBatch& batch);

struct MomentumRow {
  int axis = 0;
  double drift_residual = 0.0; // E[dp_k + H_{x_k} dt] / dt
  double drift_sigma3 = 0.0;   // 3 standard errors of the same, scaled by 1/dt
  double variance_ratio = 0.0; // Var(dp_k + H_{x_k} dt) / (2 eps |D^2phi row|^2 dt)
};

std::vector<MomentumRow> momentum_residual(const TrajectoryBatch& batch);

// Per-observable mean, std error and batch metadata, stable key order.
std::string batch_summary_json(const TrajectoryBatch& batch);

} // namespace mather
