#include "matherlab/sde_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "matherlab/field.hpp"
#include "matherlab/numerics.hpp"

namespace mather {

namespace {

double wrap01(double u) { return u - std::floor(u); }

// Across-path mean and standard error of one strided slot.
void path_stats(const std::vector<double>& slots, std::size_t n_paths, std::size_t width,
                std::size_t slot, double& out_mean, double& out_se) {
  std::vector<double> v(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) v[p] = slots[p * width + slot];
  out_mean = mean(v);
  std::vector<double> sq(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    const double dd = v[p] - out_mean;
    sq[p] = dd * dd;
  }
  const double var = n_paths > 1 ? pairwise_sum(sq) / (n_paths - 1.0) : 0.0;
  out_se = std::sqrt(var / static_cast<double>(n_paths));
}

} // namespace

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void CounterRng::gauss_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                            double& g0, double& g1) {
  const std::uint64_t key = mix(seed ^ 0x9e3779b97f4a7c15ULL);
  const std::uint64_t a =
      mix(key + 0x9e3779b97f4a7c15ULL * (path + 1) + 0xd1b54a32d192ed03ULL * (step + 1));
  const std::uint64_t b = mix(a ^ 0x94d049bb133111ebULL);
  // u1 in (0, 1] keeps the log finite; u2 in [0, 1)
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  g0 = r * std::cos(kTwoPi * u2);
  g1 = r * std::sin(kTwoPi * u2);
}

TrajectoryBatch simulate(const CellSolution& cell, const std::vector<MuObservable>& dict,
                         const SdeConfig& cfg) {
  const PeriodicGrid& grid = cell.phi.grid;
  const int d = grid.d;
  if (cfg.n_paths < 1 || cfg.dt <= 0.0 || cfg.observable_stride < 1)
    throw std::invalid_argument("bad simulation parameters");
  if (cfg.horizon_periods < cfg.burn_in_periods + 10)
    throw std::invalid_argument("horizon must exceed burn-in by at least 10 periods");
  double u_sup = 0.0;
  for (int k = 0; k < d; ++k) u_sup = std::max(u_sup, sup_abs(cell.drift.comp[k]));
  if (cfg.dt > grid.dx() / (2.0 * std::max(u_sup, 1e-12)))
    throw std::invalid_argument("dt too large for this grid and drift (accuracy guard)");
  for (const auto& obs : dict)
    if (obs.dim() != d) throw std::invalid_argument("observable dimension mismatch");

  TrajectoryBatch batch;
  batch.cfg = cfg;
  batch.d = d;
  batch.eps = cell.eps;
  batch.P = cell.P;
  for (const auto& obs : dict) batch.labels.push_back(obs.label());
  const std::size_t n_obs = dict.size();
  const std::size_t n_paths = static_cast<std::size_t>(cfg.n_paths);

  batch.total_steps = std::llround(cfg.horizon_periods / cfg.dt);
  batch.burn_steps = std::llround(cfg.burn_in_periods / cfg.dt);
  const long long total = batch.total_steps;
  const long long burn = batch.burn_steps;
  const long long span = total - burn;
  batch.samples_per_path = (span + cfg.observable_stride - 1) / cfg.observable_stride;
  batch.mom_samples_per_path = batch.samples_per_path; // every sample arms one increment
  batch.averaging_time = static_cast<double>(span) * cfg.dt;

  batch.path_obs_mean.assign(n_paths * n_obs, 0.0);
  batch.path_dyn_gen.assign(n_paths * n_obs, 0.0);
  batch.path_dyn_bnd.assign(n_paths * n_obs, 0.0);
  batch.path_mom_drift.assign(n_paths * d, 0.0);
  batch.path_mom_var.assign(n_paths * d, 0.0);
  batch.path_mom_pred.assign(n_paths * d, 0.0);
  batch.end_x.assign(n_paths * d, 0.0);
  batch.end_p.assign(n_paths * d, 0.0);
  batch.end_t = wrap01(static_cast<double>(total) * cfg.dt);

  std::vector<double> path_max_speed(n_paths, 0.0);
  std::vector<long long> path_leaks(n_paths, 0);

  const double noise = std::sqrt(2.0 * cell.eps * cfg.dt);
  const double flat = dict.empty() ? 0.0 : dict.front().flat_radius();
  const Hamiltonian& spec = *cell.spec;
  // Kronecker sequence start points: deterministic, equidistributed, and
  // independent of the seed so two seeds share the same geometry.
  static constexpr double kStart1 = 0.6180339887498949;
  static constexpr double kStart2 = 0.7548776662466927;

#pragma omp parallel for schedule(static)
  for (long long pi = 0; pi < static_cast<long long>(n_paths); ++pi) {
    const std::size_t path = static_cast<std::size_t>(pi);
    double x[2] = {wrap01((path + 1.0) * kStart1), 0.0};
    if (d == 2) x[1] = wrap01((path + 1.0) * kStart2);
    double p[2] = {0.0, 0.0};
    double hess[4] = {0.0, 0.0, 0.0, 0.0};

    double* obs_sum = &batch.path_obs_mean[path * n_obs];
    double* gen_sum = &batch.path_dyn_gen[path * n_obs];
    double* bnd = &batch.path_dyn_bnd[path * n_obs];
    double* mom_drift = &batch.path_mom_drift[path * d];
    double* mom_var = &batch.path_mom_var[path * d];
    double* mom_pred = &batch.path_mom_pred[path * d];

    std::vector<double> phi_start(n_obs, 0.0);
    bool have_start = false;
    // pending graph-momentum increment from the previous sampled step
    bool pending = false;
    double pend_p[2] = {0.0, 0.0};
    double pend_dx[2] = {0.0, 0.0};
    double pend_pred[2] = {0.0, 0.0};

    for (long long k = 0; k <= total; ++k) {
      const double t = wrap01(static_cast<double>(k) * cfg.dt);
      for (int a = 0; a < d; ++a)
        p[a] = cell.P[a] + interpolate(cell.grad_phi.comp[a], x, t);
      const HamiltonianBundle bun = spec.eval(x, p, t);

      const bool sample = k >= burn && k < total && (k - burn) % cfg.observable_stride == 0;
      const bool at_end = k == total;

      if (pending) {
        // one Euler step elapsed since the sample that armed this
        for (int a = 0; a < d; ++a) {
          const double inc = p[a] - pend_p[a] + pend_dx[a] * cfg.dt;
          mom_drift[a] += inc;
          mom_var[a] += inc * inc;
          mom_pred[a] += pend_pred[a];
        }
        pending = false;
      }

      if (sample || at_end) {
        double speed2 = 0.0;
        for (int a = 0; a < d; ++a) speed2 += p[a] * p[a];
        const double speed = std::sqrt(speed2);
        path_max_speed[path] = std::max(path_max_speed[path], speed);
        if (speed > flat) ++path_leaks[path];

        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            hess[a * d + b] = interpolate(cell.hess_phi[static_cast<std::size_t>(a) * d + b], x, t);

        for (std::size_t i = 0; i < n_obs; ++i) {
          const MuObservableEval e = dict[i].eval(x, t, p);
          if (at_end) {
            bnd[i] = (e.value - phi_start[i]) / batch.averaging_time;
            continue;
          }
          if (!have_start) phi_start[i] = e.value;
          obs_sum[i] += e.value;
          double pois = 0.0;
          for (int a = 0; a < d; ++a) pois += bun.dp[a] * e.dx[a] - bun.dx[a] * e.dp[a];
          double cross = 0.0, gram = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
              cross += hess[a * d + b] * e.dxp[a * d + b];
              double g = 0.0;
              for (int c = 0; c < d; ++c) g += hess[c * d + a] * hess[c * d + b];
              gram += g * e.dpp[a * d + b];
            }
          gen_sum[i] += e.dt + pois + cell.eps * (e.lap_x + 2.0 * cross + gram);
        }
        if (sample) have_start = true;

        if (sample) { // arm the one-step momentum increment, resolved at k+1
          pending = true;
          for (int a = 0; a < d; ++a) {
            pend_p[a] = p[a];
            pend_dx[a] = bun.dx[a];
            double row2 = 0.0;
            for (int b = 0; b < d; ++b) row2 += hess[a * d + b] * hess[a * d + b];
            pend_pred[a] = 2.0 * cell.eps * row2 * cfg.dt;
          }
        }
      }

      if (at_end) break;

      double g0, g1;
      CounterRng::gauss_pair(cfg.seed, path, static_cast<std::uint64_t>(k), g0, g1);
      x[0] = wrap01(x[0] + cfg.dt * bun.dp[0] + noise * g0);
      if (d == 2) x[1] = wrap01(x[1] + cfg.dt * bun.dp[1] + noise * g1);
    }

    const double inv_samples = 1.0 / static_cast<double>(batch.samples_per_path);
    for (std::size_t i = 0; i < n_obs; ++i) {
      obs_sum[i] *= inv_samples;
      gen_sum[i] *= inv_samples;
    }
    for (int a = 0; a < d; ++a) {
      batch.end_x[path * d + a] = x[a];
      batch.end_p[path * d + a] = p[a];
    }
  }

  double leaks = 0.0;
  for (std::size_t path = 0; path < n_paths; ++path) {
    batch.max_speed = std::max(batch.max_speed, path_max_speed[path]);
    leaks += static_cast<double>(path_leaks[path]);
  }
  batch.leak_fraction =
      leaks / (static_cast<double>(n_paths) * (batch.samples_per_path + 1.0));
  return batch;
}

std::vector<ObservableStat> empirical_measure(const TrajectoryBatch& batch) {
  std::vector<ObservableStat> out(batch.n_obs());
  const std::size_t n_paths = static_cast<std::size_t>(batch.cfg.n_paths);
  for (std::size_t i = 0; i < batch.n_obs(); ++i) {
    out[i].label = batch.labels[i];
    path_stats(batch.path_obs_mean, n_paths, batch.n_obs(), i, out[i].mean,
               out[i].std_error);
  }
  return out;
}

std::vector<DynkinRow> dynkin_residual(const TrajectoryBatch& batch) {
  const std::size_t n_paths = static_cast<std::size_t>(batch.cfg.n_paths);
  const std::size_t n_obs = batch.n_obs();
  std::vector<DynkinRow> out(n_obs);
  std::vector<double> diff(n_paths);
  for (std::size_t i = 0; i < n_obs; ++i) {
    out[i].label = batch.labels[i];
    double se_b, se_g;
    path_stats(batch.path_dyn_bnd, n_paths, n_obs, i, out[i].boundary, se_b);
    path_stats(batch.path_dyn_gen, n_paths, n_obs, i, out[i].generator, se_g);
    for (std::size_t p = 0; p < n_paths; ++p)
      diff[p] = batch.path_dyn_bnd[p * n_obs + i] - batch.path_dyn_gen[p * n_obs + i];
    const double m = mean(diff);
    std::vector<double> sq(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) sq[p] = (diff[p] - m) * (diff[p] - m);
    const double var = n_paths > 1 ? pairwise_sum(sq) / (n_paths - 1.0) : 0.0;
    out[i].residual = std::abs(m);
    out[i].sigma3 = 3.0 * std::sqrt(var / static_cast<double>(n_paths));
  }
  return out;
}

std::vector<MomentumRow> momentum_residual(const TrajectoryBatch& batch) {
  const std::size_t n_paths = static_cast<std::size_t>(batch.cfg.n_paths);
  const int d = batch.d;
  const double ns = static_cast<double>(batch.mom_samples_per_path);
  std::vector<MomentumRow> out(d);
  for (int a = 0; a < d; ++a) {
    out[a].axis = a;
    std::vector<double> drift(n_paths), var(n_paths), pred(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
      drift[p] = batch.path_mom_drift[p * d + a] / ns;
      var[p] = batch.path_mom_var[p * d + a] / ns;
      pred[p] = batch.path_mom_pred[p * d + a] / ns;
    }
    const double md = mean(drift);
    std::vector<double> sq(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) sq[p] = (drift[p] - md) * (drift[p] - md);
    const double se =
        n_paths > 1 ? std::sqrt(pairwise_sum(sq) / (n_paths - 1.0) / n_paths) : 0.0;
    out[a].drift_residual = md / batch.cfg.dt;
    out[a].drift_sigma3 = 3.0 * se / batch.cfg.dt;
    const double mv = mean(var) - md * md;
    const double mp = mean(pred);
    out[a].variance_ratio = mp > 0.0 ? mv / mp : 0.0;
  }
  return out;
}

std::string batch_summary_json(const TrajectoryBatch& batch) {
  const auto stats = empirical_measure(batch);
  const auto dynkin = dynkin_residual(batch);
  const auto mom = momentum_residual(batch);
  std::ostringstream os;
  os << "{\n";
  os << "  \"n_paths\": " << batch.cfg.n_paths << ",\n";
  os << "  \"dt\": " << format_full(batch.cfg.dt) << ",\n";
  os << "  \"horizon_periods\": " << batch.cfg.horizon_periods << ",\n";
  os << "  \"burn_in_periods\": " << batch.cfg.burn_in_periods << ",\n";
  os << "  \"seed\": " << batch.cfg.seed << ",\n";
  os << "  \"observable_stride\": " << batch.cfg.observable_stride << ",\n";
  os << "  \"max_speed\": " << format_full(batch.max_speed) << ",\n";
  os << "  \"leak_fraction\": " << format_full(batch.leak_fraction) << ",\n";
  os << "  \"observables\": [\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    os << "    {\"label\": \"" << stats[i].label << "\", \"mean\": "
       << format_full(stats[i].mean) << ", \"std_error\": "
       << format_full(stats[i].std_error) << ", \"dynkin_residual\": "
       << format_full(dynkin[i].residual) << ", \"dynkin_sigma3\": "
       << format_full(dynkin[i].sigma3) << "}";
    os << (i + 1 < stats.size() ? ",\n" : "\n");
  }
  os << "  ],\n";
  os << "  \"momentum_residuals\": [\n";
  for (std::size_t a = 0; a < mom.size(); ++a) {
    os << "    {\"axis\": " << mom[a].axis << ", \"drift_residual\": "
       << format_full(mom[a].drift_residual) << ", \"drift_sigma3\": "
       << format_full(mom[a].drift_sigma3) << ", \"variance_ratio\": "
       << format_full(mom[a].variance_ratio) << "}";
    os << (a + 1 < mom.size() ? ",\n" : "\n");
  }
  os << "  ]\n";
  os << "}\n";
  return os.str();
}

} // namespace mather
