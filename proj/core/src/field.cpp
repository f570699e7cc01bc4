#include "matherlab/field.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "matherlab/numerics.hpp"

namespace mather {

PeriodicGrid::PeriodicGrid(int d_, int n_x_, int n_t_) : d(d_), n_x(n_x_), n_t(n_t_) {
  if (d != 1 && d != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (n_x < 8 || n_t < 8) throw std::invalid_argument("grid needs at least 8 points per axis");
}

void PeriodicGrid::node_coords(std::size_t flat, double* x, double& t) const {
  const std::size_t per_slice = nodes_per_slice();
  const std::size_t it = flat / per_slice;
  const std::size_t rem = flat % per_slice;
  t = static_cast<double>(it) / n_t;
  if (d == 1) {
    x[0] = static_cast<double>(rem) / n_x;
  } else {
    x[0] = static_cast<double>(rem / n_x) / n_x;
    x[1] = static_cast<double>(rem % n_x) / n_x;
  }
}

ScalarField sample_field(const PeriodicGrid& grid,
                         const std::function<double(const double*, double)>& f) {
  ScalarField out(grid);
  double x[2];
  double t;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    grid.node_coords(i, x, t);
    out.values[i] = f(x, t);
  }
  return out;
}

namespace {

inline int wrap(int i, int n) { return (i % n + n) % n; }

// Applies a periodic central first difference along one axis of a slice or
// along t, writing into out. axis: 0 = x1, 1 = x2, -1 = t.
void central_diff(const ScalarField& f, int axis, ScalarField& out) {
  const PeriodicGrid& g = f.grid;
  const double h = (axis == -1) ? g.dt() : g.dx();
  const double inv2h = 1.0 / (2.0 * h);

  if (axis == -1) {
    const std::size_t per_slice = g.nodes_per_slice();
    for (int it = 0; it < g.n_t; ++it) {
      auto up = f.slice(wrap(it + 1, g.n_t));
      auto dn = f.slice(wrap(it - 1, g.n_t));
      auto o = out.slice(it);
      for (std::size_t j = 0; j < per_slice; ++j) o[j] = (up[j] - dn[j]) * inv2h;
    }
    return;
  }

  if (g.d == 1) {
    for (int it = 0; it < g.n_t; ++it)
      for (int i = 0; i < g.n_x; ++i)
        out.at(it, i) = (f.at(it, wrap(i + 1, g.n_x)) - f.at(it, wrap(i - 1, g.n_x))) * inv2h;
    return;
  }
  for (int it = 0; it < g.n_t; ++it)
    for (int i = 0; i < g.n_x; ++i)
      for (int j = 0; j < g.n_x; ++j) {
        if (axis == 0)
          out.at(it, i, j) =
              (f.at(it, wrap(i + 1, g.n_x), j) - f.at(it, wrap(i - 1, g.n_x), j)) * inv2h;
        else
          out.at(it, i, j) =
              (f.at(it, i, wrap(j + 1, g.n_x)) - f.at(it, i, wrap(j - 1, g.n_x))) * inv2h;
      }
}

void second_diff(const ScalarField& f, int axis, ScalarField& out) {
  const PeriodicGrid& g = f.grid;
  const double invh2 = 1.0 / (g.dx() * g.dx());
  if (g.d == 1) {
    for (int it = 0; it < g.n_t; ++it)
      for (int i = 0; i < g.n_x; ++i)
        out.at(it, i) = (f.at(it, wrap(i + 1, g.n_x)) - 2.0 * f.at(it, i) +
                         f.at(it, wrap(i - 1, g.n_x))) * invh2;
    return;
  }
  for (int it = 0; it < g.n_t; ++it)
    for (int i = 0; i < g.n_x; ++i)
      for (int j = 0; j < g.n_x; ++j) {
        if (axis == 0)
          out.at(it, i, j) = (f.at(it, wrap(i + 1, g.n_x), j) - 2.0 * f.at(it, i, j) +
                              f.at(it, wrap(i - 1, g.n_x), j)) * invh2;
        else
          out.at(it, i, j) = (f.at(it, i, wrap(j + 1, g.n_x)) - 2.0 * f.at(it, i, j) +
                              f.at(it, i, wrap(j - 1, g.n_x))) * invh2;
      }
}

// Spectral derivative applied line by line along the requested axis.
void spectral_axis(const ScalarField& f, int axis, int order, ScalarField& out) {
  const PeriodicGrid& g = f.grid;
  if (axis == -1) {
    const std::size_t per_slice = g.nodes_per_slice();
    std::vector<double> line(g.n_t), dline(g.n_t);
    for (std::size_t j = 0; j < per_slice; ++j) {
      for (int it = 0; it < g.n_t; ++it)
        line[it] = f.values[static_cast<std::size_t>(it) * per_slice + j];
      spectral_derivative_line(line, order, dline);
      for (int it = 0; it < g.n_t; ++it)
        out.values[static_cast<std::size_t>(it) * per_slice + j] = dline[it];
    }
    return;
  }
  std::vector<double> line(g.n_x), dline(g.n_x);
  if (g.d == 1) {
    for (int it = 0; it < g.n_t; ++it) {
      for (int i = 0; i < g.n_x; ++i) line[i] = f.at(it, i);
      spectral_derivative_line(line, order, dline);
      for (int i = 0; i < g.n_x; ++i) out.at(it, i) = dline[i];
    }
    return;
  }
  for (int it = 0; it < g.n_t; ++it) {
    if (axis == 0) {
      for (int j = 0; j < g.n_x; ++j) {
        for (int i = 0; i < g.n_x; ++i) line[i] = f.at(it, i, j);
        spectral_derivative_line(line, order, dline);
        for (int i = 0; i < g.n_x; ++i) out.at(it, i, j) = dline[i];
      }
    } else {
      for (int i = 0; i < g.n_x; ++i) {
        for (int j = 0; j < g.n_x; ++j) line[j] = f.at(it, i, j);
        spectral_derivative_line(line, order, dline);
        for (int j = 0; j < g.n_x; ++j) out.at(it, i, j) = dline[j];
      }
    }
  }
}

} // namespace

VectorField grad_x(const ScalarField& f, DiffScheme scheme) {
  VectorField out(f.grid);
  for (int k = 0; k < f.grid.d; ++k) {
    if (scheme == DiffScheme::central2)
      central_diff(f, k, out.comp[k]);
    else
      spectral_axis(f, k, 1, out.comp[k]);
  }
  return out;
}

ScalarField d_t(const ScalarField& f, DiffScheme scheme) {
  ScalarField out(f.grid);
  if (scheme == DiffScheme::central2)
    central_diff(f, -1, out);
  else
    spectral_axis(f, -1, 1, out);
  return out;
}

ScalarField laplacian_x(const ScalarField& f, DiffScheme scheme) {
  ScalarField out(f.grid);
  if (scheme == DiffScheme::central2) {
    second_diff(f, 0, out);
    if (f.grid.d == 2) {
      ScalarField tmp(f.grid);
      second_diff(f, 1, tmp);
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += tmp.values[i];
    }
  } else {
    spectral_axis(f, 0, 2, out);
    if (f.grid.d == 2) {
      ScalarField tmp(f.grid);
      spectral_axis(f, 1, 2, tmp);
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += tmp.values[i];
    }
  }
  return out;
}

std::vector<ScalarField> hessian_xx(const ScalarField& f, DiffScheme scheme) {
  const int d = f.grid.d;
  std::vector<ScalarField> out(static_cast<std::size_t>(d) * d, ScalarField(f.grid));

  for (int k = 0; k < d; ++k) {
    if (scheme == DiffScheme::central2)
      second_diff(f, k, out[k * d + k]);
    else
      spectral_axis(f, k, 2, out[k * d + k]);
  }
  if (d == 2) {
    // Mixed partial: average the two differentiation orders, then mirror so
    // the matrix is symmetric to the last bit.
    VectorField g1 = grad_x(f, scheme);
    ScalarField a(f.grid), b(f.grid);
    if (scheme == DiffScheme::central2) {
      central_diff(g1.comp[0], 1, a);
      central_diff(g1.comp[1], 0, b);
    } else {
      spectral_axis(g1.comp[0], 1, 1, a);
      spectral_axis(g1.comp[1], 0, 1, b);
    }
    ScalarField& m01 = out[0 * 2 + 1];
    for (std::size_t i = 0; i < m01.values.size(); ++i)
      m01.values[i] = 0.5 * (a.values[i] + b.values[i]);
    out[1 * 2 + 0] = m01;
  }
  return out;
}

double integrate(const ScalarField& f) { return mean(f.values); }

double integrate_slice(const ScalarField& f, int it) { return mean(f.slice(it)); }

double interpolate(const ScalarField& f, const double* x, double t) {
  const PeriodicGrid& g = f.grid;

  const double tw = t - std::floor(t);
  const double ft = tw * g.n_t;
  const int it0 = static_cast<int>(ft) % g.n_t;
  const int it1 = (it0 + 1) % g.n_t;
  const double wt = ft - std::floor(ft);

  auto axis_split = [&](double u, int& i0, int& i1, double& w) {
    const double uw = u - std::floor(u);
    const double fu = uw * g.n_x;
    i0 = static_cast<int>(fu) % g.n_x;
    i1 = (i0 + 1) % g.n_x;
    w = fu - std::floor(fu);
  };

  if (g.d == 1) {
    int i0, i1;
    double wx;
    axis_split(x[0], i0, i1, wx);
    const double v0 = (1.0 - wx) * f.at(it0, i0) + wx * f.at(it0, i1);
    const double v1 = (1.0 - wx) * f.at(it1, i0) + wx * f.at(it1, i1);
    return (1.0 - wt) * v0 + wt * v1;
  }

  int a0, a1, b0, b1;
  double wa, wb;
  axis_split(x[0], a0, a1, wa);
  axis_split(x[1], b0, b1, wb);
  auto bilin = [&](int it) {
    const double v00 = f.at(it, a0, b0), v01 = f.at(it, a0, b1);
    const double v10 = f.at(it, a1, b0), v11 = f.at(it, a1, b1);
    return (1.0 - wa) * ((1.0 - wb) * v00 + wb * v01) +
           wa * ((1.0 - wb) * v10 + wb * v11);
  };
  return (1.0 - wt) * bilin(it0) + wt * bilin(it1);
}

double sup_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

double rms(const ScalarField& f) {
  double s = 0.0;
  std::vector<double> sq(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) sq[i] = f.values[i] * f.values[i];
  s = mean(sq);
  return std::sqrt(s);
}

void dump_field(const ScalarField& f, const std::string& csv_path) {
  std::ofstream os(csv_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + csv_path);
  const PeriodicGrid& g = f.grid;
  os << (g.d == 1 ? "t,x1,value\n" : "t,x1,x2,value\n");
  double x[2] = {0.0, 0.0};
  double t = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    g.node_coords(i, x, t);
    os << format_full(t) << ',' << format_full(x[0]);
    if (g.d == 2) os << ',' << format_full(x[1]);
    os << ',' << format_full(f.values[i]) << '\n';
  }
  std::ofstream meta(csv_path + ".meta.json", std::ios::binary);
  meta << "{\"d\": " << g.d << ", \"n_x\": " << g.n_x << ", \"n_t\": " << g.n_t << "}\n";
}

ScalarField load_field(const std::string& csv_path) {
  std::ifstream meta(csv_path + ".meta.json");
  if (!meta) throw std::runtime_error("missing sidecar for " + csv_path);
  std::string blob((std::istreambuf_iterator<char>(meta)), {});
  auto grab = [&](const std::string& key) {
    auto pos = blob.find("\"" + key + "\"");
    if (pos == std::string::npos) throw std::runtime_error("bad sidecar for " + csv_path);
    pos = blob.find(':', pos);
    return std::stoi(blob.substr(pos + 1));
  };
  PeriodicGrid g(grab("d"), grab("n_x"), grab("n_t"));

  std::ifstream is(csv_path);
  if (!is) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  std::getline(is, line); // header
  ScalarField f(g);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("short field file " + csv_path);
    const auto pos = line.rfind(',');
    f.values[i] = std::strtod(line.c_str() + pos + 1, nullptr);
  }
  return f;
}

} // namespace mather
