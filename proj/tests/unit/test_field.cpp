#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "matherlab/field.hpp"
#include "matherlab/numerics.hpp"

using namespace mather;

namespace {

ScalarField trig_field_1d(int n) {
  PeriodicGrid g(1, n, n);
  ScalarField f(g);
  double x[2];
  double t;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    g.node_coords(i, x, t);
    f.values[i] = std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * t) + 0.25;
  }
  return f;
}

ScalarField trig_field_2d(int n) {
  PeriodicGrid g(2, n, n);
  ScalarField f(g);
  double x[2];
  double t;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    g.node_coords(i, x, t);
    f.values[i] = std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]) +
                  0.3 * std::cos(kTwoPi * t);
  }
  return f;
}

} // namespace

TEST_CASE("grid indexing and node coordinates round-trip") {
  PeriodicGrid g(2, 8, 16);
  CHECK(g.nodes_per_slice() == 64);
  CHECK(g.node_count() == 64 * 16);
  CHECK(g.dx() == doctest::Approx(1.0 / 8));
  CHECK(g.dt() == doctest::Approx(1.0 / 16));
  double x[2];
  double t;
  const std::size_t flat = g.index(3, 5, 7);
  g.node_coords(flat, x, t);
  CHECK(t == doctest::Approx(3.0 / 16));
  CHECK(x[0] == doctest::Approx(5.0 / 8));
  CHECK(x[1] == doctest::Approx(7.0 / 8));
}

TEST_CASE("integrate averages over the torus") {
  const ScalarField f = trig_field_1d(32);
  CHECK(integrate(f) == doctest::Approx(0.25).epsilon(1e-13));
  ScalarField c(PeriodicGrid(1, 8, 8), 2.5);
  CHECK(integrate(c) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(integrate_slice(c, 3) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("gradients: spectral is exact, central second order") {
  const ScalarField f = trig_field_1d(32);
  const VectorField gs = grad_x(f, DiffScheme::spectral);
  const VectorField gc = grad_x(f, DiffScheme::central2);
  double x[2];
  double t;
  double worst_c = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    f.grid.node_coords(i, x, t);
    const double exact = kTwoPi * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * t);
    CHECK(gs.comp[0].values[i] == doctest::Approx(exact).epsilon(5e-12));
    worst_c = std::max(worst_c, std::abs(gc.comp[0].values[i] - exact));
  }
  // h = 1/32: second-order error ~ (2 pi)^3 h^2 / 6
  CHECK(worst_c < 0.05);
  CHECK(worst_c > 1e-4);
}

TEST_CASE("time derivative and laplacian on a 2d trig field") {
  const ScalarField f = trig_field_2d(16);
  const ScalarField ft = d_t(f);
  const ScalarField lap = laplacian_x(f, DiffScheme::spectral);
  double x[2];
  double t;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    f.grid.node_coords(i, x, t);
    const double et = -0.3 * kTwoPi * std::sin(kTwoPi * t);
    const double el =
        -2.0 * kTwoPi * kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    CHECK(ft.values[i] == doctest::Approx(et).epsilon(0.05).scale(1.0));
    CHECK(lap.values[i] == doctest::Approx(el).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("hessian is symmetric and its trace matches the laplacian") {
  const ScalarField f = trig_field_2d(16);
  const auto H = hessian_xx(f, DiffScheme::spectral);
  REQUIRE(H.size() == 4);
  const ScalarField lap = laplacian_x(f, DiffScheme::spectral);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    CHECK(H[1].values[i] == H[2].values[i]); // bitwise mirror
    CHECK(H[0].values[i] + H[3].values[i] ==
          doctest::Approx(lap.values[i]).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("interpolation reproduces node values and wraps periodically") {
  const ScalarField f = trig_field_1d(16);
  double x[2];
  double t;
  for (std::size_t i : {std::size_t(0), std::size_t(37), std::size_t(200)}) {
    f.grid.node_coords(i, x, t);
    CHECK(interpolate(f, x, t) == f.values[i]);
  }
  // one full period away lands on the same value
  f.grid.node_coords(5, x, t);
  double xs[1] = {x[0] + 1.0};
  CHECK(interpolate(f, xs, t + 2.0) == doctest::Approx(f.values[5]).epsilon(1e-13));
  // midpoint between two nodes is the average along x
  const double h = f.grid.dx();
  double xm[1] = {0.5 * h};
  const double v0 = f.values[f.grid.index(0, 0)];
  const double v1 = f.values[f.grid.index(0, 1)];
  CHECK(interpolate(f, xm, 0.0) == doctest::Approx(0.5 * (v0 + v1)).epsilon(1e-13));
}

TEST_CASE("sample_field evaluates a lambda on every node") {
  PeriodicGrid g(1, 8, 8);
  const ScalarField f =
      sample_field(g, [](const double* x, double t) { return x[0] + 10.0 * t; });
  double x[2];
  double t;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    g.node_coords(i, x, t);
    CHECK(f.values[i] == x[0] + 10.0 * t);
  }
}

TEST_CASE("field dump and load round-trip bitwise") {
  const ScalarField f = trig_field_2d(8);
  const auto dir = std::filesystem::temp_directory_path() / "matherlab_field_rt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "f.csv").string();
  dump_field(f, path);
  const ScalarField g = load_field(path);
  REQUIRE(g.grid == f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(g.values[i] == f.values[i]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sup_abs and rms on a known field") {
  PeriodicGrid g(1, 8, 8);
  ScalarField f(g, -3.0);
  f.values[5] = 4.0;
  CHECK(sup_abs(f) == 4.0);
  const double expected =
      std::sqrt((63.0 * 9.0 + 16.0) / 64.0);
  CHECK(rms(f) == doctest::Approx(expected).epsilon(1e-14));
}
