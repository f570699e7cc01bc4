#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "matherlab/dictionary.hpp"

using namespace mather;

namespace {

// central difference helpers over a one-parameter perturbation
template <typename F>
double fd1(F f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

template <typename F>
double fd2(F f, double h) {
  return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

} // namespace

TEST_CASE("fourier dictionary has the documented size and no duplicates") {
  CHECK(fourier_test_functions(1, 2, 2).size() == 24);
  CHECK(fourier_test_functions(2, 2, 2).size() == 124);
  CHECK(fourier_test_functions(1, 1, 1).size() == 8);

  const std::vector<TestFunction> ws = fourier_test_functions(2, 2, 2);
  std::set<std::string> labels;
  for (const TestFunction& w : ws) labels.insert(w.label);
  CHECK(labels.size() == ws.size());
  CHECK_THROWS(fourier_test_functions(3, 1, 1));
}

TEST_CASE("fourier modes carry consistent analytic derivatives") {
  for (int d : {1, 2}) {
    const std::vector<TestFunction> ws = fourier_test_functions(d, 2, 2);
    const double x0[2] = {0.137, 0.618};
    const double t0 = 0.371;
    for (const TestFunction& w : ws) {
      CAPTURE(w.label);
      const double ft = fd1(
          [&](double h) { return w.value(x0, t0 + h); }, 1e-6);
      CHECK(close(ft, w.dt(x0, t0), 1e-5));

      double g[2] = {0.0, 0.0};
      w.grad_x(x0, t0, g);
      double lap_fd = 0.0;
      for (int i = 0; i < d; ++i) {
        const double fx = fd1(
            [&](double h) {
              double x[2] = {x0[0], x0[1]};
              x[i] += h;
              return w.value(x, t0);
            },
            1e-6);
        CHECK(close(fx, g[i], 1e-4));
        lap_fd += fd2(
            [&](double h) {
              double x[2] = {x0[0], x0[1]};
              x[i] += h;
              return w.value(x, t0);
            },
            1e-4);
      }
      CHECK(close(lap_fd, w.lap_x(x0, t0), 1e-3));
    }
  }
}

TEST_CASE("phase observable dictionary has the documented size and unique labels") {
  CHECK(mu_observable_dictionary(1, 0.8).size() == 27);
  CHECK(mu_observable_dictionary(2, 0.8).size() == 162);

  const std::vector<MuObservable> dict = mu_observable_dictionary(2, 0.8);
  std::set<std::string> labels;
  for (const MuObservable& o : dict) {
    labels.insert(o.label());
    CHECK(o.flat_radius() == 0.8);
    CHECK(o.cutoff_radius() == 1.6);
    CHECK(o.momentum_degree() >= 0);
    CHECK(o.momentum_degree() <= 2);
  }
  CHECK(labels.size() == dict.size());
}

TEST_CASE("phase observable constructor rejects malformed requests") {
  CHECK_THROWS(MuObservable(3, {0, 0}, 0, false, -1, -1, 1.0));
  CHECK_THROWS(MuObservable(1, {0, 0}, 0, false, -1, -1, 0.0));
  CHECK_THROWS(MuObservable(1, {0, 0}, 0, false, -1, 0, 1.0)); // qb without qa
  CHECK_THROWS(MuObservable(1, {0, 0}, 0, false, 1, -1, 1.0)); // index out of range
}

TEST_CASE("phase observables differentiate consistently in every region") {
  const double flat = 0.8;
  const double x0[2] = {0.137, 0.618};
  const double t0 = 0.371;
  // one momentum inside the flat core, one on the cutoff shell
  const double probes[2][2] = {{0.2, -0.15}, {1.0, 0.5}};

  for (int d : {1, 2}) {
    const std::vector<MuObservable> dict = mu_observable_dictionary(d, flat);
    for (const MuObservable& o : dict) {
      CAPTURE(o.label());
      for (const double* p0 : {probes[0], probes[1]}) {
        const MuObservableEval e = o.eval(x0, t0, p0);

        const double ft = fd1(
            [&](double h) { return o.eval(x0, t0 + h, p0).value; }, 1e-6);
        CHECK(close(ft, e.dt, 1e-4));

        double lap_fd = 0.0;
        for (int i = 0; i < d; ++i) {
          const double fx = fd1(
              [&](double h) {
                double x[2] = {x0[0], x0[1]};
                x[i] += h;
                return o.eval(x, t0, p0).value;
              },
              1e-6);
          CHECK(close(fx, e.dx[i], 1e-4));
          lap_fd += fd2(
              [&](double h) {
                double x[2] = {x0[0], x0[1]};
                x[i] += h;
                return o.eval(x, t0, p0).value;
              },
              1e-4);

          const double fp = fd1(
              [&](double h) {
                double p[2] = {p0[0], p0[1]};
                p[i] += h;
                return o.eval(x0, t0, p).value;
              },
              1e-6);
          CHECK(close(fp, e.dp[i], 1e-4));

          for (int j = 0; j < d; ++j) {
            const double fxp = fd1(
                [&](double h) {
                  double x[2] = {x0[0], x0[1]};
                  x[i] += h;
                  return o.eval(x, t0, p0).dp[j];
                },
                1e-6);
            CHECK(close(fxp, e.dxp[i * d + j], 1e-3));

            const double fpp = fd1(
                [&](double h) {
                  double p[2] = {p0[0], p0[1]};
                  p[i] += h;
                  return o.eval(x0, t0, p).dp[j];
                },
                1e-6);
            CHECK(close(fpp, e.dpp[i * d + j], 1e-3));
          }
        }
        CHECK(close(lap_fd, e.lap_x, 1e-3));

        // second momentum derivatives commute bit for bit
        if (d == 2) CHECK(e.dpp[1] == e.dpp[2]);
      }
    }
  }
}

TEST_CASE("phase observables vanish identically beyond the cutoff shell") {
  const std::vector<MuObservable> dict = mu_observable_dictionary(2, 0.8);
  const double x0[2] = {0.3, 0.7};
  const double p_out[2] = {1.9, 1.2}; // |p| > 1.6
  for (const MuObservable& o : dict) {
    const MuObservableEval e = o.eval(x0, 0.25, p_out);
    CHECK(e.value == 0.0);
    CHECK(e.dt == 0.0);
    CHECK(e.lap_x == 0.0);
    for (int i = 0; i < 2; ++i) {
      CHECK(e.dx[i] == 0.0);
      CHECK(e.dp[i] == 0.0);
    }
    for (int i = 0; i < 4; ++i) {
      CHECK(e.dxp[i] == 0.0);
      CHECK(e.dpp[i] == 0.0);
    }
  }
}

TEST_CASE("inside the flat core the observable is the plain product") {
  const double flat = 0.8;
  const std::vector<TestFunction> ws = fourier_test_functions(1, 1, 1);
  const TestFunction* mode = nullptr;
  for (const TestFunction& w : ws)
    if (w.label == "cos[k=1,m=0]") mode = &w;
  REQUIRE(mode != nullptr);

  const MuObservable obs(1, {1, 0}, 0, false, 0, -1, flat); // cos[k=1,m=0]*p1
  CHECK(obs.label() == "cos[k=1,m=0]*p1");
  const double x0[1] = {0.473};
  const double p0[1] = {0.31}; // inside the flat core
  const MuObservableEval e = obs.eval(x0, 0.11, p0);
  // identical phase arithmetic on both sides, so the match is exact
  CHECK(e.value == mode->value(x0, 0.11) * p0[0]);
  CHECK(e.dt == mode->dt(x0, 0.11) * p0[0]);
  const MuObservable unit(1, {0, 0}, 0, false, -1, -1, flat);
  CHECK(unit.label() == "1*1");
  CHECK(unit.eval(x0, 0.11, p0).value == 1.0);
}
