#include "doctest.h"

#include "colloc/schemes.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace colloc;

namespace {

bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

// derivative r of t -> sum_j c[j] t^j, evaluated directly
double poly_direct(const std::vector<double>& c, double t, int r) {
  double acc = 0.0;
  for (int j = r; j < static_cast<int>(c.size()); ++j) {
    double term = c[j];
    for (int i = 0; i < r; ++i) term *= static_cast<double>(j - i);
    acc += term * std::pow(t, j - r);
  }
  return acc;
}

std::vector<double> stack_of(const std::vector<double>& c, double t, int order) {
  std::vector<double> y(order);
  for (int j = 0; j < order; ++j) y[j] = poly_direct(c, t, j);
  return y;
}

double ipow(double x, int n) {
  double p = 1.0;
  for (int i = 0; i < n; ++i) p *= x;
  return p;
}

// closed-form endpoint update for the trapezoidal family, written out
// independently of the implementation
double tz_row(int M, int l, const std::vector<double>& y_k, double g_k, double g_k1,
              double h) {
  double acc = 0.0;
  for (int i = 0; i <= l - 1; ++i)
    acc += ipow(h, i) / static_cast<double>(factorial(i)) * y_k[i + M - l];
  acc += ipow(h, l) / static_cast<double>(factorial(l + 1)) * (l * g_k + g_k1);
  return acc;
}

// closed-form endpoint update for the Hermite-Simpson family
double hs_end_row(int M, int l, const std::vector<double>& y_k, double g_k, double g_c,
                  double g_k1, double h) {
  double acc = 0.0;
  for (int i = 0; i <= l - 1; ++i)
    acc += ipow(h, i) / static_cast<double>(factorial(i)) * y_k[i + M - l];
  acc += ipow(h, l) * (l * l * g_k + 4.0 * l * g_c + (2.0 - l) * g_k1) /
         static_cast<double>(factorial(l + 2));
  return acc;
}

// closed-form midpoint value for the Hermite-Simpson family after the
// midpoint dynamics sample has been eliminated against the trial endpoint
double hs_mid_row(int M, int l, const std::vector<double>& y_k, double y_top_k1,
                  double g_k, double g_k1, double h) {
  double acc = 0.0;
  for (int i = 0; i <= l - 2; ++i)
    acc += ipow(h, i) / (ipow(2.0, i) * static_cast<double>(factorial(i))) *
           y_k[i + M - l];
  acc += ipow(h, l - 1) * (3.0 * y_top_k1 + (2.0 * l * l + 4.0 * l - 3.0) * y_k[M - 1]) /
         (ipow(2.0, l) * static_cast<double>(factorial(l)) * (l + 2.0));
  acc += ipow(h, l) *
         ((2.0 * l * l + 2.0 * l - 1.0) * g_k - (2.0 * l + 1.0) * g_k1) /
         (ipow(2.0, l + 1) * static_cast<double>(factorial(l + 2)));
  return acc;
}

}  // namespace

TEST_CASE("trapezoidal step matches the first- and second-order row formulas") {
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_real_distribution<double> step(0.01, 2.0);

  for (int trial = 0; trial < 200; ++trial) {
    const double h = step(rng);
    const double g_k = val(rng);
    const double g_k1 = val(rng);

    const std::vector<double> x_k = {val(rng)};
    const std::vector<double> one = tz_step(1, x_k, g_k, g_k1, h);
    CHECK(close_rel(one[0], x_k[0] + 0.5 * h * (g_k1 + g_k), 1e-13));

    const std::vector<double> y_k = {val(rng), val(rng)};
    const std::vector<double> two = tz_step(2, y_k, g_k, g_k1, h);
    CHECK(close_rel(two[1], y_k[1] + 0.5 * h * (g_k1 + g_k), 1e-13));
    CHECK(close_rel(two[0], y_k[0] + y_k[1] * h + h * h / 6.0 * (g_k1 + 2.0 * g_k),
                    1e-13));
  }
}

TEST_CASE("trapezoidal step matches the general per-level row at higher order") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  for (int M : {1, 2, 3, 5, 8}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> y_k(M);
      for (double& v : y_k) v = val(rng);
      const double g_k = val(rng), g_k1 = val(rng), h = 0.3 + 0.1 * trial;
      const std::vector<double> out = tz_step(M, y_k, g_k, g_k1, h);
      for (int l = 1; l <= M; ++l)
        CHECK(close_rel(out[M - l], tz_row(M, l, y_k, g_k, g_k1, h), 1e-12));
    }
  }
}

TEST_CASE("hermite-simpson step matches the first- and second-order row formulas") {
  std::mt19937_64 rng(20240812);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_real_distribution<double> step(0.01, 2.0);

  for (int trial = 0; trial < 200; ++trial) {
    const double h = step(rng);
    const double g_k = val(rng);
    const double g_c = val(rng);
    const double g_k1 = val(rng);

    const std::vector<double> x_k = {val(rng)};
    const HsStep one = hs_step(1, x_k, {}, g_k, g_c, g_k1, h, HsMidpoint::ExplicitAccel);
    CHECK(close_rel(one.end[0], x_k[0] + h / 6.0 * (g_k + 4.0 * g_c + g_k1), 1e-13));
    const HsStep one_el = hs_step(1, x_k, one.end, g_k, g_c, g_k1, h);
    CHECK(close_rel(one_el.mid[0],
                    0.5 * (x_k[0] + one.end[0]) + h / 8.0 * (g_k - g_k1), 1e-13));

    const std::vector<double> y_k = {val(rng), val(rng)};
    const HsStep two = hs_step(2, y_k, {}, g_k, g_c, g_k1, h, HsMidpoint::ExplicitAccel);
    CHECK(close_rel(two.end[1], y_k[1] + h / 6.0 * (g_k + 4.0 * g_c + g_k1), 1e-13));
    CHECK(close_rel(two.end[0],
                    y_k[0] + y_k[1] * h + h * h / 6.0 * (g_k + 2.0 * g_c), 1e-13));
    const HsStep two_el = hs_step(2, y_k, two.end, g_k, g_c, g_k1, h);
    CHECK(close_rel(two_el.mid[1],
                    0.5 * (y_k[1] + two.end[1]) + h / 8.0 * (g_k - g_k1), 1e-13));
    CHECK(close_rel(two_el.mid[0],
                    y_k[0] + h / 32.0 * (13.0 * y_k[1] + 3.0 * two.end[1]) +
                        h * h / 192.0 * (11.0 * g_k - 5.0 * g_k1),
                    1e-13));
  }
}

TEST_CASE("hermite-simpson step matches the general per-level rows at higher order") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  for (int M : {1, 2, 3, 5, 8}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> y_k(M), y_k1(M);
      for (double& v : y_k) v = val(rng);
      for (double& v : y_k1) v = val(rng);  // arbitrary trial endpoint stack
      const double g_k = val(rng), g_c = val(rng), g_k1 = val(rng);
      const double h = 0.3 + 0.1 * trial;

      const HsStep s = hs_step(M, y_k, y_k1, g_k, g_c, g_k1, h);
      for (int l = 1; l <= M; ++l) {
        CHECK(close_rel(s.end[M - l], hs_end_row(M, l, y_k, g_k, g_c, g_k1, h), 1e-12));
        CHECK(close_rel(s.mid[M - l],
                        hs_mid_row(M, l, y_k, y_k1[M - 1], g_k, g_k1, h), 1e-12));
      }
    }
  }
}

TEST_CASE("trapezoidal step reproduces polynomials up to degree order+1") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int M : {1, 2, 3, 5}) {
    for (int deg = 0; deg <= M + 1; ++deg) {
      std::vector<double> c(deg + 1);
      for (double& v : c) v = val(rng);
      const double t_k = 0.4, h = 0.7;
      const std::vector<double> y_k = stack_of(c, t_k, M);
      const std::vector<double> out =
          tz_step(M, y_k, poly_direct(c, t_k, M), poly_direct(c, t_k + h, M), h);
      for (int j = 0; j < M; ++j)
        CHECK(close_rel(out[j], poly_direct(c, t_k + h, j), 1e-11));
    }
  }
}

TEST_CASE("hermite-simpson step reproduces polynomials up to degree order+2") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int M : {1, 2, 3, 5}) {
    for (int deg = 0; deg <= M + 2; ++deg) {
      std::vector<double> c(deg + 1);
      for (double& v : c) v = val(rng);
      const double t_k = -0.3, h = 0.9;
      const std::vector<double> y_k = stack_of(c, t_k, M);
      const std::vector<double> y_k1 = stack_of(c, t_k + h, M);
      const double g_k = poly_direct(c, t_k, M);
      const double g_c = poly_direct(c, t_k + 0.5 * h, M);
      const double g_k1 = poly_direct(c, t_k + h, M);

      for (HsMidpoint mp : {HsMidpoint::ExplicitAccel, HsMidpoint::EliminatedAccel}) {
        const HsStep s = hs_step(M, y_k, y_k1, g_k, g_c, g_k1, h, mp);
        for (int j = 0; j < M; ++j) {
          CHECK(close_rel(s.end[j], poly_direct(c, t_k + h, j), 1e-11));
          CHECK(close_rel(s.mid[j], poly_direct(c, t_k + 0.5 * h, j), 1e-11));
        }
      }
    }
  }
}

TEST_CASE("first-order hermite-simpson endpoint is exact on quartics sampled at "
          "the three derivative stations") {
  // Degree-4 polynomials exceed the interval polynomial's degree, but the
  // endpoint update only integrates the derivative with Simpson's rule,
  // which is exact for its cubic derivative.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> c(5);
    for (double& v : c) v = val(rng);
    const double t_k = val(rng), h = 0.2 + 0.5 * (trial % 7) / 7.0;
    const std::vector<double> x_k = {poly_direct(c, t_k, 0)};
    const HsStep s = hs_step(1, x_k, {}, poly_direct(c, t_k, 1),
                             poly_direct(c, t_k + 0.5 * h, 1),
                             poly_direct(c, t_k + h, 1), h,
                             HsMidpoint::ExplicitAccel);
    CHECK(close_rel(s.end[0], poly_direct(c, t_k + h, 0), 1e-11));
  }
}

TEST_CASE("frozen step and interpolant values") {
  const std::vector<double> y0 = {0.0, 0.0};
  const HsStep s = hs_step(2, y0, {}, 0.0, 3.0, 12.0, 1.0, HsMidpoint::ExplicitAccel);
  CHECK(s.end[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.end[1] == doctest::Approx(4.0).epsilon(1e-14));

  // x(tau) = 1 + tau^2 interpolates x_k = 1, f_k = 0, f_k1 = 2 at h = 1
  std::vector<double> a(3);
  tz_coeffs(1, std::vector<double>{1.0}, 0.0, 2.0, 1.0, a);
  for (double tau : {0.0, 0.25, 0.5, 0.9, 1.0})
    CHECK(poly_eval(a, tau, 0) == doctest::Approx(1.0 + tau * tau).epsilon(1e-14));

  // q(tau) = tau^3 has second derivative 6 at tau = 1
  std::vector<double> b(4);
  tz_coeffs(2, y0, 0.0, 6.0, 1.0, b);
  CHECK(poly_eval(b, 1.0, 2) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("step equals the interval polynomial evaluated at the knot, bitwise") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  for (int M : {1, 2, 4}) {
    std::vector<double> y_k(M);
    for (double& v : y_k) v = val(rng);
    const double g_k = val(rng), g_c = val(rng), g_k1 = val(rng), h = 0.37;

    std::vector<double> a(M + 2);
    tz_coeffs(M, y_k, g_k, g_k1, h, a);
    const std::vector<double> out = tz_step(M, y_k, g_k, g_k1, h);
    for (int j = 0; j < M; ++j) CHECK(out[j] == poly_eval(a, h, j));

    std::vector<double> ah(M + 3);
    hs_coeffs(M, y_k, g_k, g_c, g_k1, h, ah);
    const HsStep s = hs_step(M, y_k, {}, g_k, g_c, g_k1, h, HsMidpoint::ExplicitAccel);
    for (int j = 0; j < M; ++j) {
      CHECK(s.end[j] == poly_eval(ah, h, j));
      CHECK(s.mid[j] == poly_eval(ah, 0.5 * h, j));
    }
  }
}

TEST_CASE("eliminated midpoint dynamics value closes the endpoint relation") {
  const double g_k = 0.7, g_k1 = -1.3, h = 0.5, y_top_k = 2.0;
  const double g_c = -0.4;
  const double y_top_k1 = y_top_k + h / 6.0 * (g_k + 4.0 * g_c + g_k1);
  CHECK(hs_eliminate_gc(y_top_k, y_top_k1, g_k, g_k1, h) ==
        doctest::Approx(g_c).epsilon(1e-14));
}

TEST_CASE("scheme ids, method names and order limits") {
  CHECK(parse_method("tz1", 1).name() == "tz1");
  CHECK(parse_method("tz1", 3).order == 1);  // binds at order one even for M = 3
  CHECK(parse_method("tz2", 2).name() == "tz2");
  CHECK(parse_method("tzm", 3).name() == "tz3");
  CHECK(parse_method("hs1", 2).family == Family::HermiteSimpson);
  CHECK(parse_method("hs2", 2).degree() == 4);
  CHECK(parse_method("hsm", 3).order == 3);
  CHECK(parse_method("hsm", 3, HsForm::Compressed).hs_form == HsForm::Compressed);

  CHECK_THROWS_AS(parse_method("rk4", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("tz2", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("hs2", 3), std::invalid_argument);

  const std::vector<double> y(kMaxOrder + 1, 0.0);
  CHECK_THROWS_AS(tz_step(kMaxOrder + 1, y, 0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tz_step(2, y, 0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tz_step(2, std::vector<double>{0.0, 0.0}, 0.0, 0.0, -1.0),
                  std::invalid_argument);
}

TEST_CASE("interpolant controls: linear between knots, quadratic through midpoints") {
  const SchemeId tz = parse_method("tz1", 1);
  Matrix states(1, 3), g(1, 3), u(1, 3);
  states << 0.0, 0.0, 0.0;
  g << 0.0, 0.0, 0.0;
  u << 0.0, 4.0, -2.0;
  const PolyTrajectory lin =
      build_interpolant(tz, states, g, Matrix(), u, Matrix(), 0.0, 1.0);
  CHECK(lin.control(0.25)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lin.control(1.5)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lin.control(2.0)[0] == doctest::Approx(-2.0).epsilon(1e-14));

  const SchemeId hs = parse_method("hs1", 1);
  Matrix states2(1, 2), g2(1, 2), u2(1, 2), g_mid(1, 1), u_mid(1, 1);
  states2 << 0.0, 0.0;
  g2 << 0.0, 0.0;
  u2 << 0.0, 4.0;
  g_mid << 0.0;
  u_mid << 1.0;
  const PolyTrajectory quad =
      build_interpolant(hs, states2, g2, g_mid, u2, u_mid, 0.0, 1.0);
  CHECK(quad.control(0.25)[0] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(quad.control(0.5)[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(quad.control(1.0)[0] == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("interpolant mesh bookkeeping") {
  const SchemeId tz = parse_method("tz1", 1);
  Matrix states(1, 3), g(1, 3), u(1, 3);
  states << 1.0, 2.0, 5.0;
  g << 0.0, 2.0, 4.0;
  u.setZero();
  const PolyTrajectory traj =
      build_interpolant(tz, states, g, Matrix(), u, Matrix(), 0.0, 1.0);
  CHECK(traj.n_intervals() == 2);
  CHECK(traj.t_end() == doctest::Approx(2.0));
  CHECK(traj.interval_of(0.0) == 0);
  CHECK(traj.interval_of(1.0) == 1);  // interior knot belongs to the right interval
  CHECK(traj.interval_of(2.0) == 1);  // the final time stays in the last interval
  CHECK_THROWS_AS(traj.interval_of(2.5), std::invalid_argument);
  CHECK_THROWS_AS(traj.interval_of(-0.1), std::invalid_argument);

  // knot states are reproduced exactly
  CHECK(traj.eval(0.0, 0)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(traj.eval(2.0, 0)[0] == doctest::Approx(5.0).epsilon(1e-14));
}
