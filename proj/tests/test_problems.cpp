#include "doctest.h"

#include "colloc/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace colloc;

TEST_CASE("registry exposes every problem and rejects unknown names") {
  const std::vector<std::string> names = problem_names();
  REQUIRE(names.size() == 3);
  for (const std::string& name : names) {
    const OcpDefinition ocp = make_problem(name);
    CHECK_NOTHROW(ocp.validate());
    CHECK(ocp.name == name);
    REQUIRE(ocp.guess_waypoints.size() >= 2);
    // the waypoint endpoints satisfy the boundary conditions they encode
    const Vector b = ocp.boundary_constraints(ocp.guess_waypoints.front().second,
                                              ocp.guess_waypoints.back().second,
                                              ocp.t_f);
    CHECK(b.lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  CHECK_THROWS_AS(make_problem("pendulum"), std::invalid_argument);
}

TEST_CASE("swing-up dynamics at reference configurations") {
  const OcpDefinition ocp = cartpole();
  CHECK(ocp.order == 2);
  CHECK(ocp.n_q == 2);
  CHECK(ocp.n_u == 1);

  Vector u(1);
  u << 1.0;
  const Vector rest = eval_dynamics(ocp, Vector::Zero(4), u, 0.0);
  CHECK(rest[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rest[1] == doctest::Approx(-2.0).epsilon(1e-14));

  Vector sideways = Vector::Zero(4);
  sideways[1] = 0.5 * std::numbers::pi;
  u[0] = 0.0;
  const Vector swing = eval_dynamics(ocp, sideways, u, 0.0);
  CHECK(std::abs(swing[0]) <= 1e-12);  // horizontal pole: no force on the cart
  CHECK(swing[1] == doctest::Approx(-19.62).epsilon(1e-12));

  // custom parameters propagate into dynamics and bounds
  CartpoleParams params;
  params.gravity = 1.0;
  params.u_max = 5.0;
  const OcpDefinition moon = cartpole(params);
  const Vector hang = eval_dynamics(moon, sideways, u, 0.0);
  CHECK(hang[1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(moon.control_bounds[0].hi == 5.0);
}

TEST_CASE("oscillator matches its closed form") {
  const OcpDefinition ocp = oscillator();
  CHECK(ocp.n_u == 0);
  CHECK(ocp.t_f == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(!ocp.running_cost);

  Vector x(2);
  x << 0.4, -0.3;
  CHECK(eval_dynamics(ocp, x, Vector(0), 1.0)[0] == doctest::Approx(-0.4));

  // the reference stack solves the problem: check against a tiny rk4 sweep
  const double dt = 1e-3;
  Vector state = oscillator_reference(1.0, 0.0);
  auto deriv = [&](const Vector& s) {
    Vector d(2);
    d[0] = s[1];
    d[1] = -s[0];
    return d;
  };
  for (int i = 0; i < 1000; ++i) {
    const Vector k1 = deriv(state);
    const Vector k2 = deriv(state + 0.5 * dt * k1);
    const Vector k3 = deriv(state + 0.5 * dt * k2);
    const Vector k4 = deriv(state + dt * k3);
    state += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const Vector want = oscillator_reference(1.0, 1.0);
  CHECK(state[0] == doctest::Approx(want[0]).epsilon(1e-10));
  CHECK(state[1] == doctest::Approx(want[1]).epsilon(1e-10));

  CHECK_THROWS_AS(oscillator(0.0), std::invalid_argument);

  const OcpDefinition fast = oscillator(2.0);
  CHECK(fast.t_f == doctest::Approx(std::numbers::pi));
  CHECK(eval_dynamics(fast, x, Vector(0), 0.0)[0] == doctest::Approx(-1.6));
}

TEST_CASE("third-order chain optimum satisfies its necessary conditions") {
  const OcpDefinition ocp = triple_integrator();
  CHECK(ocp.order == 3);
  CHECK(ocp.n_boundary == 6);

  const auto q = [](double t) {
    return 10.0 * t * t * t - 15.0 * t * t * t * t + 6.0 * t * t * t * t * t;
  };
  const auto u = [](double t) { return 60.0 - 360.0 * t + 360.0 * t * t; };
  CHECK(u(0.5) == doctest::Approx(-30.0));

  // u is the third derivative of q (the stencil truncation is ~q''''' eps^2 / 8)
  for (double t : {0.1, 0.37, 0.8}) {
    const double eps = 1e-2;
    const double d3 =
        (q(t + 1.5 * eps) - 3.0 * q(t + 0.5 * eps) + 3.0 * q(t - 0.5 * eps) -
         q(t - 1.5 * eps)) /
        (eps * eps * eps);
    CHECK(std::abs(d3 - u(t)) <= 0.05);
  }

  // boundary residuals vanish on the quintic's stack
  Vector x0(3), xf(3);
  x0 << 0.0, 0.0, 0.0;
  xf << 1.0, 0.0, 0.0;
  CHECK(ocp.boundary_constraints(x0, xf, 1.0).lpNorm<Eigen::Infinity>() == 0.0);

  // cost of the optimal control: integral of u^2 over [0, 1]
  double cost = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / n, b = static_cast<double>(i + 1) / n;
    const double m = 0.5 * (a + b);
    cost += (b - a) / 6.0 * (u(a) * u(a) + 4.0 * u(m) * u(m) + u(b) * u(b));
  }
  CHECK(cost == doctest::Approx(720.0).epsilon(1e-9));
}
