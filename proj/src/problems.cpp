#include "colloc/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace colloc {

OcpDefinition cartpole(const CartpoleParams& p) {
  OcpDefinition ocp;
  ocp.name = "cartpole";
  ocp.n_q = 2;
  ocp.n_u = 1;
  ocp.order = 2;
  ocp.t_f = p.t_f;
  ocp.coord_units = {"m", "rad"};

  const double m1 = p.m1, m2 = p.m2, l = p.length, g = p.gravity;
  ocp.dynamics = [m1, m2, l, g](const Vector& x, const Vector& u, double) {
    const double q2 = x[1];
    const double dq2 = x[3];
    const double s = std::sin(q2);
    const double c = std::cos(q2);
    const double den = m1 + m2 * s * s;
    Vector a(2);
    a[0] = (l * m2 * s * dq2 * dq2 + u[0] + m2 * g * c * s) / den;
    a[1] = -(l * m2 * c * s * dq2 * dq2 + u[0] * c + (m1 + m2) * g * s) / (l * den);
    return a;
  };
  ocp.running_cost = [](const Vector&, const Vector& u, double) {
    return u[0] * u[0];
  };

  const double d = p.distance;
  ocp.n_boundary = 8;
  ocp.boundary_constraints = [d](const Vector& x0, const Vector& xf, double) {
    Vector b(8);
    b.head(4) = x0;
    b[4] = xf[0] - d;
    b[5] = xf[1] - std::numbers::pi;
    b[6] = xf[2];
    b[7] = xf[3];
    return b;
  };

  ocp.state_bounds.assign(4, Bounds{});
  ocp.state_bounds[0] = {-p.x_max, p.x_max};
  ocp.control_bounds = {{-p.u_max, p.u_max}};

  Vector x0 = Vector::Zero(4);
  Vector xf = Vector::Zero(4);
  xf[0] = d;
  xf[1] = std::numbers::pi;
  ocp.guess_waypoints = {{0.0, x0}, {p.t_f, xf}};
  return ocp;
}

OcpDefinition oscillator(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  OcpDefinition ocp;
  ocp.name = "oscillator";
  ocp.n_q = 1;
  ocp.n_u = 0;
  ocp.order = 2;
  ocp.t_f = 2.0 * std::numbers::pi / omega;
  ocp.coord_units = {"m"};
  ocp.dynamics = [omega](const Vector& x, const Vector&, double) {
    Vector a(1);
    a[0] = -omega * omega * x[0];
    return a;
  };
  ocp.n_boundary = 2;
  ocp.boundary_constraints = [](const Vector& x0, const Vector&, double) {
    Vector b(2);
    b[0] = x0[0] - 1.0;
    b[1] = x0[1];
    return b;
  };
  Vector w(2);
  w << 1.0, 0.0;
  ocp.guess_waypoints = {{0.0, w}, {ocp.t_f, w}};
  return ocp;
}

Vector oscillator_reference(double omega, double t) {
  Vector x(2);
  x[0] = std::cos(omega * t);
  x[1] = -omega * std::sin(omega * t);
  return x;
}

OcpDefinition triple_integrator() {
  OcpDefinition ocp;
  ocp.name = "triple_integrator";
  ocp.n_q = 1;
  ocp.n_u = 1;
  ocp.order = 3;
  ocp.t_f = 1.0;
  ocp.coord_units = {"m"};
  ocp.dynamics = [](const Vector&, const Vector& u, double) {
    Vector a(1);
    a[0] = u[0];
    return a;
  };
  ocp.running_cost = [](const Vector&, const Vector& u, double) {
    return u[0] * u[0];
  };
  ocp.n_boundary = 6;
  ocp.boundary_constraints = [](const Vector& x0, const Vector& xf, double) {
    Vector b(6);
    b.head(3) = x0;
    b[3] = xf[0] - 1.0;
    b[4] = xf[1];
    b[5] = xf[2];
    return b;
  };
  Vector x0 = Vector::Zero(3);
  Vector xf = Vector::Zero(3);
  xf[0] = 1.0;
  ocp.guess_waypoints = {{0.0, x0}, {1.0, xf}};
  return ocp;
}

std::vector<std::string> problem_names() {
  return {"cartpole", "oscillator", "triple_integrator"};
}

OcpDefinition make_problem(const std::string& name) {
  if (name == "cartpole") return cartpole();
  if (name == "oscillator") return oscillator();
  if (name == "triple_integrator") return triple_integrator();
  std::string known;
  for (const std::string& n : problem_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw std::invalid_argument("unknown problem '" + name + "' (known: " + known + ")");
}

}  // namespace colloc
