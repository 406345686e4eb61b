#pragma once

#include "colloc/ocp.hpp"

#include <string>
#include <vector>

namespace colloc {

struct CartpoleParams {
  double m1 = 1.0;       // cart mass
  double m2 = 0.3;       // pole mass
  double length = 0.5;   // pole length
  double gravity = 9.81;
  double distance = 1.0;  // cart travel
  double t_f = 2.0;
  double u_max = 20.0;
  double x_max = 2.0;  // cart position bound
};

// Cart-pole swing-up (second order, q = [cart position, pole angle], angle
// measured from the hanging position): rest at the origin to rest at
// (distance, pi), minimum integral of u^2, |u| and |q1| bounded.
OcpDefinition cartpole(const CartpoleParams& params = {});

// Undriven harmonic oscillator q'' = -omega^2 q with q(0) = 1, q'(0) = 0
// over one period; closed-form solution for accuracy studies.
OcpDefinition oscillator(double omega = 1.0);
Vector oscillator_reference(double omega, double t);  // stack (q, q')

// Third-order chain q''' = u, rest-to-rest from 0 to 1 on [0, 1], minimum
// integral of u^2. The optimum is the quintic q = 10 t^3 - 15 t^4 + 6 t^5
// with u = 60 - 360 t + 360 t^2 and cost 720.
OcpDefinition triple_integrator();

std::vector<std::string> problem_names();
OcpDefinition make_problem(const std::string& name);

}  // namespace colloc
