#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace colloc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Bounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool has_lo() const { return std::isfinite(lo); }
  bool has_hi() const { return std::isfinite(hi); }
};

// Derivative stack (q, q', ..., q^(M-1)) of a configuration vector at one
// time instant. Stored flat and level-major: values = [q; q'; ...].
struct StateStack {
  Vector values;
  int n_q = 0;
  int order = 1;
  double time = 0.0;

  StateStack() = default;
  StateStack(Vector v, int n_q_in, int order_in, double t);

  int n_x() const { return n_q * order; }
  Eigen::VectorBlock<const Vector> level(int j) const;
};

using DynamicsFn = std::function<Vector(const Vector& x, const Vector& u, double t)>;
using RunningCostFn = std::function<double(const Vector& x, const Vector& u, double t)>;
using TerminalCostFn = std::function<double(const Vector& xf, double tf)>;
using PathFn = std::function<Vector(const Vector& x, const Vector& u)>;
using BoundaryFn = std::function<Vector(const Vector& x0, const Vector& xf, double tf)>;

// Optimal control problem stated at order M:
//
//   min  integral L(x, u, t) dt + K(x(tf), tf)
//   s.t. q^(M) = g(x, u, t),  b(x(0), x(tf), tf) = 0,  p(x, u) <= 0,
//
// where x is the derivative stack of q up to level M-1. First-order problems
// are the special case M = 1 with x = q.
struct OcpDefinition {
  std::string name;
  int n_q = 0;
  int n_u = 0;
  int order = 1;

  DynamicsFn dynamics;              // returns q^(M), length n_q
  RunningCostFn running_cost;       // optional
  TerminalCostFn terminal_cost;     // optional
  PathFn path_constraints;          // optional, rows <= 0
  int n_path = 0;
  BoundaryFn boundary_constraints;  // optional, rows == 0
  int n_boundary = 0;

  double t_f = 1.0;
  std::vector<Bounds> state_bounds;    // empty or n_x() entries
  std::vector<Bounds> control_bounds;  // empty or n_u entries
  std::vector<std::string> coord_units;  // empty or n_q entries

  // (time, state) pairs a transcription may interpolate for a first guess
  std::vector<std::pair<double, Vector>> guess_waypoints;

  int n_x() const { return n_q * order; }
  void validate() const;  // throws std::invalid_argument on an ill-formed problem
};

Vector eval_dynamics(const OcpDefinition& ocp, const StateStack& x, const Vector& u);
Vector eval_dynamics(const OcpDefinition& ocp, const Vector& x, const Vector& u, double t);

// Rewrites an order-M problem as the equivalent first-order one. The new
// configuration vector is the old derivative stack, so the flat state layout
// (and with it costs, bounds and boundary conditions) is unchanged.
OcpDefinition lift_to_first_order(const OcpDefinition& ocp);

}  // namespace colloc
