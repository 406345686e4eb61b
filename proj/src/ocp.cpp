#include "colloc/ocp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace colloc {

StateStack::StateStack(Vector v, int n_q_in, int order_in, double t)
    : values(std::move(v)), n_q(n_q_in), order(order_in), time(t) {
  if (n_q < 1 || order < 1)
    throw std::invalid_argument("StateStack: n_q and order must be positive");
  if (values.size() != static_cast<Eigen::Index>(n_q) * order)
    throw std::invalid_argument("StateStack: expected " + std::to_string(n_q * order) +
                                " values, got " + std::to_string(values.size()));
}

Eigen::VectorBlock<const Vector> StateStack::level(int j) const {
  if (j < 0 || j >= order)
    throw std::invalid_argument("StateStack: level " + std::to_string(j) +
                                " out of range for order " + std::to_string(order));
  return values.segment(static_cast<Eigen::Index>(j) * n_q, n_q);
}

void OcpDefinition::validate() const {
  if (n_q < 1) throw std::invalid_argument(name + ": n_q must be positive");
  if (n_u < 0) throw std::invalid_argument(name + ": n_u must be nonnegative");
  if (order < 1) throw std::invalid_argument(name + ": order must be positive");
  if (!dynamics) throw std::invalid_argument(name + ": dynamics callable missing");
  if (!(t_f > 0.0)) throw std::invalid_argument(name + ": t_f must be positive");
  if (n_path > 0 && !path_constraints)
    throw std::invalid_argument(name + ": n_path > 0 without path_constraints");
  if (n_boundary > 0 && !boundary_constraints)
    throw std::invalid_argument(name + ": n_boundary > 0 without boundary_constraints");
  if (!state_bounds.empty() && static_cast<int>(state_bounds.size()) != n_x())
    throw std::invalid_argument(name + ": state_bounds must have n_x entries");
  if (!control_bounds.empty() && static_cast<int>(control_bounds.size()) != n_u)
    throw std::invalid_argument(name + ": control_bounds must have n_u entries");
  if (!coord_units.empty() && static_cast<int>(coord_units.size()) != n_q)
    throw std::invalid_argument(name + ": coord_units must have n_q entries");
  for (const Bounds& b : state_bounds)
    if (b.lo > b.hi) throw std::invalid_argument(name + ": empty state bound interval");
  for (const Bounds& b : control_bounds)
    if (b.lo > b.hi) throw std::invalid_argument(name + ": empty control bound interval");
}

Vector eval_dynamics(const OcpDefinition& ocp, const StateStack& x, const Vector& u) {
  return eval_dynamics(ocp, x.values, u, x.time);
}

Vector eval_dynamics(const OcpDefinition& ocp, const Vector& x, const Vector& u, double t) {
  if (x.size() != ocp.n_x())
    throw std::invalid_argument(ocp.name + ": state has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(ocp.n_x()));
  if (u.size() != ocp.n_u)
    throw std::invalid_argument(ocp.name + ": control has " + std::to_string(u.size()) +
                                " entries, expected " + std::to_string(ocp.n_u));
  Vector g = ocp.dynamics(x, u, t);
  if (g.size() != ocp.n_q)
    throw std::invalid_argument(ocp.name + ": dynamics returned " +
                                std::to_string(g.size()) + " entries, expected " +
                                std::to_string(ocp.n_q));
  return g;
}

OcpDefinition lift_to_first_order(const OcpDefinition& ocp) {
  ocp.validate();
  if (ocp.order == 1) return ocp;

  OcpDefinition out = ocp;
  out.name = ocp.name + "_lifted";
  out.n_q = ocp.n_x();
  out.order = 1;

  const int n_q = ocp.n_q;
  const int n_x = ocp.n_x();
  DynamicsFn g = ocp.dynamics;
  out.dynamics = [n_q, n_x, g](const Vector& x, const Vector& u, double t) {
    Vector dx(n_x);
    dx.head(n_x - n_q) = x.tail(n_x - n_q);  // shift the stack down one level
    dx.tail(n_q) = g(x, u, t);
    return dx;
  };

  // costs, bounds, boundary and path constraints act on the unchanged flat
  // state; per-coordinate units no longer describe the new configuration
  out.coord_units.clear();
  return out;
}

}  // namespace colloc
