#pragma once

#include "colloc/ocp.hpp"
#include "colloc/schemes.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace colloc {

// Uniform time grid t_k = k h, h = t_f / N.
struct Mesh {
  int N = 1;
  double t_f = 1.0;

  double h() const { return t_f / N; }
  double knot(int k) const { return k * h(); }
  double midpoint(int k) const { return k * h() + 0.5 * h(); }
};

// Maps (mesh point, role) to flat decision-vector indices. Knot blocks are
// [x; u] in mesh order. The separated Hermite-Simpson form interleaves
// midpoint blocks between knots; the compressed form keeps only midpoint
// controls and appends them after all knot blocks.
struct VariableLayout {
  int n_q = 0;
  int n_u = 0;
  int order = 1;
  int N = 0;
  bool midpoint_states = false;
  bool midpoint_controls = false;

  int n_x() const { return n_q * order; }
  int block() const { return n_x() + n_u; }
  int n_vars() const;

  int knot_state(int k, int level, int coord) const;
  int knot_control(int k, int i) const;
  int mid_state(int k, int level, int coord) const;
  int mid_control(int k, int i) const;
};

struct NlpSizes {
  int n_vars = 0;
  int n_collocation = 0;  // defect rows
  int n_boundary = 0;
  int n_eq = 0;           // n_collocation + n_boundary
  int n_ineq = 0;         // path-constraint rows; variable bounds excluded
  int n_dof = 0;          // n_vars - n_eq
};

// Nonlinear program min cost(x) s.t. eq(x) = 0, ineq(x) <= 0, bounds on x.
// eq_vars/ineq_vars list, per row, the variables the row can depend on;
// solvers may batch finite-difference columns with them. cost_terms split
// the objective into few-variable summands with sum(terms) == cost. All of
// these are optional and empty means "treat as dense".
struct Nlp {
  int n_vars = 0;
  std::function<double(const Vector&)> cost;
  std::function<Vector(const Vector&)> eq;
  std::function<Vector(const Vector&)> ineq;
  std::vector<Bounds> bounds;

  std::vector<std::vector<int>> eq_vars;
  std::vector<std::vector<int>> ineq_vars;
  struct CostTerm {
    std::function<double(const Vector&)> fn;
    std::vector<int> vars;
  };
  std::vector<CostTerm> cost_terms;

  NlpSizes sizes;
  VariableLayout layout;
};

struct TranscribeOptions {
  // evaluate path constraints at Hermite-Simpson midpoints too
  bool path_at_midpoints = false;
};

// Direct collocation transcription. The scheme order must equal the problem
// order; apply lift_to_first_order before using an order-one scheme on a
// higher-order problem.
Nlp transcribe(const OcpDefinition& ocp, const SchemeId& scheme, const Mesh& mesh,
               const TranscribeOptions& options = {});

// Objective value of a decision vector: trapezoidal (tz) or composite
// Simpson (hs) quadrature of the running cost plus the terminal cost.
double quadrature_cost(const OcpDefinition& ocp, const SchemeId& scheme,
                       const Mesh& mesh, const Vector& x);

// States linearly interpolated through the waypoints at every mesh point,
// controls zero.
Vector assemble_initial_guess(const OcpDefinition& ocp, const SchemeId& scheme,
                              const Mesh& mesh,
                              const std::vector<std::pair<double, Vector>>& waypoints);

// Continuous trajectory carried by a decision vector: dynamics are sampled
// at the stored states (midpoint states of the compressed form are
// reconstructed first) and fed to build_interpolant.
PolyTrajectory extract_trajectory(const OcpDefinition& ocp, const SchemeId& scheme,
                                  const Mesh& mesh, const Vector& x);

}  // namespace colloc
