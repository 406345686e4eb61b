#pragma once

#include "colloc/ocp.hpp"
#include "colloc/schemes.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace colloc {

// Dynamic error of a trajectory against the problem it was solved for (the
// original, unlifted one).
//
//   r = 1: d/dt of each configuration interpolant minus the trajectory's
//          independent velocity representation. Identically zero when the
//          scheme order matches the problem order (the velocity *is* that
//          derivative); for order-one schemes on lifted problems the
//          velocity block is interpolated separately and the mismatch is
//          meaningful.
//   r = 2: q^(M) of each configuration interpolant minus g evaluated on the
//          interpolated stack (all levels are derivatives of the
//          configuration interpolant) and interpolated control.
//
// Returns n_q x times.size(); knots evaluate on the interval starting there
// (except t_f).
Matrix dynamic_error(const PolyTrajectory& traj, const OcpDefinition& ocp, int r,
                     std::span<const double> times);

struct ErrorReport {
  std::vector<double> t;  // dense sample grid, N * samples_per_interval + 1
  Matrix eps1;            // n_q x t.size()
  Matrix eps2;
  Vector E1;              // per-coordinate integrals of |eps|
  Vector E2;
  double E1_joint = std::numeric_limits<double>::quiet_NaN();
  double E2_joint = std::numeric_limits<double>::quiet_NaN();
  bool joint_valid = false;  // all coordinates share one unit
  std::vector<std::string> units;
  int samples_per_interval = 0;
};

// Integrates |eps| per coordinate with composite Simpson quadrature on a
// per-interval subgrid. samples_per_interval is rounded up to an even value
// of at least 10 so the grid keeps >= 10 N samples. Joint errors (the sum
// over coordinates) are reported only when every coordinate has the same
// unit.
ErrorReport integrate_errors(const PolyTrajectory& traj, const OcpDefinition& ocp,
                             int samples_per_interval = 64);

// Reference solution for local-error studies: full derivative stack
// (M levels, level-major) of the exact trajectory at time t.
using ReferenceFn = std::function<Vector(double)>;

// Fine-mesh oracle for undriven problems without a closed form: adaptive
// Runge-Kutta integration of the lifted dynamics from stack x0 at t = 0.
ReferenceFn make_ode_reference(const OcpDefinition& ocp, const Vector& x0,
                               double tolerance = 1e-12);

struct ConvergenceRow {
  int N = 0;
  double h = 0.0;
  double err_local = 0.0;    // max over intervals of the endpoint error
  double slope_vs_prev = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double fitted_order = std::numeric_limits<double>::quiet_NaN();  // slope - 1
  bool exact = false;  // all errors at rounding level; no fit attempted
};

// Single-interval accuracy study on an undriven problem: every interval of
// each mesh starts on the reference solution, runs one implicit collocation
// step (fixed-point iteration on the dynamics samples), and the largest
// configuration endpoint error is recorded. The fitted slope is the
// least-squares slope of log err against log h.
ConvergenceTable convergence_study(const OcpDefinition& ocp, const SchemeId& scheme,
                                   std::span<const int> N_list,
                                   const ReferenceFn& reference);

}  // namespace colloc
