#pragma once

#include "colloc/transcribe.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace colloc {

struct FiniteDiffOptions {
  // relative step; the per-variable step is step * max(1, |x_i|)
  double step = std::cbrt(std::numeric_limits<double>::epsilon());
};

// Central differences. Throws std::runtime_error naming the variable if an
// evaluation comes back non-finite.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& fn,
                            const Vector& x, const FiniteDiffOptions& options = {});
Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                            const Vector& x, const FiniteDiffOptions& options = {});

enum class SolveStatus { Converged, MaxIters, Diverged };

const char* to_string(SolveStatus status);

struct SolveOptions {
  double kkt_tol = 1e-7;
  int max_outer_iters = 60;
  int max_inner_iters = 400;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e5;  // the inner iteration degrades as the penalty grows
  double fd_step = std::cbrt(std::numeric_limits<double>::epsilon());
  int lbfgs_memory = 20;
  bool verbose = false;
};

struct Solution {
  Vector x;
  double cost = 0.0;
  SolveStatus status = SolveStatus::MaxIters;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double constraint_violation = std::numeric_limits<double>::infinity();
  Vector eq_multipliers;
  Vector ineq_multipliers;
  Vector bound_lo_multipliers;
  Vector bound_hi_multipliers;
  int iterations = 0;  // outer iterations
  long long inner_iterations = 0;
};

// Augmented-Lagrangian method: outer multiplier/penalty updates around an
// L-BFGS inner minimization with backtracking line search. Equalities enter
// as lambda c + mu/2 c^2, inequalities and variable bounds as squared
// hinges. All derivatives come from central finite differences; declared
// row sparsity and cost terms only batch the probes. Deterministic: equal
// inputs give bitwise-equal solutions.
Solution solve(const Nlp& nlp, const Vector& x0, const SolveOptions& options = {});

}  // namespace colloc
