#include "colloc/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace colloc {

namespace {

[[noreturn]] void throw_nonfinite(int variable) {
  throw std::runtime_error("finite difference probe at variable " +
                           std::to_string(variable) + " returned a non-finite value");
}

// Jacobian with declared row sparsity. Columns sharing a row are kept in
// different color groups, so one forward/backward probe pair per group
// recovers every column in it.
struct ColoredJac {
  int m = 0;
  std::vector<int> row_ptr, col_idx;                        // CSR
  std::vector<double> vals;
  std::vector<std::vector<int>> color_cols;                 // probe groups
  std::vector<std::vector<std::pair<int, int>>> col_slots;  // per column: (row, slot)
};

ColoredJac build_pattern(const std::vector<std::vector<int>>& rows, int n) {
  ColoredJac J;
  J.m = static_cast<int>(rows.size());
  J.row_ptr.assign(J.m + 1, 0);
  std::vector<std::vector<int>> rv(J.m);
  for (int r = 0; r < J.m; ++r) {
    rv[r] = rows[r];
    std::sort(rv[r].begin(), rv[r].end());
    rv[r].erase(std::unique(rv[r].begin(), rv[r].end()), rv[r].end());
    for (int j : rv[r])
      if (j < 0 || j >= n)
        throw std::invalid_argument("sparsity row " + std::to_string(r) +
                                    " names variable " + std::to_string(j) +
                                    " outside the decision vector");
    J.row_ptr[r + 1] = J.row_ptr[r] + static_cast<int>(rv[r].size());
  }
  J.col_idx.reserve(J.row_ptr[J.m]);
  for (const auto& row : rv) J.col_idx.insert(J.col_idx.end(), row.begin(), row.end());
  J.vals.assign(J.col_idx.size(), 0.0);

  J.col_slots.assign(n, {});
  for (int r = 0; r < J.m; ++r)
    for (int s = J.row_ptr[r]; s < J.row_ptr[r + 1]; ++s)
      J.col_slots[J.col_idx[s]].push_back({r, s});

  std::vector<int> color(n, -1);
  std::vector<int> stamp(n + 1, -1);
  int n_colors = 0;
  for (int j = 0; j < n; ++j) {
    if (J.col_slots[j].empty()) continue;  // never probed
    for (const auto& [r, slot] : J.col_slots[j])
      for (int s = J.row_ptr[r]; s < J.row_ptr[r + 1]; ++s) {
        const int c = color[J.col_idx[s]];
        if (c >= 0) stamp[c] = j;
      }
    int c = 0;
    while (stamp[c] == j) ++c;
    color[j] = c;
    n_colors = std::max(n_colors, c + 1);
  }
  J.color_cols.assign(n_colors, {});
  for (int j = 0; j < n; ++j)
    if (color[j] >= 0) J.color_cols[color[j]].push_back(j);
  return J;
}

void eval_colored(ColoredJac& J, const std::function<Vector(const Vector&)>& fn,
                  const Vector& x, double rel_step) {
  Vector xp = x, xm = x;
  for (const auto& cols : J.color_cols) {
    for (int j : cols) {
      const double hj = rel_step * std::max(1.0, std::abs(x[j]));
      xp[j] = x[j] + hj;
      xm[j] = x[j] - hj;
    }
    const Vector fp = fn(xp);
    const Vector fm = fn(xm);
    if (fp.size() != J.m || fm.size() != J.m)
      throw std::runtime_error("constraint function changed its row count");
    for (int j : cols) {
      const double hj = rel_step * std::max(1.0, std::abs(x[j]));
      for (const auto& [r, slot] : J.col_slots[j]) {
        const double d = (fp[r] - fm[r]) / (2.0 * hj);
        if (!std::isfinite(d)) throw_nonfinite(j);
        J.vals[slot] = d;
      }
      xp[j] = x[j];
      xm[j] = x[j];
    }
  }
}

void add_jt_y(const ColoredJac& J, const Vector& y, Vector& out) {
  for (int r = 0; r < J.m; ++r)
    for (int s = J.row_ptr[r]; s < J.row_ptr[r + 1]; ++s)
      out[J.col_idx[s]] += J.vals[s] * y[r];
}

double hinge_val(double sig, double mu, double g) {
  const double t = std::max(0.0, sig + mu * g);
  return (t * t - sig * sig) / (2.0 * mu);
}

struct AlContext {
  AlContext(const Nlp& nlp_in, const SolveOptions& opts_in)
      : nlp(nlp_in), opts(opts_in) {}

  const Nlp& nlp;
  const SolveOptions& opts;
  int n = 0;
  int m_eq = 0, m_ineq = 0;
  bool colored_eq = false, colored_ineq = false;
  ColoredJac Jeq, Jineq;
  bool has_bounds = false;

  Vector lambda, sigma, sig_lo, sig_hi;
  double mu = 1.0;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> metric;
  bool metric_ok = false;

  // Second differences of the cost diagonal, for the tangential part of
  // the curvature metric. Negative estimates are dropped.
  Vector cost_diag(const Vector& x) const {
    const double rel = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    Vector d = Vector::Zero(n);
    Vector xp = x;
    auto accumulate = [&](const std::function<double(const Vector&)>& fn,
                          const std::vector<int>& vars) {
      const double f0 = fn(x);
      for (int i : vars) {
        const double hi = rel * std::max(1.0, std::abs(x[i]));
        const double xi = x[i];
        xp[i] = xi + hi;
        const double fp = fn(xp);
        xp[i] = xi - hi;
        const double fm = fn(xp);
        xp[i] = xi;
        if (std::isfinite(fp) && std::isfinite(fm))
          d[i] += std::max(0.0, (fp - 2.0 * f0 + fm) / (hi * hi));
      }
    };
    if (!nlp.cost_terms.empty()) {
      for (const auto& term : nlp.cost_terms) accumulate(term.fn, term.vars);
    } else {
      std::vector<int> all(n);
      for (int i = 0; i < n; ++i) all[i] = i;
      accumulate(nlp.cost, all);
    }
    return d;
  }

  // Gauss-Newton model of the augmented-Lagrangian curvature, used as the
  // L-BFGS initial metric. The penalty block mu*J^T J is what makes the
  // inner iteration hopelessly stiff once mu grows; factoring it out
  // leaves only the tangential subspace for the quasi-Newton pairs.
  void update_metric(const Vector& x) {
    const FiniteDiffOptions fd{opts.fd_step};
    std::vector<Eigen::Triplet<double>> trips;
    Vector diag = cost_diag(x);
    diag.array() += 1e-6;

    auto add_colored = [&](const ColoredJac& J, const Vector* activity) {
      for (int r = 0; r < J.m; ++r) {
        if (activity && (*activity)[r] <= 0.0) continue;
        for (int s1 = J.row_ptr[r]; s1 < J.row_ptr[r + 1]; ++s1)
          for (int s2 = J.row_ptr[r]; s2 < J.row_ptr[r + 1]; ++s2)
            trips.emplace_back(J.col_idx[s1], J.col_idx[s2],
                               mu * J.vals[s1] * J.vals[s2]);
      }
    };
    auto add_dense = [&](const Matrix& J, const Vector* activity) {
      for (int r = 0; r < static_cast<int>(J.rows()); ++r) {
        if (activity && (*activity)[r] <= 0.0) continue;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            trips.emplace_back(i, j, mu * J(r, i) * J(r, j));
      }
    };

    if (m_eq > 0) {
      if (colored_eq) {
        eval_colored(Jeq, nlp.eq, x, opts.fd_step);
        add_colored(Jeq, nullptr);
      } else {
        add_dense(finite_diff_jacobian(nlp.eq, x, fd), nullptr);
      }
    }
    if (m_ineq > 0) {
      const Vector g = nlp.ineq(x);
      Vector act(m_ineq);
      for (int r = 0; r < m_ineq; ++r) act[r] = sigma[r] + mu * g[r];
      if (colored_ineq) {
        eval_colored(Jineq, nlp.ineq, x, opts.fd_step);
        add_colored(Jineq, &act);
      } else {
        add_dense(finite_diff_jacobian(nlp.ineq, x, fd), &act);
      }
    }
    if (has_bounds)
      for (int i = 0; i < n; ++i) {
        const Bounds& b = nlp.bounds[i];
        if (b.has_lo() && sig_lo[i] + mu * (b.lo - x[i]) > 0.0) diag[i] += mu;
        if (b.has_hi() && sig_hi[i] + mu * (x[i] - b.hi) > 0.0) diag[i] += mu;
      }
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, diag[i]);

    Eigen::SparseMatrix<double> H(n, n);
    H.setFromTriplets(trips.begin(), trips.end());
    metric.compute(H);
    metric_ok = metric.info() == Eigen::Success;
  }

  Vector cost_grad(const Vector& x) const {
    const FiniteDiffOptions fd{opts.fd_step};
    if (nlp.cost_terms.empty()) return finite_diff_gradient(nlp.cost, x, fd);
    Vector g = Vector::Zero(n);
    Vector xp = x;
    for (const auto& term : nlp.cost_terms)
      for (int i : term.vars) {
        const double hi = opts.fd_step * std::max(1.0, std::abs(x[i]));
        const double xi = x[i];
        xp[i] = xi + hi;
        const double fp = term.fn(xp);
        xp[i] = xi - hi;
        const double fm = term.fn(xp);
        xp[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm)) throw_nonfinite(i);
        g[i] += (fp - fm) / (2.0 * hi);
      }
    return g;
  }

  double bound_terms(const Vector& x, Vector* grad) const {
    if (!has_bounds) return 0.0;
    double val = 0.0;
    for (int i = 0; i < n; ++i) {
      const Bounds& b = nlp.bounds[i];
      if (b.has_lo()) {
        val += hinge_val(sig_lo[i], mu, b.lo - x[i]);
        if (grad) (*grad)[i] -= std::max(0.0, sig_lo[i] + mu * (b.lo - x[i]));
      }
      if (b.has_hi()) {
        val += hinge_val(sig_hi[i], mu, x[i] - b.hi);
        if (grad) (*grad)[i] += std::max(0.0, sig_hi[i] + mu * (x[i] - b.hi));
      }
    }
    return val;
  }

  double value(const Vector& x) const {
    double val = nlp.cost(x);
    if (m_eq > 0) {
      const Vector c = nlp.eq(x);
      val += lambda.dot(c) + 0.5 * mu * c.squaredNorm();
    }
    if (m_ineq > 0) {
      const Vector g = nlp.ineq(x);
      for (int j = 0; j < m_ineq; ++j) val += hinge_val(sigma[j], mu, g[j]);
    }
    return val + bound_terms(x, nullptr);
  }

  double value_and_grad(const Vector& x, Vector& grad) {
    const FiniteDiffOptions fd{opts.fd_step};
    grad = cost_grad(x);
    double val = nlp.cost(x);
    if (m_eq > 0) {
      const Vector c = nlp.eq(x);
      val += lambda.dot(c) + 0.5 * mu * c.squaredNorm();
      const Vector w = lambda + mu * c;
      if (colored_eq) {
        eval_colored(Jeq, nlp.eq, x, opts.fd_step);
        add_jt_y(Jeq, w, grad);
      } else {
        const Matrix J = finite_diff_jacobian(nlp.eq, x, fd);
        grad.noalias() += J.transpose() * w;
      }
    }
    if (m_ineq > 0) {
      const Vector g = nlp.ineq(x);
      Vector w(m_ineq);
      for (int j = 0; j < m_ineq; ++j) {
        val += hinge_val(sigma[j], mu, g[j]);
        w[j] = std::max(0.0, sigma[j] + mu * g[j]);
      }
      if (colored_ineq) {
        eval_colored(Jineq, nlp.ineq, x, opts.fd_step);
        add_jt_y(Jineq, w, grad);
      } else {
        const Matrix J = finite_diff_jacobian(nlp.ineq, x, fd);
        grad.noalias() += J.transpose() * w;
      }
    }
    return val + bound_terms(x, &grad);
  }

  double violation(const Vector& x) const {
    double v = 0.0;
    if (m_eq > 0) v = nlp.eq(x).cwiseAbs().maxCoeff();
    if (m_ineq > 0) v = std::max(v, std::max(0.0, nlp.ineq(x).maxCoeff()));
    if (has_bounds)
      for (int i = 0; i < n; ++i) {
        const Bounds& b = nlp.bounds[i];
        if (b.has_lo()) v = std::max(v, b.lo - x[i]);
        if (b.has_hi()) v = std::max(v, x[i] - b.hi);
      }
    return v;
  }
};

struct LbfgsPair {
  Vector s, y;
  double rho;
};

Vector lbfgs_direction(const std::deque<LbfgsPair>& mem, const Vector& grad,
                       const AlContext& al) {
  auto apply_h0 = [&](const Vector& q) -> Vector {
    if (al.metric_ok) return al.metric.solve(q);
    return q;
  };
  if (mem.empty()) return -apply_h0(grad);
  Vector q = grad;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  q = apply_h0(q);
  for (size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

struct InnerResult {
  double phi = 0.0;
  Vector grad;
  bool line_search_failed = false;
};

// L-BFGS descent on the augmented Lagrangian with Armijo backtracking.
// The pair memory belongs to the caller so a subproblem whose budget ran
// out can be continued without losing the curvature model.
InnerResult minimize_inner(AlContext& al, Vector& x, double tol, int max_iter,
                           long long& accepted_steps, std::deque<LbfgsPair>& mem) {
  constexpr double kArmijoC1 = 1e-4;
  constexpr double kStepFloor = 1e-14;
  InnerResult out;
  al.update_metric(x);
  out.phi = al.value_and_grad(x, out.grad);

  int it = 0;
  while (it < max_iter && out.grad.lpNorm<Eigen::Infinity>() > tol) {
    Vector d = lbfgs_direction(mem, out.grad, al);
    double gd = out.grad.dot(d);
    if (!(gd < 0.0)) {  // memory produced a non-descent direction
      mem.clear();
      al.update_metric(x);
      d = lbfgs_direction(mem, out.grad, al);
      gd = out.grad.dot(d);
      if (!(gd < 0.0)) break;  // gradient is zero (or non-finite)
    }
    double t = mem.empty()
                   ? std::min(1.0, 1.0 / std::max(1.0, d.lpNorm<Eigen::Infinity>()))
                   : 1.0;
    const double slack = 1e-14 * (std::abs(out.phi) + 1.0);
    Vector x_new;
    double phi_new = 0.0;
    bool accepted = false;
    while (t >= kStepFloor) {
      x_new = x + t * d;
      phi_new = al.value(x_new);
      if (std::isfinite(phi_new) && phi_new <= out.phi + kArmijoC1 * t * gd + slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!mem.empty()) {  // discard the curvature model and retry from scratch
        mem.clear();
        al.update_metric(x);
        ++it;
        continue;
      }
      out.line_search_failed = true;
      break;
    }

    Vector grad_new;
    const double phi_check = al.value_and_grad(x_new, grad_new);
    const Vector s = x_new - x;
    const Vector yv = grad_new - out.grad;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      mem.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(mem.size()) > std::max(1, al.opts.lbfgs_memory))
        mem.pop_front();
    }
    x = x_new;
    out.phi = phi_check;
    out.grad = std::move(grad_new);
    ++it;
    ++accepted_steps;
  }
  return out;
}

}  // namespace

Vector finite_diff_gradient(const std::function<double(const Vector&)>& fn,
                            const Vector& x, const FiniteDiffOptions& options) {
  Vector g(x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double hi = options.step * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + hi;
    const double fp = fn(xp);
    xp[i] = xi - hi;
    const double fm = fn(xp);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw_nonfinite(i);
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                            const Vector& x, const FiniteDiffOptions& options) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double hi = options.step * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + hi;
    const Vector fp = fn(xp);
    xp[i] = xi - hi;
    const Vector fm = fn(xp);
    xp[i] = xi;
    if (fp.size() != f0.size() || fm.size() != f0.size())
      throw std::runtime_error("function changed its row count between probes");
    if (!fp.allFinite() || !fm.allFinite()) throw_nonfinite(i);
    J.col(i) = (fp - fm) / (2.0 * hi);
  }
  return J;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

Solution solve(const Nlp& nlp, const Vector& x0, const SolveOptions& options) {
  if (!nlp.cost) throw std::invalid_argument("nlp.cost is required");
  const int n = static_cast<int>(x0.size());
  if (nlp.n_vars > 0 && n != nlp.n_vars)
    throw std::invalid_argument("initial point has " + std::to_string(n) +
                                " entries, expected " + std::to_string(nlp.n_vars));
  if (!nlp.bounds.empty() && static_cast<int>(nlp.bounds.size()) != n)
    throw std::invalid_argument("bounds list does not match the decision vector");

  AlContext al(nlp, options);
  al.n = n;
  al.m_eq = nlp.eq ? static_cast<int>(nlp.eq(x0).size()) : 0;
  al.m_ineq = nlp.ineq ? static_cast<int>(nlp.ineq(x0).size()) : 0;
  al.has_bounds = false;
  for (const Bounds& b : nlp.bounds)
    if (b.has_lo() || b.has_hi()) al.has_bounds = true;

  Solution sol;
  sol.x = x0;
  sol.eq_multipliers = Vector::Zero(al.m_eq);
  sol.ineq_multipliers = Vector::Zero(al.m_ineq);
  sol.bound_lo_multipliers = Vector::Zero(n);
  sol.bound_hi_multipliers = Vector::Zero(n);

  // non-finite values at the guess cannot be recovered from
  {
    bool finite = std::isfinite(nlp.cost(x0)) && x0.allFinite();
    if (finite && al.m_eq > 0) finite = nlp.eq(x0).allFinite();
    if (finite && al.m_ineq > 0) finite = nlp.ineq(x0).allFinite();
    if (!finite) {
      sol.status = SolveStatus::Diverged;
      sol.cost = nlp.cost(x0);
      return sol;
    }
  }

  if (al.m_eq > 0 && static_cast<int>(nlp.eq_vars.size()) == al.m_eq) {
    al.Jeq = build_pattern(nlp.eq_vars, n);
    al.colored_eq = true;
  }
  if (al.m_ineq > 0 && static_cast<int>(nlp.ineq_vars.size()) == al.m_ineq) {
    al.Jineq = build_pattern(nlp.ineq_vars, n);
    al.colored_ineq = true;
  }

  al.lambda = Vector::Zero(al.m_eq);
  al.sigma = Vector::Zero(al.m_ineq);
  al.sig_lo = Vector::Zero(n);
  al.sig_hi = Vector::Zero(n);
  al.mu = options.penalty_init;

  const double omega_floor = 0.3 * options.kkt_tol;
  const double eta_goal = 0.1 * options.kkt_tol;
  const double mu_max = std::max(options.penalty_max, options.penalty_init);
  const double mult_max = 1e10;
  const bool has_constraints = al.m_eq > 0 || al.m_ineq > 0 || al.has_bounds;
  double omega = has_constraints ? 0.1 : omega_floor;

  Vector x = x0;
  if (al.has_bounds)
    for (int i = 0; i < n; ++i)
      x[i] = std::clamp(x[i], nlp.bounds[i].lo, nlp.bounds[i].hi);

  sol.status = SolveStatus::MaxIters;
  double v_prev = std::numeric_limits<double>::infinity();
  std::deque<LbfgsPair> mem;

  try {
    for (int outer = 1; outer <= options.max_outer_iters; ++outer) {
      const InnerResult inner = minimize_inner(
          al, x, omega, options.max_inner_iters, sol.inner_iterations, mem);
      const double kkt = inner.grad.lpNorm<Eigen::Infinity>();
      const double v = al.violation(x);
      sol.iterations = outer;
      sol.kkt_residual = kkt;
      sol.constraint_violation = v;

      if (options.verbose)
        std::fprintf(stderr,
                     "outer %3d  mu %.1e  omega %.1e  kkt %.3e  viol %.3e%s\n",
                     outer, al.mu, omega, kkt, v,
                     inner.line_search_failed ? "  [line search stalled]" : "");

      const bool converged = kkt <= options.kkt_tol && v <= eta_goal;

      // an uncertified inner solve means the subproblem needs more budget;
      // updating multipliers from a non-stationary point would poison them,
      // so carry (lambda, mu, omega) into the next outer iteration unchanged
      if (kkt > omega && !converged) continue;

      // the multiplier and penalty updates below change the function the
      // inner iteration minimizes, so its curvature memory goes stale
      mem.clear();

      if (al.m_eq > 0) {
        const Vector c = nlp.eq(x);
        al.lambda = (al.lambda + al.mu * c).cwiseMax(-mult_max).cwiseMin(mult_max);
      }
      if (al.m_ineq > 0) {
        const Vector g = nlp.ineq(x);
        al.sigma = (al.sigma + al.mu * g).cwiseMax(0.0).cwiseMin(mult_max);
      }
      if (al.has_bounds)
        for (int i = 0; i < n; ++i) {
          const Bounds& b = nlp.bounds[i];
          if (b.has_lo())
            al.sig_lo[i] =
                std::clamp(al.sig_lo[i] + al.mu * (b.lo - x[i]), 0.0, mult_max);
          if (b.has_hi())
            al.sig_hi[i] =
                std::clamp(al.sig_hi[i] + al.mu * (x[i] - b.hi), 0.0, mult_max);
        }
      if (converged) {
        sol.status = SolveStatus::Converged;
        break;
      }

      // grow the penalty unless feasibility is already contracting sharply;
      // the cap keeps the inner problem within quasi-Newton reach
      if (v > eta_goal && v > 0.05 * v_prev)
        al.mu = std::min(al.mu * options.penalty_growth, mu_max);
      v_prev = v;
      // pace the inner tolerance by the measured feasibility so early
      // subproblems are not solved more precisely than the multipliers merit
      omega = std::max(omega_floor, std::min(0.2 * omega, 0.1 * v));
    }
  } catch (const std::runtime_error&) {
    // non-finite values during iteration; report the best iterate so far
    sol.status = SolveStatus::Diverged;
  }

  sol.x = x;
  sol.cost = nlp.cost(x);
  sol.eq_multipliers = al.lambda;
  sol.ineq_multipliers = al.sigma;
  sol.bound_lo_multipliers = al.sig_lo;
  sol.bound_hi_multipliers = al.sig_hi;
  return sol;
}

}  // namespace colloc
