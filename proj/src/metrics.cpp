#include "colloc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace colloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One collocation step from a known stack x_k: fixed-point iteration on the
// dynamics samples, endpoint and midpoint read off the interval polynomial.
Vector implicit_step(const OcpDefinition& work, const SchemeId& scheme,
                     const Vector& x_k, double t_k, double h) {
  const int M = work.order;
  const int nq = work.n_q;
  const int nx = work.n_x();
  const Vector u0(0);
  const Vector g_k = work.dynamics(x_k, u0, t_k);
  Vector g_k1 = g_k, g_c = g_k;
  Vector x_end(nx), x_mid(nx);
  std::array<double, kMaxOrder + 1> y{};
  std::array<double, kMaxOrder + 3> a{};

  auto rebuild = [&]() {
    for (int c = 0; c < nq; ++c) {
      for (int j = 0; j < M; ++j) y[j] = x_k[j * nq + c];
      const auto ys = std::span<const double>(y.data(), M);
      if (scheme.is_hs()) {
        hs_coeffs(M, ys, g_k[c], g_c[c], g_k1[c], h, std::span(a.data(), M + 3));
        const auto as = std::span<const double>(a.data(), M + 3);
        for (int j = 0; j < M; ++j) {
          x_end[j * nq + c] = poly_eval(as, h, j);
          x_mid[j * nq + c] = poly_eval(as, 0.5 * h, j);
        }
      } else {
        tz_coeffs(M, ys, g_k[c], g_k1[c], h, std::span(a.data(), M + 2));
        const auto as = std::span<const double>(a.data(), M + 2);
        for (int j = 0; j < M; ++j) x_end[j * nq + c] = poly_eval(as, h, j);
      }
    }
  };

  for (int it = 0; it < 200; ++it) {
    rebuild();
    const Vector g_k1_new = work.dynamics(x_end, u0, t_k + h);
    const Vector g_c_new =
        scheme.is_hs() ? work.dynamics(x_mid, u0, t_k + 0.5 * h) : g_k1_new;
    double delta = (g_k1_new - g_k1).lpNorm<Eigen::Infinity>();
    double gscale = std::max(1.0, g_k1_new.lpNorm<Eigen::Infinity>());
    if (scheme.is_hs()) {
      delta = std::max(delta, (g_c_new - g_c).lpNorm<Eigen::Infinity>());
      gscale = std::max(gscale, g_c_new.lpNorm<Eigen::Infinity>());
    }
    g_k1 = g_k1_new;
    g_c = g_c_new;
    if (delta <= 1e-15 * gscale) break;
  }
  rebuild();
  return x_end;
}

}  // namespace

Matrix dynamic_error(const PolyTrajectory& traj, const OcpDefinition& ocp, int r,
                     std::span<const double> times) {
  ocp.validate();
  if (r != 1 && r != 2) throw std::invalid_argument("derivative order r must be 1 or 2");
  const int M = ocp.order;
  const int n_q = ocp.n_q;
  const bool lifted = traj.scheme().order == 1 && M > 1;
  if (lifted) {
    if (traj.n_q() != ocp.n_x())
      throw std::invalid_argument("lifted trajectory carries " +
                                  std::to_string(traj.n_q()) + " coordinates, expected " +
                                  std::to_string(ocp.n_x()));
  } else if (traj.scheme().order != M || traj.n_q() != n_q) {
    throw std::invalid_argument("trajectory does not match the problem's order and size");
  }
  if (traj.n_u() != ocp.n_u)
    throw std::invalid_argument("trajectory and problem disagree on control size");

  Matrix out(n_q, static_cast<int>(times.size()));
  if (r == 1 && !lifted) {
    // all levels are derivatives of one polynomial; the mismatch is zero
    out.setZero();
    return out;
  }

  Vector x(ocp.n_x());
  for (int ti = 0; ti < static_cast<int>(times.size()); ++ti) {
    const double t = times[ti];
    if (r == 1) {
      for (int c = 0; c < n_q; ++c)
        out(c, ti) = traj.eval_coord(c, t, 1) - traj.eval_coord(n_q + c, t, 0);
    } else {
      for (int c = 0; c < n_q; ++c)
        for (int j = 0; j < M; ++j) x[j * n_q + c] = traj.eval_coord(c, t, j);
      const Vector g = ocp.dynamics(x, traj.control(t), t);
      for (int c = 0; c < n_q; ++c) out(c, ti) = traj.eval_coord(c, t, M) - g[c];
    }
  }
  return out;
}

ErrorReport integrate_errors(const PolyTrajectory& traj, const OcpDefinition& ocp,
                             int samples_per_interval) {
  int S = std::max(samples_per_interval, 10);
  if (S % 2 != 0) ++S;
  const int N = traj.n_intervals();
  const double h = traj.h();

  ErrorReport rep;
  rep.samples_per_interval = S;
  rep.t.resize(static_cast<size_t>(N) * S + 1);
  for (int k = 0; k < N; ++k)
    for (int s = 0; s < S; ++s)
      rep.t[static_cast<size_t>(k) * S + s] = traj.t0() + k * h + s * h / S;
  rep.t.back() = traj.t_end();

  rep.eps1 = dynamic_error(traj, ocp, 1, rep.t);
  rep.eps2 = dynamic_error(traj, ocp, 2, rep.t);

  const int n_q = ocp.n_q;
  rep.E1 = Vector::Zero(n_q);
  rep.E2 = Vector::Zero(n_q);
  const double w = h / S / 3.0;
  auto simpson = [&](const Matrix& eps, int c, int k) {
    const int base = k * S;
    double acc = std::abs(eps(c, base)) + std::abs(eps(c, base + S));
    for (int s = 1; s < S; ++s)
      acc += (s % 2 == 1 ? 4.0 : 2.0) * std::abs(eps(c, base + s));
    return w * acc;
  };
  for (int c = 0; c < n_q; ++c)
    for (int k = 0; k < N; ++k) {
      rep.E1[c] += simpson(rep.eps1, c, k);
      rep.E2[c] += simpson(rep.eps2, c, k);
    }

  rep.units = ocp.coord_units;
  rep.joint_valid = true;
  for (const std::string& u : rep.units)
    if (u != rep.units.front()) rep.joint_valid = false;
  if (rep.joint_valid) {
    rep.E1_joint = rep.E1.sum();
    rep.E2_joint = rep.E2.sum();
  }
  return rep;
}

ReferenceFn make_ode_reference(const OcpDefinition& ocp, const Vector& x0,
                               double tolerance) {
  ocp.validate();
  if (ocp.n_u != 0)
    throw std::invalid_argument("make_ode_reference handles undriven problems only");
  if (x0.size() != ocp.n_x())
    throw std::invalid_argument("x0 has " + std::to_string(x0.size()) +
                                " entries, expected " + std::to_string(ocp.n_x()));
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const OcpDefinition work = lift_to_first_order(ocp);
  auto f = [work](const Vector& x, double t) { return work.dynamics(x, Vector(0), t); };

  return [f, x0, tolerance](double t_target) -> Vector {
    if (t_target < 0.0)
      throw std::invalid_argument("reference times must be non-negative");
    Vector x = x0;
    double t = 0.0;
    double h = std::min(t_target, 1e-2);
    // Dormand-Prince 5(4), local extrapolation on the 5th-order solution
    while (t_target - t > 1e-14 * std::max(1.0, t_target)) {
      const double hs = std::min(h, t_target - t);
      const Vector k1 = f(x, t);
      const Vector k2 = f(x + hs * (k1 / 5.0), t + hs / 5.0);
      const Vector k3 = f(x + hs * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), t + 0.3 * hs);
      const Vector k4 =
          f(x + hs * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
            t + 0.8 * hs);
      const Vector k5 =
          f(x + hs * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                      64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4),
            t + 8.0 / 9.0 * hs);
      const Vector k6 =
          f(x + hs * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                      46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                      5103.0 / 18656.0 * k5),
            t + hs);
      const Vector x5 =
          x + hs * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                    2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
      const Vector k7 = f(x5, t + hs);
      const Vector x4 =
          x + hs * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 +
                    393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5 +
                    187.0 / 2100.0 * k6 + k7 / 40.0);
      double err = 0.0;
      for (int i = 0; i < x.size(); ++i)
        err = std::max(err, std::abs(x5[i] - x4[i]) /
                                (tolerance * (1.0 + std::abs(x[i]))));
      if (err <= 1.0) {
        t += hs;
        x = x5;
      }
      h = hs * std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
      if (h < 1e-14 * std::max(1.0, t))
        throw std::runtime_error("reference integrator step size underflow");
    }
    return x;
  };
}

ConvergenceTable convergence_study(const OcpDefinition& ocp, const SchemeId& scheme,
                                   std::span<const int> N_list,
                                   const ReferenceFn& reference) {
  ocp.validate();
  if (ocp.n_u != 0)
    throw std::invalid_argument("convergence_study needs an undriven problem");
  if (!reference) throw std::invalid_argument("reference function is required");
  if (N_list.empty()) throw std::invalid_argument("N_list is empty");

  OcpDefinition work = ocp;
  if (scheme.order == 1 && ocp.order > 1) {
    work = lift_to_first_order(ocp);
  } else if (scheme.order != ocp.order) {
    throw std::invalid_argument("scheme order matches neither the problem nor its lift");
  }
  const int nq = work.n_q;
  const int nx = work.n_x();

  ConvergenceTable table;
  double scale = 1.0;
  for (int N : N_list) {
    if (N < 1) throw std::invalid_argument("mesh sizes must be positive");
    const double h = ocp.t_f / N;
    double err = 0.0;
    for (int k = 0; k < N; ++k) {
      const double tk = k * h;
      const Vector xk = reference(tk);
      if (xk.size() != nx)
        throw std::invalid_argument("reference returned a stack of wrong size");
      const Vector x_end = implicit_step(work, scheme, xk, tk, h);
      const Vector x_ref = reference(tk + h);
      scale = std::max(scale, x_ref.cwiseAbs().maxCoeff());
      for (int c = 0; c < nq; ++c)
        err = std::max(err, std::abs(x_end[c] - x_ref[c]));
    }
    table.rows.push_back({N, h, err, kNaN});
  }

  const double floor = 1e-13 * scale;
  for (size_t i = 1; i < table.rows.size(); ++i) {
    const ConvergenceRow& a = table.rows[i - 1];
    ConvergenceRow& b = table.rows[i];
    if (a.err_local > floor && b.err_local > floor && a.h != b.h)
      b.slope_vs_prev =
          std::log(b.err_local / a.err_local) / std::log(b.h / a.h);
  }

  std::vector<double> lh, le;
  for (const ConvergenceRow& row : table.rows)
    if (row.err_local > floor) {
      lh.push_back(std::log(row.h));
      le.push_back(std::log(row.err_local));
    }
  table.exact = lh.empty();
  if (lh.size() >= 2) {
    double mh = 0.0, me = 0.0;
    for (size_t i = 0; i < lh.size(); ++i) {
      mh += lh[i];
      me += le[i];
    }
    mh /= lh.size();
    me /= le.size();
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lh.size(); ++i) {
      num += (lh[i] - mh) * (le[i] - me);
      den += (lh[i] - mh) * (lh[i] - mh);
    }
    if (den > 0.0) {
      table.fitted_slope = num / den;
      table.fitted_order = table.fitted_slope - 1.0;
    }
  }
  return table;
}

}  // namespace colloc
