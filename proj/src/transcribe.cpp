#include "colloc/transcribe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace colloc {

int VariableLayout::n_vars() const {
  if (midpoint_states) return (2 * N + 1) * block();
  if (midpoint_controls) return (N + 1) * block() + N * n_u;
  return (N + 1) * block();
}

int VariableLayout::knot_state(int k, int level, int coord) const {
  const int point = midpoint_states ? 2 * k : k;
  return point * block() + level * n_q + coord;
}

int VariableLayout::knot_control(int k, int i) const {
  const int point = midpoint_states ? 2 * k : k;
  return point * block() + n_x() + i;
}

int VariableLayout::mid_state(int k, int level, int coord) const {
  return (2 * k + 1) * block() + level * n_q + coord;
}

int VariableLayout::mid_control(int k, int i) const {
  if (midpoint_states) return (2 * k + 1) * block() + n_x() + i;
  return (N + 1) * block() + k * n_u + i;
}

namespace {

enum class Mode { Tz, HsSeparated, HsCompressed };

struct QPoint {
  bool mid = false;
  int k = 0;  // knot index, or interval index for midpoints
  double t = 0.0;
  double w = 0.0;
};

struct Context {
  OcpDefinition ocp;
  SchemeId scheme;
  Mesh mesh;
  TranscribeOptions options;
  Mode mode = Mode::Tz;
  VariableLayout layout;
  NlpSizes sizes;
  std::vector<QPoint> qpoints;

  int M() const { return ocp.order; }
  int n_q() const { return ocp.n_q; }
  int n_u() const { return ocp.n_u; }
  int n_x() const { return ocp.n_x(); }
  int N() const { return mesh.N; }
  double h() const { return mesh.h(); }

  int defect_rows() const { return (mode == Mode::HsSeparated ? 2 : 1) * n_x(); }
  int row_end(int k, int level, int coord) const {
    return k * defect_rows() + level * n_q() + coord;
  }
  int row_mid(int k, int level, int coord) const {
    return k * defect_rows() + n_x() + level * n_q() + coord;
  }

  void knot_stack(const Vector& z, int k, int c, std::span<double> buf) const {
    const int base = layout.knot_state(k, 0, c);
    for (int j = 0; j < M(); ++j) buf[j] = z[base + j * n_q()];
  }
  Vector knot_x(const Vector& z, int k) const {
    return z.segment(layout.knot_state(k, 0, 0), n_x());
  }
  Vector knot_u(const Vector& z, int k) const {
    if (n_u() == 0) return Vector(0);
    return z.segment(layout.knot_control(k, 0), n_u());
  }
  Vector mid_u(const Vector& z, int k) const {
    if (n_u() == 0) return Vector(0);
    return z.segment(layout.mid_control(k, 0), n_u());
  }
  Vector stored_mid_x(const Vector& z, int k) const {
    return z.segment(layout.mid_state(k, 0, 0), n_x());
  }

  Matrix eval_g_knots(const Vector& z) const {
    Matrix g(n_q(), N() + 1);
    for (int k = 0; k <= N(); ++k) {
      Vector gk = ocp.dynamics(knot_x(z, k), knot_u(z, k), mesh.knot(k));
      if (gk.size() != n_q())
        throw std::invalid_argument(ocp.name + ": dynamics returned " +
                                    std::to_string(gk.size()) + " entries, expected " +
                                    std::to_string(n_q()));
      g.col(k) = gk;
    }
    return g;
  }

  // midpoint state of interval k in the compressed form, rebuilt from knot data
  Vector compressed_mid_x(const Vector& z, int k, const Eigen::Ref<const Vector>& g_k,
                          const Eigen::Ref<const Vector>& g_k1) const {
    Vector xc(n_x());
    std::array<double, kMaxOrder + 1> y{};
    std::array<double, kMaxOrder + 3> a{};
    for (int c = 0; c < n_q(); ++c) {
      knot_stack(z, k, c, std::span(y.data(), M()));
      const double y_top_k1 = z[layout.knot_state(k + 1, M() - 1, c)];
      const double gc = hs_eliminate_gc(y[M() - 1], y_top_k1, g_k[c], g_k1[c], h());
      hs_coeffs(M(), std::span<const double>(y.data(), M()), g_k[c], gc, g_k1[c], h(),
                std::span(a.data(), M() + 3));
      for (int j = 0; j < M(); ++j)
        xc[j * n_q() + c] =
            poly_eval(std::span<const double>(a.data(), M() + 3), 0.5 * h(), j);
    }
    return xc;
  }

  Vector mid_x(const Vector& z, int k, const Matrix& g_knots) const {
    if (mode == Mode::HsSeparated) return stored_mid_x(z, k);
    return compressed_mid_x(z, k, g_knots.col(k), g_knots.col(k + 1));
  }

  double point_L(const Vector& z, const QPoint& p, const Matrix* g_knots) const {
    if (!p.mid)
      return ocp.running_cost(knot_x(z, p.k), knot_u(z, p.k), p.t);
    Vector xc;
    if (mode == Mode::HsSeparated) {
      xc = stored_mid_x(z, p.k);
    } else if (g_knots) {
      xc = compressed_mid_x(z, p.k, g_knots->col(p.k), g_knots->col(p.k + 1));
    } else {
      const Vector g_k =
          ocp.dynamics(knot_x(z, p.k), knot_u(z, p.k), mesh.knot(p.k));
      const Vector g_k1 =
          ocp.dynamics(knot_x(z, p.k + 1), knot_u(z, p.k + 1), mesh.knot(p.k + 1));
      xc = compressed_mid_x(z, p.k, g_k, g_k1);
    }
    return ocp.running_cost(xc, mid_u(z, p.k), p.t);
  }

  double eval_cost(const Vector& z) const {
    double f = 0.0;
    if (ocp.running_cost) {
      Matrix g_knots;
      const Matrix* gp = nullptr;
      if (mode == Mode::HsCompressed) {
        g_knots = eval_g_knots(z);
        gp = &g_knots;
      }
      for (const QPoint& p : qpoints) f += p.w * point_L(z, p, gp);
    }
    if (ocp.terminal_cost) f += ocp.terminal_cost(knot_x(z, N()), mesh.t_f);
    return f;
  }

  Vector eval_eq(const Vector& z) const {
    Vector res(sizes.n_eq);
    const Matrix g_knots = eval_g_knots(z);
    std::array<double, kMaxOrder + 1> y{}, y1{}, end{}, midv{};
    const int Mo = M();
    const int nq = n_q();
    const double hh = h();
    auto ys = std::span<const double>(y.data(), Mo);

    if (mode == Mode::Tz) {
      for (int k = 0; k < N(); ++k)
        for (int c = 0; c < nq; ++c) {
          knot_stack(z, k, c, std::span(y.data(), Mo));
          tz_step_into(Mo, ys, g_knots(c, k), g_knots(c, k + 1), hh,
                       std::span(end.data(), Mo));
          for (int j = 0; j < Mo; ++j)
            res[row_end(k, j, c)] = z[layout.knot_state(k + 1, j, c)] - end[j];
        }
    } else if (mode == Mode::HsSeparated) {
      for (int k = 0; k < N(); ++k) {
        const Vector g_c =
            ocp.dynamics(stored_mid_x(z, k), mid_u(z, k), mesh.midpoint(k));
        for (int c = 0; c < nq; ++c) {
          knot_stack(z, k, c, std::span(y.data(), Mo));
          knot_stack(z, k + 1, c, std::span(y1.data(), Mo));
          hs_step_into(Mo, ys, std::span<const double>(y1.data(), Mo), g_knots(c, k),
                       g_c[c], g_knots(c, k + 1), hh, HsMidpoint::EliminatedAccel,
                       std::span(end.data(), Mo), std::span(midv.data(), Mo));
          for (int j = 0; j < Mo; ++j) {
            res[row_end(k, j, c)] = z[layout.knot_state(k + 1, j, c)] - end[j];
            res[row_mid(k, j, c)] = z[layout.mid_state(k, j, c)] - midv[j];
          }
        }
      }
    } else {
      std::array<double, kMaxOrder + 3> a{};
      for (int k = 0; k < N(); ++k) {
        const Vector xc = compressed_mid_x(z, k, g_knots.col(k), g_knots.col(k + 1));
        const Vector g_c = ocp.dynamics(xc, mid_u(z, k), mesh.midpoint(k));
        for (int c = 0; c < nq; ++c) {
          knot_stack(z, k, c, std::span(y.data(), Mo));
          hs_coeffs(Mo, ys, g_knots(c, k), g_c[c], g_knots(c, k + 1), hh,
                    std::span(a.data(), Mo + 3));
          for (int j = 0; j < Mo; ++j)
            res[row_end(k, j, c)] =
                z[layout.knot_state(k + 1, j, c)] -
                poly_eval(std::span<const double>(a.data(), Mo + 3), hh, j);
        }
      }
    }

    if (sizes.n_boundary > 0) {
      Vector b = ocp.boundary_constraints(knot_x(z, 0), knot_x(z, N()), mesh.t_f);
      if (b.size() != sizes.n_boundary)
        throw std::invalid_argument(ocp.name + ": boundary_constraints returned " +
                                    std::to_string(b.size()) + " rows, expected " +
                                    std::to_string(sizes.n_boundary));
      res.tail(sizes.n_boundary) = b;
    }
    return res;
  }

  Vector path_rows(const Vector& x, const Vector& u) const {
    Vector p = ocp.path_constraints(x, u);
    if (p.size() != ocp.n_path)
      throw std::invalid_argument(ocp.name + ": path_constraints returned " +
                                  std::to_string(p.size()) + " rows, expected " +
                                  std::to_string(ocp.n_path));
    return p;
  }

  Vector eval_ineq(const Vector& z) const {
    Vector res(sizes.n_ineq);
    int row = 0;
    for (int k = 0; k <= N(); ++k) {
      res.segment(row, ocp.n_path) = path_rows(knot_x(z, k), knot_u(z, k));
      row += ocp.n_path;
    }
    if (row < sizes.n_ineq) {
      const Matrix g_knots =
          mode == Mode::HsCompressed ? eval_g_knots(z) : Matrix();
      for (int k = 0; k < N(); ++k) {
        res.segment(row, ocp.n_path) = path_rows(mid_x(z, k, g_knots), mid_u(z, k));
        row += ocp.n_path;
      }
    }
    return res;
  }
};

std::shared_ptr<const Context> make_context(const OcpDefinition& ocp,
                                            const SchemeId& scheme, const Mesh& mesh,
                                            const TranscribeOptions& options) {
  ocp.validate();
  if (mesh.N < 1) throw std::invalid_argument("mesh needs at least one interval");
  if (!(mesh.t_f > 0.0)) throw std::invalid_argument("final time must be positive");
  if (scheme.order != ocp.order)
    throw std::invalid_argument(
        "scheme " + scheme.name() + " integrates order-" + std::to_string(scheme.order) +
        " dynamics but problem '" + ocp.name + "' has order " +
        std::to_string(ocp.order) + "; lift_to_first_order converts the problem");
  if (scheme.order > kMaxOrder)
    throw std::invalid_argument("scheme order exceeds the supported maximum");

  auto ctx = std::make_shared<Context>();
  ctx->ocp = ocp;
  ctx->scheme = scheme;
  ctx->mesh = mesh;
  ctx->options = options;
  ctx->mode = !scheme.is_hs()             ? Mode::Tz
              : scheme.hs_form == HsForm::Separated ? Mode::HsSeparated
                                                    : Mode::HsCompressed;

  VariableLayout& L = ctx->layout;
  L.n_q = ocp.n_q;
  L.n_u = ocp.n_u;
  L.order = ocp.order;
  L.N = mesh.N;
  L.midpoint_states = ctx->mode == Mode::HsSeparated;
  L.midpoint_controls = scheme.is_hs();

  NlpSizes& s = ctx->sizes;
  s.n_vars = L.n_vars();
  s.n_collocation = ctx->defect_rows() * mesh.N;
  s.n_boundary = ocp.n_boundary;
  s.n_eq = s.n_collocation + s.n_boundary;
  s.n_ineq = (mesh.N + 1) * ocp.n_path;
  if (options.path_at_midpoints && scheme.is_hs()) s.n_ineq += mesh.N * ocp.n_path;
  s.n_dof = s.n_vars - s.n_eq;

  const double h = mesh.h();
  if (!scheme.is_hs()) {
    for (int k = 0; k <= mesh.N; ++k)
      ctx->qpoints.push_back(
          {false, k, mesh.knot(k), (k == 0 || k == mesh.N) ? 0.5 * h : h});
  } else {
    for (int k = 0; k <= mesh.N; ++k)
      ctx->qpoints.push_back(
          {false, k, mesh.knot(k), (k == 0 || k == mesh.N) ? h / 6.0 : h / 3.0});
    for (int k = 0; k < mesh.N; ++k)
      ctx->qpoints.push_back({true, k, mesh.midpoint(k), 2.0 * h / 3.0});
    // keep quadrature terms in time order
    std::stable_sort(ctx->qpoints.begin(), ctx->qpoints.end(),
                     [](const QPoint& a, const QPoint& b) { return a.t < b.t; });
  }
  return ctx;
}

std::vector<int> index_range(int start, int count) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), start);
  return v;
}

std::vector<int> concat(std::initializer_list<std::vector<int>> lists) {
  std::vector<int> v;
  for (const auto& l : lists) v.insert(v.end(), l.begin(), l.end());
  return v;
}

}  // namespace

Nlp transcribe(const OcpDefinition& ocp, const SchemeId& scheme, const Mesh& mesh,
               const TranscribeOptions& options) {
  auto ctx = make_context(ocp, scheme, mesh, options);
  const VariableLayout& L = ctx->layout;
  const int N = mesh.N;
  const int n_x = L.n_x();
  const int n_u = L.n_u;
  const int block = L.block();

  Nlp nlp;
  nlp.n_vars = L.n_vars();
  nlp.layout = L;
  nlp.sizes = ctx->sizes;
  nlp.cost = [ctx](const Vector& z) { return ctx->eval_cost(z); };
  nlp.eq = [ctx](const Vector& z) { return ctx->eval_eq(z); };
  if (ctx->sizes.n_ineq > 0)
    nlp.ineq = [ctx](const Vector& z) { return ctx->eval_ineq(z); };

  // variable bounds replicated at every mesh point that carries the variable
  nlp.bounds.assign(nlp.n_vars, Bounds{});
  if (!ocp.state_bounds.empty()) {
    for (int k = 0; k <= N; ++k)
      for (int i = 0; i < n_x; ++i)
        nlp.bounds[L.knot_state(k, 0, 0) + i] = ocp.state_bounds[i];
    if (L.midpoint_states)
      for (int k = 0; k < N; ++k)
        for (int i = 0; i < n_x; ++i)
          nlp.bounds[L.mid_state(k, 0, 0) + i] = ocp.state_bounds[i];
  }
  if (!ocp.control_bounds.empty() && n_u > 0) {
    for (int k = 0; k <= N; ++k)
      for (int i = 0; i < n_u; ++i)
        nlp.bounds[L.knot_control(k, i)] = ocp.control_bounds[i];
    if (L.midpoint_controls)
      for (int k = 0; k < N; ++k)
        for (int i = 0; i < n_u; ++i)
          nlp.bounds[L.mid_control(k, i)] = ocp.control_bounds[i];
  }

  // row sparsity: defect rows of interval k touch the adjacent mesh blocks
  nlp.eq_vars.reserve(ctx->sizes.n_eq);
  for (int k = 0; k < N; ++k) {
    std::vector<int> vars;
    if (ctx->mode == Mode::Tz) {
      vars = concat({index_range(L.knot_state(k, 0, 0), block),
                     index_range(L.knot_state(k + 1, 0, 0), block)});
    } else if (ctx->mode == Mode::HsSeparated) {
      // knot, midpoint and next-knot blocks are contiguous
      vars = index_range(L.knot_state(k, 0, 0), 3 * block);
    } else {
      vars = concat({index_range(L.knot_state(k, 0, 0), 2 * block),
                     n_u > 0 ? index_range(L.mid_control(k, 0), n_u)
                             : std::vector<int>{}});
    }
    for (int r = 0; r < ctx->defect_rows(); ++r) nlp.eq_vars.push_back(vars);
  }
  if (ocp.n_boundary > 0) {
    auto vars = concat({index_range(L.knot_state(0, 0, 0), n_x),
                        index_range(L.knot_state(N, 0, 0), n_x)});
    for (int r = 0; r < ocp.n_boundary; ++r) nlp.eq_vars.push_back(vars);
  }

  if (ctx->sizes.n_ineq > 0) {
    nlp.ineq_vars.reserve(ctx->sizes.n_ineq);
    for (int k = 0; k <= N; ++k) {
      auto vars = index_range(L.knot_state(k, 0, 0), block);
      for (int r = 0; r < ocp.n_path; ++r) nlp.ineq_vars.push_back(vars);
    }
    if (options.path_at_midpoints && scheme.is_hs()) {
      for (int k = 0; k < N; ++k) {
        std::vector<int> vars;
        if (ctx->mode == Mode::HsSeparated)
          vars = index_range(L.mid_state(k, 0, 0), block);
        else
          vars = concat({index_range(L.knot_state(k, 0, 0), 2 * block),
                         n_u > 0 ? index_range(L.mid_control(k, 0), n_u)
                                 : std::vector<int>{}});
        for (int r = 0; r < ocp.n_path; ++r) nlp.ineq_vars.push_back(vars);
      }
    }
  }

  if (ocp.running_cost) {
    for (const QPoint& p : ctx->qpoints) {
      Nlp::CostTerm term;
      term.fn = [ctx, p](const Vector& z) {
        return p.w * ctx->point_L(z, p, nullptr);
      };
      if (!p.mid) {
        term.vars = index_range(L.knot_state(p.k, 0, 0), block);
      } else if (ctx->mode == Mode::HsSeparated) {
        term.vars = index_range(L.mid_state(p.k, 0, 0), block);
      } else {
        term.vars = concat({index_range(L.knot_state(p.k, 0, 0), 2 * block),
                            n_u > 0 ? index_range(L.mid_control(p.k, 0), n_u)
                                    : std::vector<int>{}});
      }
      nlp.cost_terms.push_back(std::move(term));
    }
  }
  if (ocp.terminal_cost) {
    Nlp::CostTerm term;
    auto K = ocp.terminal_cost;
    const int xN = L.knot_state(N, 0, 0);
    const double tf = mesh.t_f;
    term.fn = [K, xN, n_x, tf](const Vector& z) {
      return K(z.segment(xN, n_x), tf);
    };
    term.vars = index_range(xN, n_x);
    nlp.cost_terms.push_back(std::move(term));
  }

  return nlp;
}

double quadrature_cost(const OcpDefinition& ocp, const SchemeId& scheme,
                       const Mesh& mesh, const Vector& x) {
  auto ctx = make_context(ocp, scheme, mesh, {});
  if (x.size() != ctx->layout.n_vars())
    throw std::invalid_argument("decision vector has wrong size");
  return ctx->eval_cost(x);
}

Vector assemble_initial_guess(const OcpDefinition& ocp, const SchemeId& scheme,
                              const Mesh& mesh,
                              const std::vector<std::pair<double, Vector>>& waypoints) {
  auto ctx = make_context(ocp, scheme, mesh, {});
  if (waypoints.empty())
    throw std::invalid_argument("assemble_initial_guess needs at least one waypoint");
  for (const auto& [t, xw] : waypoints)
    if (xw.size() != ocp.n_x())
      throw std::invalid_argument("waypoint state has " + std::to_string(xw.size()) +
                                  " entries, expected " + std::to_string(ocp.n_x()));
  auto wp = waypoints;
  std::stable_sort(wp.begin(), wp.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  auto state_at = [&wp](double t) -> Vector {
    if (t <= wp.front().first) return wp.front().second;
    if (t >= wp.back().first) return wp.back().second;
    size_t i = 1;
    while (wp[i].first < t) ++i;
    const double t0 = wp[i - 1].first, t1 = wp[i].first;
    const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
    return wp[i - 1].second * (1.0 - w) + wp[i].second * w;
  };

  const VariableLayout& L = ctx->layout;
  Vector z = Vector::Zero(L.n_vars());
  for (int k = 0; k <= mesh.N; ++k)
    z.segment(L.knot_state(k, 0, 0), L.n_x()) = state_at(mesh.knot(k));
  if (L.midpoint_states)
    for (int k = 0; k < mesh.N; ++k)
      z.segment(L.mid_state(k, 0, 0), L.n_x()) = state_at(mesh.midpoint(k));
  return z;
}

PolyTrajectory extract_trajectory(const OcpDefinition& ocp, const SchemeId& scheme,
                                  const Mesh& mesh, const Vector& x) {
  auto ctx = make_context(ocp, scheme, mesh, {});
  if (x.size() != ctx->layout.n_vars())
    throw std::invalid_argument("decision vector has wrong size");
  const int N = mesh.N;
  const int n_q = ocp.n_q;
  const int n_u = ocp.n_u;

  Matrix knot_states(ocp.n_x(), N + 1);
  Matrix u_knots(n_u, N + 1);
  for (int k = 0; k <= N; ++k) {
    knot_states.col(k) = ctx->knot_x(x, k);
    if (n_u > 0) u_knots.col(k) = ctx->knot_u(x, k);
  }
  const Matrix g_knots = ctx->eval_g_knots(x);

  Matrix g_mid(n_q, 0), u_mid(n_u, 0);
  if (scheme.is_hs()) {
    g_mid.resize(n_q, N);
    u_mid.resize(n_u, N);
    for (int k = 0; k < N; ++k) {
      const Vector xc = ctx->mid_x(x, k, g_knots);
      const Vector uc = ctx->mid_u(x, k);
      if (n_u > 0) u_mid.col(k) = uc;
      g_mid.col(k) = ocp.dynamics(xc, uc, mesh.midpoint(k));
    }
  }
  return build_interpolant(scheme, knot_states, g_knots, g_mid, u_knots, u_mid, 0.0,
                           mesh.h());
}

}  // namespace colloc
