#include "colloc/schemes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace colloc {

namespace {

// factorials as doubles, exact integers up to 20! rounded once on conversion
const std::array<double, kMaxOrder + 3> kFact = [] {
  std::array<double, kMaxOrder + 3> f{};
  for (int i = 0; i < static_cast<int>(f.size()); ++i)
    f[i] = static_cast<double>(factorial(i));
  return f;
}();

void check_order(int order) {
  if (order < 1) throw std::invalid_argument("scheme order must be positive");
  if (order > kMaxOrder)
    throw std::invalid_argument("scheme order " + std::to_string(order) +
                                " exceeds the supported maximum " +
                                std::to_string(kMaxOrder));
}

void check_step_args(int order, std::span<const double> y_k, double h) {
  check_order(order);
  if (static_cast<int>(y_k.size()) != order)
    throw std::invalid_argument("derivative stack has " + std::to_string(y_k.size()) +
                                " entries, expected " + std::to_string(order));
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
}

}  // namespace

std::string SchemeId::name() const {
  return (is_hs() ? "hs" : "tz") + std::to_string(order);
}

SchemeId parse_method(const std::string& method, int problem_order, HsForm hs_form) {
  if (problem_order < 1)
    throw std::invalid_argument("problem order must be positive");
  SchemeId id;
  id.hs_form = hs_form;
  if (method.size() != 3 || (method.substr(0, 2) != "tz" && method.substr(0, 2) != "hs"))
    throw std::invalid_argument("unknown method '" + method +
                                "' (expected tz1, tz2, tzm, hs1, hs2 or hsm)");
  id.family = method[0] == 'h' ? Family::HermiteSimpson : Family::Trapezoidal;
  switch (method[2]) {
    case '1':
      id.order = 1;
      break;
    case '2':
      if (problem_order != 2)
        throw std::invalid_argument(method + " needs a second-order problem, got order " +
                                    std::to_string(problem_order));
      id.order = 2;
      break;
    case 'm':
      id.order = problem_order;
      break;
    default:
      throw std::invalid_argument("unknown method '" + method +
                                  "' (expected tz1, tz2, tzm, hs1, hs2 or hsm)");
  }
  check_order(id.order);
  return id;
}

double poly_eval(std::span<const double> a, double tau, int r) {
  const int d = static_cast<int>(a.size()) - 1;
  if (r < 0 || r > d)
    throw std::invalid_argument("derivative " + std::to_string(r) +
                                " out of range for degree " + std::to_string(d));
  double acc = 0.0;
  double tp = 1.0;
  for (int i = r; i <= d; ++i) {
    acc += a[i] * tp / kFact[i - r];
    tp *= tau;
  }
  return acc;
}

void tz_coeffs(int order, std::span<const double> y_k, double g_k, double g_k1,
               double h, std::span<double> a) {
  check_step_args(order, y_k, h);
  if (static_cast<int>(a.size()) != order + 2)
    throw std::invalid_argument("tz_coeffs needs order+2 coefficients");
  std::copy(y_k.begin(), y_k.end(), a.begin());
  a[order] = g_k;
  a[order + 1] = (g_k1 - g_k) / h;
}

void hs_coeffs(int order, std::span<const double> y_k, double g_k, double g_c,
               double g_k1, double h, std::span<double> a) {
  check_step_args(order, y_k, h);
  if (static_cast<int>(a.size()) != order + 3)
    throw std::invalid_argument("hs_coeffs needs order+3 coefficients");
  std::copy(y_k.begin(), y_k.end(), a.begin());
  a[order] = g_k;
  a[order + 1] = -(3.0 * g_k - 4.0 * g_c + g_k1) / h;
  a[order + 2] = 4.0 * (g_k - 2.0 * g_c + g_k1) / (h * h);
}

double hs_eliminate_gc(double y_top_k, double y_top_k1, double g_k, double g_k1,
                       double h) {
  return 1.5 * (y_top_k1 - y_top_k) / h - 0.25 * (g_k + g_k1);
}

void tz_step_into(int order, std::span<const double> y_k, double g_k, double g_k1,
                  double h, std::span<double> out) {
  if (static_cast<int>(out.size()) != order)
    throw std::invalid_argument("tz_step output needs `order` entries");
  std::array<double, kMaxOrder + 2> a;
  tz_coeffs(order, y_k, g_k, g_k1, h, std::span(a.data(), order + 2));
  for (int j = 0; j < order; ++j)
    out[j] = poly_eval(std::span<const double>(a.data(), order + 2), h, j);
}

std::vector<double> tz_step(int order, std::span<const double> y_k, double g_k,
                            double g_k1, double h) {
  std::vector<double> out(order);
  tz_step_into(order, y_k, g_k, g_k1, h, out);
  return out;
}

void hs_step_into(int order, std::span<const double> y_k, std::span<const double> y_k1,
                  double g_k, double g_c, double g_k1, double h, HsMidpoint midpoint,
                  std::span<double> out_end, std::span<double> out_mid) {
  if (static_cast<int>(out_end.size()) != order ||
      static_cast<int>(out_mid.size()) != order)
    throw std::invalid_argument("hs_step outputs need `order` entries");
  if (midpoint == HsMidpoint::EliminatedAccel &&
      static_cast<int>(y_k1.size()) != order)
    throw std::invalid_argument(
        "hs_step with the eliminated midpoint needs the trial stack y_k1");

  std::array<double, kMaxOrder + 3> a;
  auto coeffs = std::span(a.data(), order + 3);
  hs_coeffs(order, y_k, g_k, g_c, g_k1, h, coeffs);
  auto ccoeffs = std::span<const double>(a.data(), order + 3);
  for (int j = 0; j < order; ++j) out_end[j] = poly_eval(ccoeffs, h, j);

  if (midpoint == HsMidpoint::EliminatedAccel) {
    const double g_c_elim =
        hs_eliminate_gc(y_k[order - 1], y_k1[order - 1], g_k, g_k1, h);
    hs_coeffs(order, y_k, g_k, g_c_elim, g_k1, h, coeffs);
  }
  for (int j = 0; j < order; ++j) out_mid[j] = poly_eval(ccoeffs, 0.5 * h, j);
}

HsStep hs_step(int order, std::span<const double> y_k, std::span<const double> y_k1,
               double g_k, double g_c, double g_k1, double h, HsMidpoint midpoint) {
  HsStep step;
  step.end.resize(order);
  step.mid.resize(order);
  hs_step_into(order, y_k, y_k1, g_k, g_c, g_k1, h, midpoint, step.end, step.mid);
  return step;
}

PolyTrajectory::PolyTrajectory(SchemeId scheme, int n_q, int n_u, double t0, double h,
                               int n_intervals)
    : scheme_(scheme), n_q_(n_q), n_u_(n_u), N_(n_intervals), t0_(t0), h_(h) {
  check_order(scheme.order);
  if (n_q < 1) throw std::invalid_argument("PolyTrajectory: n_q must be positive");
  if (n_u < 0) throw std::invalid_argument("PolyTrajectory: n_u must be nonnegative");
  if (N_ < 1) throw std::invalid_argument("PolyTrajectory: need at least one interval");
  if (!(h > 0.0)) throw std::invalid_argument("PolyTrajectory: h must be positive");
  coef_.setZero(scheme.degree() + 1, static_cast<Eigen::Index>(N_) * n_q_);
  u_knot_.setZero(n_u_, N_ + 1);
  if (scheme_.is_hs()) u_mid_.setZero(n_u_, N_);
}

int PolyTrajectory::interval_of(double t) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(t_end()));
  if (t < t0_ - slack || t > t_end() + slack)
    throw std::invalid_argument("time " + std::to_string(t) + " outside the mesh [" +
                                std::to_string(t0_) + ", " + std::to_string(t_end()) + "]");
  const int k = static_cast<int>(std::floor((t - t0_) / h_));
  return std::clamp(k, 0, N_ - 1);
}

std::span<double> PolyTrajectory::coeffs(int k, int coord) {
  return {coef_.col(static_cast<Eigen::Index>(k) * n_q_ + coord).data(),
          static_cast<size_t>(coef_.rows())};
}

std::span<const double> PolyTrajectory::coeffs(int k, int coord) const {
  return {coef_.col(static_cast<Eigen::Index>(k) * n_q_ + coord).data(),
          static_cast<size_t>(coef_.rows())};
}

double PolyTrajectory::eval_interval(int k, int coord, double tau, int r) const {
  if (k < 0 || k >= N_) throw std::invalid_argument("interval index out of range");
  if (coord < 0 || coord >= n_q_) throw std::invalid_argument("coordinate out of range");
  return poly_eval(coeffs(k, coord), tau, r);
}

double PolyTrajectory::eval_coord(int coord, double t, int r) const {
  const int k = interval_of(t);
  return eval_interval(k, coord, t - (t0_ + k * h_), r);
}

Vector PolyTrajectory::eval(double t, int r) const {
  const int k = interval_of(t);
  const double tau = t - (t0_ + k * h_);
  Vector out(n_q_);
  for (int c = 0; c < n_q_; ++c) out[c] = eval_interval(k, c, tau, r);
  return out;
}

Vector PolyTrajectory::control(double t) const {
  if (n_u_ == 0) return Vector(0);
  const int k = interval_of(t);
  const double tau = t - (t0_ + k * h_);
  if (!scheme_.is_hs()) {
    const double w = tau / h_;
    return u_knot_.col(k) * (1.0 - w) + u_knot_.col(k + 1) * w;
  }
  // quadratic through the knot, midpoint and next-knot samples
  const double w = tau / h_;
  const double l0 = 2.0 * (w - 0.5) * (w - 1.0);
  const double lc = -4.0 * w * (w - 1.0);
  const double l1 = 2.0 * w * (w - 0.5);
  return u_knot_.col(k) * l0 + u_mid_.col(k) * lc + u_knot_.col(k + 1) * l1;
}

PolyTrajectory build_interpolant(const SchemeId& scheme, const Matrix& knot_states,
                                 const Matrix& g_knots, const Matrix& g_mid,
                                 const Matrix& u_knots, const Matrix& u_mid,
                                 double t0, double h) {
  const int M = scheme.order;
  const int n_q = static_cast<int>(g_knots.rows());
  const int N = static_cast<int>(g_knots.cols()) - 1;
  const int n_u = static_cast<int>(u_knots.rows());
  if (N < 1) throw std::invalid_argument("build_interpolant: need at least one interval");
  if (knot_states.rows() != static_cast<Eigen::Index>(M) * n_q ||
      knot_states.cols() != N + 1)
    throw std::invalid_argument("build_interpolant: knot_states must be n_x x (N+1)");
  if (u_knots.cols() != 0 && u_knots.cols() != N + 1)
    throw std::invalid_argument("build_interpolant: u_knots must be n_u x (N+1)");
  if (scheme.is_hs()) {
    if (g_mid.rows() != n_q || g_mid.cols() != N)
      throw std::invalid_argument("build_interpolant: g_mid must be n_q x N");
    if (n_u > 0 && (u_mid.rows() != n_u || u_mid.cols() != N))
      throw std::invalid_argument("build_interpolant: u_mid must be n_u x N");
  }

  PolyTrajectory traj(scheme, n_q, n_u, t0, h, N);
  std::array<double, kMaxOrder + 1> y{};
  for (int k = 0; k < N; ++k) {
    for (int c = 0; c < n_q; ++c) {
      for (int j = 0; j < M; ++j) y[j] = knot_states(j * n_q + c, k);
      auto stack = std::span<const double>(y.data(), M);
      if (scheme.is_hs())
        hs_coeffs(M, stack, g_knots(c, k), g_mid(c, k), g_knots(c, k + 1), h,
                  traj.coeffs(k, c));
      else
        tz_coeffs(M, stack, g_knots(c, k), g_knots(c, k + 1), h, traj.coeffs(k, c));
    }
  }
  if (n_u > 0) {
    traj.knot_controls() = u_knots;
    if (scheme.is_hs()) traj.mid_controls() = u_mid;
  }
  return traj;
}

}  // namespace colloc
