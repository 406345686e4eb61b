#pragma once

#include "colloc/ocp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace colloc {

enum class Family { Trapezoidal, HermiteSimpson };
enum class HsForm { Separated, Compressed };

// Midpoint defect variant for Hermite-Simpson intervals. EliminatedAccel
// substitutes the midpoint dynamics value implied by the top-level endpoint
// relation, which makes the midpoint rows independent of g_c; ExplicitAccel
// keeps the sampled g_c.
enum class HsMidpoint { EliminatedAccel, ExplicitAccel };

// Largest supported dynamics order. Interval polynomials divide by
// factorials up to (order + 2)!, which 64-bit integers hold exactly only up
// to 20!.
inline constexpr int kMaxOrder = 18;

constexpr std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

struct SchemeId {
  Family family = Family::Trapezoidal;
  int order = 1;
  HsForm hs_form = HsForm::Separated;

  bool is_hs() const { return family == Family::HermiteSimpson; }
  // dynamics samples per interval (the right knot shared with the next one)
  int stages() const { return is_hs() ? 3 : 2; }
  // degree of the interval polynomial for each coordinate
  int degree() const { return order + stages() - 1; }
  std::string name() const;
};

// Accepted method names: tz1, tz2, tzm, hs1, hs2, hsm. The *1 forms always
// integrate at order one (higher-order problems must be lifted first), the
// *2 forms require a second-order problem, and the *m forms bind to the
// problem's native order. Throws std::invalid_argument otherwise.
SchemeId parse_method(const std::string& method, int problem_order,
                      HsForm hs_form = HsForm::Separated);

// Derivative r at offset tau of the polynomial sum_i a[i] tau^i / i!.
double poly_eval(std::span<const double> a, double tau, int r);

// Coefficients of the interval polynomial for one coordinate, starting from
// the derivative stack y_k at the left knot. The trapezoidal polynomial
// (degree order+1) interpolates the dynamics samples g_k, g_k1 linearly; the
// Hermite-Simpson one (degree order+2) puts a parabola through g_k, g_c,
// g_k1. a must have order+2 (tz) or order+3 (hs) entries.
void tz_coeffs(int order, std::span<const double> y_k, double g_k, double g_k1,
               double h, std::span<double> a);
void hs_coeffs(int order, std::span<const double> y_k, double g_k, double g_c,
               double g_k1, double h, std::span<double> a);

// Midpoint dynamics value implied by the top-level endpoint relation
// y'_{k+1} = y'_k + h/6 (g_k + 4 g_c + g_k1), given trial top-level values.
double hs_eliminate_gc(double y_top_k, double y_top_k1, double g_k, double g_k1,
                       double h);

// One trapezoidal interval for one coordinate: propagate the stack at t_k to
// t_k + h. out must have `order` entries.
void tz_step_into(int order, std::span<const double> y_k, double g_k,
                  double g_k1, double h, std::span<double> out);
std::vector<double> tz_step(int order, std::span<const double> y_k, double g_k,
                            double g_k1, double h);

struct HsStep {
  std::vector<double> end;  // stack at t_k + h
  std::vector<double> mid;  // stack at t_k + h/2
};

// One Hermite-Simpson interval for one coordinate. The endpoint stack always
// uses the sampled g_c; the midpoint stack uses either the sampled g_c
// (ExplicitAccel) or the eliminated one (EliminatedAccel), which reads the
// trial top-level value y_k1.back(). y_k1 may be empty for ExplicitAccel.
void hs_step_into(int order, std::span<const double> y_k,
                  std::span<const double> y_k1, double g_k, double g_c,
                  double g_k1, double h, HsMidpoint midpoint,
                  std::span<double> out_end, std::span<double> out_mid);
HsStep hs_step(int order, std::span<const double> y_k,
               std::span<const double> y_k1, double g_k, double g_c,
               double g_k1, double h,
               HsMidpoint midpoint = HsMidpoint::EliminatedAccel);

// Piecewise-polynomial trajectory on a uniform mesh: one interval polynomial
// per coordinate plus sampled controls (linear between knots for trapezoidal
// runs, quadratic through knot-mid-knot for Hermite-Simpson ones).
class PolyTrajectory {
 public:
  PolyTrajectory() = default;
  PolyTrajectory(SchemeId scheme, int n_q, int n_u, double t0, double h, int n_intervals);

  const SchemeId& scheme() const { return scheme_; }
  int n_q() const { return n_q_; }
  int n_u() const { return n_u_; }
  int n_intervals() const { return N_; }
  double t0() const { return t0_; }
  double h() const { return h_; }
  double t_end() const { return t0_ + N_ * h_; }

  // interval owning t: knots resolve to the interval starting there, except
  // t_end which belongs to the last one. Throws outside the mesh.
  int interval_of(double t) const;

  double eval_interval(int k, int coord, double tau, int r) const;
  double eval_coord(int coord, double t, int r) const;
  Vector eval(double t, int r) const;   // all coordinates, derivative r
  Vector control(double t) const;

  // builder access
  std::span<double> coeffs(int k, int coord);
  std::span<const double> coeffs(int k, int coord) const;
  Matrix& knot_controls() { return u_knot_; }
  const Matrix& knot_controls() const { return u_knot_; }
  Matrix& mid_controls() { return u_mid_; }
  const Matrix& mid_controls() const { return u_mid_; }

 private:
  SchemeId scheme_;
  int n_q_ = 0;
  int n_u_ = 0;
  int N_ = 0;
  double t0_ = 0.0;
  double h_ = 1.0;
  Matrix coef_;    // (degree+1) x (N * n_q), column k*n_q + coord
  Matrix u_knot_;  // n_u x (N+1)
  Matrix u_mid_;   // n_u x N, Hermite-Simpson only
};

// Assembles the trajectory from knot data. knot_states is n_x x (N+1) with
// level-major rows; g_knots is n_q x (N+1); g_mid and u_mid are n_q x N and
// n_u x N for Hermite-Simpson schemes and may be empty otherwise.
PolyTrajectory build_interpolant(const SchemeId& scheme, const Matrix& knot_states,
                                 const Matrix& g_knots, const Matrix& g_mid,
                                 const Matrix& u_knots, const Matrix& u_mid,
                                 double t0, double h);

inline Vector eval_interpolant(const PolyTrajectory& traj, double t, int r) {
  return traj.eval(t, r);
}
inline Vector eval_control(const PolyTrajectory& traj, double t) {
  return traj.control(t);
}

}  // namespace colloc
