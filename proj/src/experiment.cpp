#include "colloc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace colloc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string form_name(HsForm form) {
  return form == HsForm::Separated ? "separated" : "compressed";
}

ordered_json json_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json vector_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json error_block(const Vector& E, double joint, bool joint_valid) {
  ordered_json block = ordered_json::object();
  for (int c = 0; c < E.size(); ++c) block["q" + std::to_string(c + 1)] = E[c];
  block["joint"] = joint_valid ? ordered_json(joint) : ordered_json(nullptr);
  return block;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<double> dense_grid(const PolyTrajectory& traj, int per_interval) {
  const int T = std::max(1, per_interval);
  const int N = traj.n_intervals();
  std::vector<double> t(static_cast<size_t>(N) * T + 1);
  for (int k = 0; k < N; ++k)
    for (int s = 0; s < T; ++s)
      t[static_cast<size_t>(k) * T + s] = traj.t0() + k * traj.h() + s * traj.h() / T;
  t.back() = traj.t_end();
  return t;
}

}  // namespace

HsForm parse_hs_form(const std::string& name) {
  if (name == "separated") return HsForm::Separated;
  if (name == "compressed") return HsForm::Compressed;
  throw std::invalid_argument("unknown hs form '" + name +
                              "' (known: separated, compressed)");
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Vector* warm_start) {
  ExperimentResult res;
  res.config = config;
  res.ocp = make_problem(config.problem);
  res.scheme = parse_method(config.method, res.ocp.order, config.hs_form);
  res.work = res.scheme.order == res.ocp.order ? res.ocp : lift_to_first_order(res.ocp);
  res.mesh = Mesh{config.N, res.ocp.t_f};

  TranscribeOptions topt;
  topt.path_at_midpoints = config.path_at_midpoints;
  const Nlp nlp = transcribe(res.work, res.scheme, res.mesh, topt);
  res.sizes = nlp.sizes;

  Vector x0;
  if (warm_start) {
    if (warm_start->size() != nlp.n_vars)
      throw std::invalid_argument("warm start has " + std::to_string(warm_start->size()) +
                                  " entries, expected " + std::to_string(nlp.n_vars));
    x0 = *warm_start;
  } else {
    x0 = assemble_initial_guess(res.work, res.scheme, res.mesh, res.work.guess_waypoints);
  }

  const auto start = std::chrono::steady_clock::now();
  res.solution = solve(nlp, x0, config.solve);
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  res.trajectory = extract_trajectory(res.work, res.scheme, res.mesh, res.solution.x);
  res.errors = integrate_errors(res.trajectory, res.ocp, config.error_samples_per_interval);
  res.cost = res.solution.cost;
  return res;
}

Vector guess_from_trajectory(const OcpDefinition& work, const SchemeId& scheme,
                             const Mesh& mesh, const PolyTrajectory& traj) {
  work.validate();
  if (traj.n_q() != work.n_q || traj.n_u() != work.n_u ||
      traj.scheme().order != work.order)
    throw std::invalid_argument("trajectory does not match the problem to warm-start");

  VariableLayout L;
  L.n_q = work.n_q;
  L.n_u = work.n_u;
  L.order = work.order;
  L.N = mesh.N;
  L.midpoint_states = scheme.is_hs() && scheme.hs_form == HsForm::Separated;
  L.midpoint_controls = scheme.is_hs();

  Vector z = Vector::Zero(L.n_vars());
  auto clamp_t = [&](double t) { return std::clamp(t, traj.t0(), traj.t_end()); };
  auto fill_state = [&](double t, int base) {
    // base is the level-0/coord-0 index; levels and coords are contiguous
    for (int j = 0; j < work.order; ++j)
      for (int c = 0; c < work.n_q; ++c)
        z[base + j * work.n_q + c] = traj.eval_coord(c, t, j);
  };
  auto fill_control = [&](double t, int base) {
    const Vector u = traj.control(t);
    for (int i = 0; i < work.n_u; ++i) z[base + i] = u[i];
  };

  for (int k = 0; k <= mesh.N; ++k) {
    const double t = clamp_t(mesh.knot(k));
    fill_state(t, L.knot_state(k, 0, 0));
    if (work.n_u > 0) fill_control(t, L.knot_control(k, 0));
  }
  for (int k = 0; k < mesh.N; ++k) {
    if (!L.midpoint_states && !(L.midpoint_controls && work.n_u > 0)) break;
    const double t = clamp_t(mesh.midpoint(k));
    if (L.midpoint_states) fill_state(t, L.mid_state(k, 0, 0));
    if (L.midpoint_controls && work.n_u > 0) fill_control(t, L.mid_control(k, 0));
  }
  return z;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_solution_json(const std::string& path, const ExperimentResult& result) {
  ordered_json j;
  j["problem"] = result.config.problem;
  j["method"] = result.scheme.name();
  j["hs_form"] = result.scheme.is_hs() ? ordered_json(form_name(result.scheme.hs_form))
                                       : ordered_json(nullptr);
  j["N"] = result.mesh.N;
  j["t_f"] = result.mesh.t_f;
  j["status"] = to_string(result.solution.status);
  j["cost"] = json_or_null(result.solution.cost);
  j["kkt_residual"] = json_or_null(result.solution.kkt_residual);
  j["max_violation"] = json_or_null(result.solution.constraint_violation);
  j["iterations"] = result.solution.iterations;
  j["inner_iterations"] = result.solution.inner_iterations;
  j["wall_time_s"] = result.wall_time_s;
  j["x"] = vector_json(result.solution.x);
  j["eq_multipliers"] = vector_json(result.solution.eq_multipliers);
  j["ineq_multipliers"] = vector_json(result.solution.ineq_multipliers);
  j["bound_lo_multipliers"] = vector_json(result.solution.bound_lo_multipliers);
  j["bound_hi_multipliers"] = vector_json(result.solution.bound_hi_multipliers);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_trajectory_csv(const std::string& path, const ExperimentResult& result) {
  const PolyTrajectory& traj = result.trajectory;
  const int M = traj.scheme().order;
  const int n_q = traj.n_q();
  auto out = open_out(path);

  out << 't';
  for (int j = 0; j <= M; ++j)
    for (int c = 0; c < n_q; ++c) {
      out << ',';
      if (j == 0)
        out << 'q' << c + 1;
      else if (j == 1)
        out << "dq" << c + 1;
      else
        out << 'd' << j << 'q' << c + 1;
    }
  for (int i = 0; i < traj.n_u(); ++i) out << ",u" << i + 1;
  out << '\n';

  const std::vector<double> grid =
      dense_grid(traj, result.config.trajectory_samples_per_interval);
  for (double t : grid) {
    out << format_double(t);
    for (int j = 0; j <= M; ++j)
      for (int c = 0; c < n_q; ++c) out << ',' << format_double(traj.eval_coord(c, t, j));
    if (traj.n_u() > 0) {
      const Vector u = traj.control(t);
      for (int i = 0; i < u.size(); ++i) out << ',' << format_double(u[i]);
    }
    out << '\n';
  }
}

void write_errors_csv(const std::string& path, const ExperimentResult& result) {
  const ErrorReport& rep = result.errors;
  const int n_q = static_cast<int>(rep.eps1.rows());
  auto out = open_out(path);

  out << 't';
  for (int c = 0; c < n_q; ++c) out << ",eps1_q" << c + 1;
  for (int c = 0; c < n_q; ++c) out << ",eps2_q" << c + 1;
  out << '\n';
  for (size_t i = 0; i < rep.t.size(); ++i) {
    out << format_double(rep.t[i]);
    for (int c = 0; c < n_q; ++c)
      out << ',' << format_double(rep.eps1(c, static_cast<int>(i)));
    for (int c = 0; c < n_q; ++c)
      out << ',' << format_double(rep.eps2(c, static_cast<int>(i)));
    out << '\n';
  }
}

void write_summary_json(const std::string& path, const ExperimentResult& result) {
  ordered_json j;
  j["problem"] = result.config.problem;
  j["method"] = result.scheme.name();
  j["hs_form"] = result.scheme.is_hs() ? ordered_json(form_name(result.scheme.hs_form))
                                       : ordered_json(nullptr);
  j["N"] = result.mesh.N;
  j["n_vars"] = result.sizes.n_vars;
  j["n_eq"] = result.sizes.n_eq;
  j["n_dof"] = result.sizes.n_dof;
  j["cost"] = json_or_null(result.cost);
  j["kkt_residual"] = json_or_null(result.solution.kkt_residual);
  j["max_violation"] = json_or_null(result.solution.constraint_violation);
  j["status"] = to_string(result.solution.status);
  j["wall_time_s"] = result.wall_time_s;
  j["E1"] = error_block(result.errors.E1, result.errors.E1_joint, result.errors.joint_valid);
  j["E2"] = error_block(result.errors.E2, result.errors.E2_joint, result.errors.joint_valid);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace colloc
