#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "colloc/experiment.hpp"

namespace py = pybind11;
using namespace colloc;

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "direct collocation core (trapezoidal and Hermite-Simpson schemes, "
            "built-in augmented-Lagrangian solver)";

  m.def("problem_names", &problem_names, "registered problem names");

  m.def(
      "dynamics",
      [](const std::string& problem, const std::vector<double>& x,
         const std::vector<double>& u, double t) {
        const OcpDefinition ocp = make_problem(problem);
        return from_vector(ocp.dynamics(to_vector(x), to_vector(u), t));
      },
      py::arg("problem"), py::arg("x"), py::arg("u"), py::arg("t") = 0.0,
      "highest-order derivative g(x, u, t) of a registered problem");

  m.def(
      "tz_step",
      [](int order, const std::vector<double>& y_k, double g_k, double g_k1,
         double h) {
        return tz_step(order, std::span<const double>(y_k), g_k, g_k1, h);
      },
      py::arg("order"), py::arg("y_k"), py::arg("g_k"), py::arg("g_k1"),
      py::arg("h"),
      "propagate one coordinate's derivative stack across one trapezoidal interval");

  m.def(
      "hs_step",
      [](int order, const std::vector<double>& y_k, const std::vector<double>& y_k1,
         double g_k, double g_c, double g_k1, double h, bool eliminated) {
        const HsStep s =
            hs_step(order, std::span<const double>(y_k), std::span<const double>(y_k1),
                    g_k, g_c, g_k1, h,
                    eliminated ? HsMidpoint::EliminatedAccel : HsMidpoint::ExplicitAccel);
        return py::make_tuple(s.end, s.mid);
      },
      py::arg("order"), py::arg("y_k"), py::arg("y_k1"), py::arg("g_k"),
      py::arg("g_c"), py::arg("g_k1"), py::arg("h"), py::arg("eliminated") = true,
      "one Hermite-Simpson interval; returns (endpoint stack, midpoint stack)");

  m.def(
      "sizes",
      [](const std::string& problem, const std::string& method, int N,
         const std::string& hs_form) {
        const OcpDefinition ocp = make_problem(problem);
        const SchemeId scheme = parse_method(method, ocp.order, parse_hs_form(hs_form));
        const OcpDefinition work =
            scheme.order == ocp.order ? ocp : lift_to_first_order(ocp);
        const Nlp nlp = transcribe(work, scheme, Mesh{N, ocp.t_f});
        py::dict d;
        d["n_vars"] = nlp.sizes.n_vars;
        d["n_collocation"] = nlp.sizes.n_collocation;
        d["n_boundary"] = nlp.sizes.n_boundary;
        d["n_eq"] = nlp.sizes.n_eq;
        d["n_ineq"] = nlp.sizes.n_ineq;
        d["n_dof"] = nlp.sizes.n_dof;
        return d;
      },
      py::arg("problem"), py::arg("method"), py::arg("N"),
      py::arg("hs_form") = "separated",
      "decision-vector and constraint counts of a transcription");

  m.def(
      "solve",
      [](const std::string& problem, const std::string& method, int N,
         const std::string& hs_form, double kkt_tol, int max_outer, int max_inner,
         const std::string& out_dir) {
        ExperimentConfig cfg;
        cfg.problem = problem;
        cfg.method = method;
        cfg.hs_form = parse_hs_form(hs_form);
        cfg.N = N;
        cfg.solve.kkt_tol = kkt_tol;
        cfg.solve.max_outer_iters = max_outer;
        cfg.solve.max_inner_iters = max_inner;
        const ExperimentResult res = run_experiment(cfg);
        if (!out_dir.empty()) {
          std::filesystem::create_directories(out_dir);
          write_solution_json(out_dir + "/solution.json", res);
          write_trajectory_csv(out_dir + "/trajectory.csv", res);
          write_errors_csv(out_dir + "/errors.csv", res);
          write_summary_json(out_dir + "/summary.json", res);
        }
        py::dict d;
        d["problem"] = problem;
        d["method"] = res.scheme.name();
        d["N"] = res.mesh.N;
        d["status"] = to_string(res.solution.status);
        d["converged"] = res.solution.status == SolveStatus::Converged;
        d["cost"] = res.cost;
        d["kkt_residual"] = res.solution.kkt_residual;
        d["max_violation"] = res.solution.constraint_violation;
        d["n_vars"] = res.sizes.n_vars;
        d["n_eq"] = res.sizes.n_eq;
        d["n_dof"] = res.sizes.n_dof;
        d["E1"] = from_vector(res.errors.E1);
        d["E2"] = from_vector(res.errors.E2);
        d["E1_joint"] = res.errors.joint_valid ? py::cast(res.errors.E1_joint)
                                               : py::object(py::none());
        d["E2_joint"] = res.errors.joint_valid ? py::cast(res.errors.E2_joint)
                                               : py::object(py::none());
        d["wall_time_s"] = res.wall_time_s;
        return d;
      },
      py::arg("problem"), py::arg("method") = "hs2", py::arg("N") = 25,
      py::arg("hs_form") = "separated", py::arg("kkt_tol") = 1e-7,
      py::arg("max_outer") = 60, py::arg("max_inner") = 400,
      py::arg("out_dir") = "",
      "transcribe, solve and report errors; optionally write the artifact set");
}
