#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "colloc/experiment.hpp"

namespace fs = std::filesystem;
using namespace colloc;

namespace {

struct RunArgs {
  std::string problem = "cartpole";
  std::string method = "hs2";
  std::string hs_form = "separated";
  int N = 25;
  std::string out_dir = "out";
  SolveOptions solve;
  int error_samples = 64;
  int traj_samples = 16;
  bool path_at_midpoints = false;
};

ExperimentConfig to_config(const RunArgs& a, const std::string& method, int N) {
  ExperimentConfig cfg;
  cfg.problem = a.problem;
  cfg.method = method;
  cfg.hs_form = parse_hs_form(a.hs_form);
  cfg.N = N;
  cfg.solve = a.solve;
  cfg.error_samples_per_interval = a.error_samples;
  cfg.trajectory_samples_per_interval = a.traj_samples;
  cfg.path_at_midpoints = a.path_at_midpoints;
  return cfg;
}

void add_common_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("-p,--problem", a.problem, "problem name")
      ->default_val(a.problem);
  cmd->add_option("--hs-form", a.hs_form,
                  "hermite-simpson variable form: separated or compressed")
      ->default_val(a.hs_form);
  cmd->add_option("-o,--out-dir", a.out_dir, "output directory")
      ->default_val(a.out_dir);
  cmd->add_option("--kkt-tol", a.solve.kkt_tol, "stationarity tolerance")
      ->default_val(a.solve.kkt_tol);
  cmd->add_option("--max-outer", a.solve.max_outer_iters, "outer iteration cap")
      ->default_val(a.solve.max_outer_iters);
  cmd->add_option("--max-inner", a.solve.max_inner_iters,
                  "inner iteration cap per outer iteration")
      ->default_val(a.solve.max_inner_iters);
  cmd->add_option("--penalty-init", a.solve.penalty_init, "initial penalty")
      ->default_val(a.solve.penalty_init);
  cmd->add_option("--penalty-growth", a.solve.penalty_growth, "penalty growth factor")
      ->default_val(a.solve.penalty_growth);
  cmd->add_option("--penalty-max", a.solve.penalty_max, "penalty cap")
      ->default_val(a.solve.penalty_max);
  cmd->add_option("--error-samples", a.error_samples,
                  "error quadrature samples per interval")
      ->default_val(a.error_samples);
  cmd->add_option("--traj-samples", a.traj_samples,
                  "trajectory.csv samples per interval")
      ->default_val(a.traj_samples);
  cmd->add_flag("--path-at-midpoints", a.path_at_midpoints,
                "also enforce path constraints at hermite-simpson midpoints");
  cmd->add_flag("-v,--verbose", a.solve.verbose, "print solver progress to stderr");
}

void write_artifacts(const std::string& dir, const ExperimentResult& res) {
  fs::create_directories(dir);
  write_solution_json(dir + "/solution.json", res);
  write_trajectory_csv(dir + "/trajectory.csv", res);
  write_errors_csv(dir + "/errors.csv", res);
  write_summary_json(dir + "/summary.json", res);
}

void print_result_line(const ExperimentResult& res) {
  std::printf("%-14s %-4s N=%-4d status=%-19s cost=%-12.6g kkt=%-10.3e viol=%-10.3e",
              res.config.problem.c_str(), res.scheme.name().c_str(), res.mesh.N,
              to_string(res.solution.status), res.cost, res.solution.kkt_residual,
              res.solution.constraint_violation);
  std::printf(" E2=[");
  for (int c = 0; c < res.errors.E2.size(); ++c)
    std::printf("%s%.4g", c ? ", " : "", res.errors.E2[c]);
  std::printf("]  %.2fs\n", res.wall_time_s);
}

int run_solve(const RunArgs& a, const std::string& method, int N) {
  const ExperimentResult res = run_experiment(to_config(a, method, N));
  write_artifacts(a.out_dir, res);
  print_result_line(res);
  std::printf("artifacts in %s: solution.json trajectory.csv errors.csv summary.json\n",
              a.out_dir.c_str());
  return res.solution.status == SolveStatus::Converged ? 0 : 2;
}

int run_compare(const RunArgs& a, const std::vector<std::string>& methods, int N,
                bool fair) {
  std::vector<ExperimentResult> results;
  for (const std::string& m : methods) {
    int Nm = N;
    if (fair && m.rfind("tz", 0) == 0) Nm = 2 * N;  // equal dynamics samples
    results.push_back(run_experiment(to_config(a, m, Nm)));
    write_artifacts(a.out_dir + "/" + results.back().scheme.name(), results.back());
    print_result_line(results.back());
  }

  fs::create_directories(a.out_dir);
  const std::string path = a.out_dir + "/comparison.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int n_q = results.front().ocp.n_q;
  out << "method,hs_form,N,n_vars,n_eq,n_dof,cost,kkt_residual,max_violation,status,"
         "wall_time_s";
  for (int c = 0; c < n_q; ++c) out << ",E1_q" << c + 1;
  for (int c = 0; c < n_q; ++c) out << ",E2_q" << c + 1;
  out << '\n';
  for (const ExperimentResult& r : results) {
    out << r.scheme.name() << ','
        << (r.scheme.is_hs()
                ? (r.scheme.hs_form == HsForm::Separated ? "separated" : "compressed")
                : "")
        << ',' << r.mesh.N << ',' << r.sizes.n_vars << ',' << r.sizes.n_eq << ','
        << r.sizes.n_dof << ',' << format_double(r.cost) << ','
        << format_double(r.solution.kkt_residual) << ','
        << format_double(r.solution.constraint_violation) << ','
        << to_string(r.solution.status) << ',' << format_double(r.wall_time_s);
    for (int c = 0; c < n_q; ++c) out << ',' << format_double(r.errors.E1[c]);
    for (int c = 0; c < n_q; ++c) out << ',' << format_double(r.errors.E2[c]);
    out << '\n';
  }

  if (results.size() == 2) {
    std::printf("E2 ratio %s/%s per coordinate: [", results[0].scheme.name().c_str(),
                results[1].scheme.name().c_str());
    for (int c = 0; c < n_q; ++c)
      std::printf("%s%.3g", c ? ", " : "", results[0].errors.E2[c] / results[1].errors.E2[c]);
    std::printf("]\n");
  }
  std::printf("wrote %s\n", path.c_str());

  for (const ExperimentResult& r : results)
    if (r.solution.status != SolveStatus::Converged) return 2;
  return 0;
}

int run_convergence(const RunArgs& a, const std::string& method,
                    const std::vector<int>& N_list, bool warm_start) {
  if (N_list.size() < 2) {
    std::fprintf(stderr, "error: --N-list needs at least two mesh sizes\n");
    return 1;
  }

  std::vector<ExperimentResult> results;
  for (int N : N_list) {
    const ExperimentConfig cfg = to_config(a, method, N);
    Vector guess;
    const Vector* guess_ptr = nullptr;
    if (warm_start && !results.empty()) {
      const OcpDefinition ocp = make_problem(cfg.problem);
      const SchemeId scheme = parse_method(cfg.method, ocp.order, cfg.hs_form);
      const OcpDefinition work =
          scheme.order == ocp.order ? ocp : lift_to_first_order(ocp);
      guess = guess_from_trajectory(work, scheme, Mesh{N, ocp.t_f},
                                    results.back().trajectory);
      guess_ptr = &guess;
    }
    results.push_back(run_experiment(cfg, guess_ptr));
    print_result_line(results.back());
  }

  fs::create_directories(a.out_dir);
  const std::string path = a.out_dir + "/scaling.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int n_q = results.front().ocp.n_q;
  out << "method,N,h";
  for (int c = 0; c < n_q; ++c) out << ",E2_q" << c + 1;
  out << ",wall_time_s\n";
  for (const ExperimentResult& r : results) {
    out << r.scheme.name() << ',' << r.mesh.N << ',' << format_double(r.mesh.h());
    for (int c = 0; c < n_q; ++c) out << ',' << format_double(r.errors.E2[c]);
    out << ',' << format_double(r.wall_time_s) << '\n';
  }
  std::printf("wrote %s\n", path.c_str());

  for (const ExperimentResult& r : results)
    if (r.solution.status != SolveStatus::Converged) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"direct collocation for trajectory optimization"};
  app.set_config("--config", "", "read options from an INI file");
  app.require_subcommand(1);

  RunArgs solve_args, compare_args, conv_args;
  std::string solve_method = "hs2";
  int solve_N = 25;
  std::vector<std::string> compare_methods = {"tz2", "hs2"};
  int compare_N = 25;
  bool compare_fair = false;
  std::string conv_method = "hs2";
  std::vector<int> conv_N_list;
  bool conv_warm = false;

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve one problem and write the artifact set");
  solve_cmd->configurable()->fallthrough();
  add_common_options(solve_cmd, solve_args);
  solve_cmd->add_option("-m,--method", solve_method,
                        "scheme: tz1, tz2, tzm, hs1, hs2 or hsm")
      ->default_val(solve_method);
  solve_cmd->add_option("-N,--intervals", solve_N, "mesh intervals")
      ->default_val(solve_N);

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "solve with several methods and tabulate errors");
  compare_cmd->configurable()->fallthrough();
  add_common_options(compare_cmd, compare_args);
  compare_cmd->add_option("-m,--methods", compare_methods, "methods to compare")
      ->delimiter(',');
  compare_cmd->add_option("-N,--intervals", compare_N, "mesh intervals")
      ->default_val(compare_N);
  compare_cmd->add_flag(
      "--fair", compare_fair,
      "double N for trapezoidal methods so every run samples the dynamics equally often");

  CLI::App* conv_cmd = app.add_subcommand(
      "convergence", "solve over a list of meshes and write scaling.csv");
  conv_cmd->configurable()->fallthrough();
  add_common_options(conv_cmd, conv_args);
  conv_cmd->add_option("-m,--method", conv_method, "scheme name")
      ->default_val(conv_method);
  conv_cmd->add_option("--N-list", conv_N_list, "mesh sizes, e.g. 20,40,80,160")
      ->delimiter(',');
  conv_cmd->add_flag("--warm-start", conv_warm,
                     "resample each solution as the next mesh's initial guess");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve_args, solve_method, solve_N);
    if (compare_cmd->parsed())
      return run_compare(compare_args, compare_methods, compare_N, compare_fair);
    if (conv_cmd->parsed())
      return run_convergence(conv_args, conv_method, conv_N_list, conv_warm);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
