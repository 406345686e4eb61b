#include "doctest.h"

#include "colloc/experiment.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace colloc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("pipeline_artifacts") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(COLLOC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("experiment runner round trip on the oscillator") {
  ExperimentConfig cfg;
  cfg.problem = "oscillator";
  cfg.method = "tz2";
  cfg.N = 16;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.solution.status == SolveStatus::Converged);
  CHECK(res.scheme.name() == "tz2");
  CHECK(res.sizes.n_vars == 17 * 2);
  CHECK(res.errors.E2.size() == 1);
  CHECK(res.errors.E2[0] > 0.0);
  CHECK(res.errors.E2[0] < 1.0);
  CHECK(res.wall_time_s >= 0.0);
  CHECK(res.cost == 0.0);  // no objective on this problem

  // the boundary conditions hold at the reconstructed endpoints
  CHECK(res.trajectory.eval(0.0, 0)[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.trajectory.eval(0.0, 1)[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("experiment runner lifts first-order methods automatically") {
  ExperimentConfig cfg;
  cfg.problem = "oscillator";
  cfg.method = "hs1";
  cfg.N = 16;
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.solution.status == SolveStatus::Converged);
  CHECK(res.work.order == 1);
  CHECK(res.work.n_q == 2);
  CHECK(res.ocp.order == 2);
  // the error report speaks about the original problem's coordinates
  CHECK(res.errors.E1.size() == 1);
  CHECK(res.errors.E1[0] > 0.0);  // separate velocity interpolation mismatches
}

TEST_CASE("third-order chain reaches the known optimum") {
  ExperimentConfig cfg;
  cfg.problem = "triple_integrator";
  cfg.method = "hsm";
  cfg.N = 10;
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.solution.status == SolveStatus::Converged);
  CHECK(res.scheme.name() == "hs3");
  CHECK(res.cost == doctest::Approx(720.0).epsilon(0.01));
  CHECK(res.solution.constraint_violation <= 1e-6);
}

TEST_CASE("warm starts resample the previous trajectory") {
  ExperimentConfig coarse;
  coarse.problem = "oscillator";
  coarse.method = "tz2";
  coarse.N = 8;
  const ExperimentResult first = run_experiment(coarse);
  REQUIRE(first.solution.status == SolveStatus::Converged);

  const Mesh fine{16, first.ocp.t_f};
  const Vector z =
      guess_from_trajectory(first.work, first.scheme, fine, first.trajectory);
  const Nlp nlp = transcribe(first.work, first.scheme, fine);
  REQUIRE(z.size() == nlp.n_vars);
  for (int k = 0; k <= fine.N; k += 4) {
    const double t = fine.knot(k);
    CHECK(z[nlp.layout.knot_state(k, 0, 0)] ==
          doctest::Approx(first.trajectory.eval(t, 0)[0]).epsilon(1e-12));
  }

  ExperimentConfig refined = coarse;
  refined.N = 16;
  const ExperimentResult second = run_experiment(refined, &z);
  CHECK(second.solution.status == SolveStatus::Converged);
  CHECK(second.errors.E2[0] < first.errors.E2[0]);
}

TEST_CASE("doubles format with full precision and parse back exactly") {
  for (double v : {1.0 / 3.0, 0.1, -2.5e-17, 720.0425719, 0.0, 1e300}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-4.0) == "-4");
}

TEST_CASE("hs form names") {
  CHECK(parse_hs_form("separated") == HsForm::Separated);
  CHECK(parse_hs_form("compressed") == HsForm::Compressed);
  CHECK_THROWS_AS(parse_hs_form("dense"), std::invalid_argument);
}

TEST_CASE("artifact writers emit well-formed files") {
  ExperimentConfig cfg;
  cfg.problem = "oscillator";
  cfg.method = "hs2";
  cfg.N = 8;
  cfg.trajectory_samples_per_interval = 4;
  const ExperimentResult res = run_experiment(cfg);
  const fs::path dir = fresh_dir("writers");

  write_solution_json((dir / "solution.json").string(), res);
  write_trajectory_csv((dir / "trajectory.csv").string(), res);
  write_errors_csv((dir / "errors.csv").string(), res);
  write_summary_json((dir / "summary.json").string(), res);

  const nlohmann::json sol = read_json(dir / "solution.json");
  CHECK(sol["problem"] == "oscillator");
  CHECK(sol["method"] == "hs2");
  CHECK(sol["hs_form"] == "separated");
  CHECK(sol["N"] == 8);
  CHECK(sol["status"] == "converged");
  CHECK(sol["x"].size() == static_cast<size_t>(res.sizes.n_vars));

  const nlohmann::json sum = read_json(dir / "summary.json");
  CHECK(sum["n_dof"] == res.sizes.n_dof);
  CHECK(sum["E2"].contains("q1"));
  CHECK(sum["E2"].contains("joint"));

  // trajectory.csv: header plus N * samples + 1 rows
  const std::string traj = read_text(dir / "trajectory.csv");
  const long rows = std::count(traj.begin(), traj.end(), '\n');
  CHECK(rows == 1 + 8 * 4 + 1);
  CHECK(traj.rfind("t,q1,dq1,d2q1", 0) == 0);

  const std::string errs = read_text(dir / "errors.csv");
  CHECK(errs.rfind("t,eps1_q1,eps2_q1", 0) == 0);
}

TEST_CASE("command line: solve writes artifacts and reports convergence") {
  const fs::path dir = fresh_dir("cli_solve");
  const int rc =
      run_cli("solve -p oscillator -m tz2 -N 8 -o " + dir.string());
  CHECK(rc == 0);
  for (const char* name :
       {"solution.json", "trajectory.csv", "errors.csv", "summary.json"})
    CHECK(fs::exists(dir / name));
  const nlohmann::json sol = read_json(dir / "solution.json");
  CHECK(sol["problem"] == "oscillator");
  CHECK(sol["N"] == 8);
}

TEST_CASE("command line: iteration caps surface as a nonzero exit status") {
  const fs::path dir = fresh_dir("cli_unconverged");
  const int rc = run_cli("solve -p cartpole -m tz2 -N 20 --max-outer 1 -o " +
                         dir.string());
  CHECK(rc == 2);
  const nlohmann::json sol = read_json(dir / "solution.json");
  CHECK(sol["status"] == "max_iters");
}

TEST_CASE("command line: bad input is an error, not a crash") {
  const fs::path dir = fresh_dir("cli_bad");
  CHECK(run_cli("solve -p pendulum -o " + dir.string()) == 1);
  CHECK(run_cli("solve -p oscillator -m rk4 -o " + dir.string()) == 1);
  CHECK(run_cli("frobnicate") == 1);
}

TEST_CASE("command line: compare tabulates methods side by side") {
  const fs::path dir = fresh_dir("cli_compare");
  const int rc =
      run_cli("compare -p oscillator -m tz2,hs2 -N 8 --fair -o " + dir.string());
  CHECK(rc == 0);
  const std::string csv = read_text(dir / "comparison.csv");
  CHECK(csv.find("tz2,") != std::string::npos);
  CHECK(csv.find("hs2,separated") != std::string::npos);
  CHECK(csv.rfind("method,hs_form,N,n_vars,n_eq,n_dof,cost", 0) == 0);
  CHECK(fs::exists(dir / "tz2" / "summary.json"));
  CHECK(fs::exists(dir / "hs2" / "summary.json"));
  // --fair doubles the trapezoidal mesh
  CHECK(read_json(dir / "tz2" / "summary.json")["N"] == 16);
  CHECK(read_json(dir / "hs2" / "summary.json")["N"] == 8);
}

TEST_CASE("command line: convergence sweeps a mesh list") {
  const fs::path dir = fresh_dir("cli_convergence");
  const int rc = run_cli("convergence -p oscillator -m tz2 --N-list 4,8 -o " +
                         dir.string());
  CHECK(rc == 0);
  const std::string csv = read_text(dir / "scaling.csv");
  CHECK(csv.rfind("method,N,h,E2_q1,wall_time_s", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  CHECK(run_cli("convergence -p oscillator -m tz2 --N-list 4 -o " + dir.string()) == 1);
}

TEST_CASE("command line: options can come from a config file") {
  const fs::path dir = fresh_dir("cli_config");
  const fs::path ini = dir / "run.ini";
  {
    std::ofstream out(ini);
    out << "[solve]\n"
        << "problem=oscillator\n"
        << "intervals=8\n"
        << "out-dir=" << dir.string() << "\n";
  }
  const int rc = run_cli("solve -m tz2 --config " + ini.string());
  CHECK(rc == 0);
  const nlohmann::json sol = read_json(dir / "solution.json");
  CHECK(sol["problem"] == "oscillator");
  CHECK(sol["N"] == 8);
  CHECK(sol["method"] == "tz2");
}
