#pragma once

#include "colloc/metrics.hpp"
#include "colloc/problems.hpp"
#include "colloc/solver.hpp"
#include "colloc/transcribe.hpp"

#include <optional>
#include <string>

namespace colloc {

// One solve of a registered problem with a named method, plus the error
// report on the reconstructed trajectory. Shared by the CLI, the Python
// module and the test suites.
struct ExperimentConfig {
  std::string problem = "cartpole";
  std::string method = "hs2";
  HsForm hs_form = HsForm::Separated;
  int N = 25;
  SolveOptions solve;
  int error_samples_per_interval = 64;
  int trajectory_samples_per_interval = 16;
  bool path_at_midpoints = false;
};

HsForm parse_hs_form(const std::string& name);

struct ExperimentResult {
  ExperimentConfig config;
  OcpDefinition ocp;      // original problem
  OcpDefinition work;     // problem actually transcribed (lifted for *1 methods)
  SchemeId scheme;
  Mesh mesh;
  NlpSizes sizes;
  Solution solution;
  PolyTrajectory trajectory;
  ErrorReport errors;
  double cost = 0.0;
  double wall_time_s = 0.0;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Vector* warm_start = nullptr);

// Resamples a previous trajectory as the initial guess for a finer mesh of
// the same problem/method (warm-start chaining).
Vector guess_from_trajectory(const OcpDefinition& work, const SchemeId& scheme,
                             const Mesh& mesh, const PolyTrajectory& traj);

// Locale-independent shortest-width formatting with 17 significant digits.
std::string format_double(double v);

void write_solution_json(const std::string& path, const ExperimentResult& result);
void write_trajectory_csv(const std::string& path, const ExperimentResult& result);
void write_errors_csv(const std::string& path, const ExperimentResult& result);
void write_summary_json(const std::string& path, const ExperimentResult& result);

}  // namespace colloc
