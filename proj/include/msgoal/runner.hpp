#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msgoal/adapt.hpp"

namespace msgoal {

struct RunResult {
  AdaptState state;
  Problem problem;
  double q_ref = 0.0;
  double seconds = 0.0;
  std::string output;  // empty when nothing was written
};

// Refuses truth grids above this many nodes for the oracle solve.
inline constexpr long long kMaxOracleNodes = 4'000'000;

// Runs one experiment. With a non-empty output directory it writes
// config.cfg, manifest.json, history.csv, params.csv, report.json and VTK files
// (mesh_<k>.vtk per iteration, fields.vtk for the last discretization).
// `observe` sees every iteration after the built-in logging.
RunResult run_experiment(const RunConfig& c, const std::string& cache_dir, const std::string& output,
                         std::ostream* log = nullptr, const IterationObserver& observe = {});

struct RunSummary {
  std::string label;
  int iterations = 0;
  int leaves = 0;
  int coarse_dofs = 0;
  long long fine_dofs = 0;
  int fine_solves = 0;
  double eta = 0.0;
  double rel = 0.0;
  bool converged = false;
};
// Last row of <dir>/history.csv.
RunSummary summarize_run(const std::string& dir, const std::string& label);
// Writes label,iterations,leaves,coarse_dofs,fine_dofs,fine_solves,eta,rel,converged.
CsvTable compare_runs(const std::string& goal_dir, const std::string& global_dir);

std::string version_string();

}  // namespace msgoal
