// Command line front end: run, compare, oracle, handbook.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "msgoal/runner.hpp"

using namespace msgoal;

namespace {

struct Common {
  std::string target;  // preset name or path to a .cfg file
  std::vector<std::string> sets;
  std::string qoi, mode, output, cache;
  double tol = 0.0, gamma = -1.0;
  int max_iter = 0;
  bool no_oracle = false, no_enrich = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("target", c.target, "preset (defect_sin, defect_exp, flow, custom) or config file")->required();
  app->add_option("--qoi", c.qoi, "Q1 or Q2 (defect), Q (flow)");
  app->add_option("--tol", c.tol, "relative tolerance");
  app->add_option("--gamma", c.gamma, "marking fraction");
  app->add_option("--max-iter", c.max_iter, "iteration cap");
  app->add_option("--mode", c.mode, "goal, global or none");
  app->add_option("--set", c.sets, "extra key=value config entries");
  app->add_option("--cache-dir", c.cache, "cache directory (default: $MSGOAL_CACHE)");
  app->add_flag("--no-oracle", c.no_oracle, "skip the reference solve");
  app->add_flag("--no-enrich", c.no_enrich, "plain adjoint without handbook");
}

RunConfig make_config(const Common& c) {
  KeyValues kv;
  if (std::filesystem::exists(c.target) && std::filesystem::is_regular_file(c.target)) {
    kv = read_config(c.target);
  } else {
    kv["preset"] = c.target;
    if (c.target == "flow") kv["qoi"] = "Q";
  }
  for (const auto& s : c.sets) {
    const auto more = parse_config(s);
    for (const auto& [k, v] : more) kv[k] = v;
  }
  if (!c.qoi.empty()) kv["qoi"] = c.qoi;
  if (c.tol > 0) kv["tol"] = fmt(c.tol);
  if (c.gamma >= 0) kv["gamma"] = fmt(c.gamma);
  if (c.max_iter > 0) kv["max_iter"] = std::to_string(c.max_iter);
  if (!c.mode.empty()) kv["mode"] = c.mode;
  if (!c.output.empty()) kv["output"] = c.output;
  if (c.no_oracle) kv["oracle"] = "false";
  if (c.no_enrich) kv["enrich"] = "false";
  return run_config_from(kv);
}

std::string cache_dir(const Common& c) { return c.cache.empty() ? default_cache_dir() : c.cache; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented adaptive MsFEM runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common run_opts;
  auto* run = app.add_subcommand("run", "run one experiment and write its artifacts");
  add_common(run, run_opts);
  run->add_option("-o,--output", run_opts.output, "output directory");

  std::string goal_dir, global_dir, compare_out;
  auto* cmp = app.add_subcommand("compare", "compare a goal-driven and an energy-driven run");
  cmp->add_option("goal_dir", goal_dir)->required()->check(CLI::ExistingDirectory);
  cmp->add_option("global_dir", global_dir)->required()->check(CLI::ExistingDirectory);
  cmp->add_option("-o,--output", compare_out, "CSV file (default: stdout)");

  Common oracle_opts;
  auto* orc = app.add_subcommand("oracle", "compute or load the cached truth-grid reference");
  add_common(orc, oracle_opts);

  Common hb_opts;
  auto* hbc = app.add_subcommand("handbook", "compute or load the cached handbook of the quantity of interest");
  add_common(hbc, hb_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = make_config(run_opts);
      const auto res = run_experiment(cfg, cache_dir(run_opts), cfg.output, &std::cout);
      const auto& last = res.state.history.back();
      std::cout << (res.state.converged ? "converged" : "not converged") << " after " << res.state.history.size()
                << " iterations, eta " << fmt(last.eta) << ", rel " << fmt(last.rel) << ", output " << res.output
                << '\n';
      return 0;
    }
    if (*cmp) {
      const CsvTable t = compare_runs(goal_dir, global_dir);
      if (!compare_out.empty()) t.write(compare_out);
      else t.write(std::cout);
      return 0;
    }
    if (*orc) {
      const RunConfig cfg = make_config(oracle_opts);
      const Problem p = build_problem(cfg);
      const Medium med = make_medium(initial_mesh(p), p.A, p.eps);
      const GridLoad load = grid_load(med.grid, med.domain, p.load);
      const Oracle o = oracle_solution(med, load, cache_dir(oracle_opts));
      const QuantityOfInterest q = qoi_preset(med.grid, p.qoi, p.omega);
      std::cout << "oracle " << o.key << (o.from_cache ? " (cached)" : " (computed)") << " grid " << med.grid.N
                << " Q " << fmt(evaluate(med, q, o.u)) << " energy "
                << fmt(std::sqrt(grid_energy_sq(med.grid, med.coef, o.u))) << '\n';
      return 0;
    }
    if (*hbc) {
      const RunConfig cfg = make_config(hb_opts);
      const Problem p = build_problem(cfg);
      const Medium med = make_medium(initial_mesh(p), p.A, p.eps);
      const QuantityOfInterest q = qoi_preset(med.grid, p.qoi, p.omega);
      const Handbook hb = precompute_handbook(med, q, cache_dir(hb_opts));
      std::cout << "handbook " << hb.key << (hb.from_cache ? " (cached)" : " (computed)") << " domain ["
                << hb.domain.i0 << "," << hb.domain.i1 << ")x[" << hb.domain.j0 << "," << hb.domain.j1 << ")\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "size error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
