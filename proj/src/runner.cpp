#include "msgoal/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#ifndef MSGOAL_VERSION
#define MSGOAL_VERSION "0.0.0"
#endif
#ifndef MSGOAL_GIT
#define MSGOAL_GIT "unknown"
#endif

namespace msgoal {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string version_string() { return std::string(MSGOAL_VERSION) + "+" + MSGOAL_GIT; }

namespace {

const std::vector<std::string> kHistoryHeader{
    "k",           "eta",         "rel",         "eta_macro",      "eta_over",    "eta_micro",
    "leaves",      "coarse_dofs", "fine_dofs",   "source",         "marked",      "q_h",
    "corrected",   "delta_q",     "c_bar",       "e",              "e_adj",       "basic",
    "energy_bound", "q_ref",      "error",       "effectivity",    "max_equilibrium", "fine_solves"};

std::vector<std::string> history_row(const IterationRecord& r) {
  return {std::to_string(r.k), fmt(r.eta),        fmt(r.rel),        fmt(r.macro),
          fmt(r.over),         fmt(r.micro),      std::to_string(r.leaves), std::to_string(r.coarse_dofs),
          std::to_string(r.fine_dofs), r.source,  std::to_string(r.marked), fmt(r.q_h),
          fmt(r.corrected),    fmt(r.delta_q),    fmt(r.c_bar),      fmt(r.e),
          fmt(r.e_adj),        fmt(r.basic),      fmt(r.energy_bound), fmt(r.q_ref),
          fmt(r.error),        fmt(r.effectivity), fmt(r.max_equilibrium), std::to_string(r.host_solves)};
}

int vtk_stride(int N) {
  for (int s = 1; s <= N; ++s)
    if (N % s == 0 && N / s <= 200) return s;
  return N;
}

std::vector<Vec2> scaled(const Medium& med, const std::vector<Vec2>& g) {
  std::vector<Vec2> out(g.size());
  for (std::size_t t = 0; t < g.size(); ++t) out[t] = med.coef.abar[t] * g[t];
  return out;
}

void write_fields(const std::string& path, Experiment& ex, const Evaluation& ev) {
  const Medium& med = ex.medium();
  GridFields f;
  const Vec& uh = ev.primal.u_hat;
  f.point.push_back({"u_hat", &uh});
  Vec adj;
  if (ev.has_adjoint) {
    adj = ev.adjoint.z + ev.adjoint_pair.u_hat;
    f.point.push_back({"adjoint", &adj});
  }
  if (ex.reference()) f.point.push_back({"u_ref", ex.reference()});
  const auto q_hat = scaled(med, ev.primal.flux.g);
  const auto q_h = scaled(med, grid_flux(med.grid, uh));
  f.cell.push_back({"flux_equilibrated", &q_hat});
  f.cell.push_back({"flux_u_hat", &q_h});
  std::vector<Vec2> q_ref;
  if (ex.reference()) {
    q_ref = scaled(med, grid_flux(med.grid, *ex.reference()));
    f.cell.push_back({"flux_ref", &q_ref});
  }
  write_grid_vtk(path, med.grid, f, vtk_stride(med.grid.N));
}

json report_json(const IterationRecord& r) {
  return json{{"k", r.k},
              {"q_h", r.q_h},
              {"delta_q", r.delta_q},
              {"c_bar", r.c_bar},
              {"corrected", r.corrected},
              {"e", r.e},
              {"e_adj", r.e_adj},
              {"eta", r.eta},
              {"rel", r.rel},
              {"basic", r.basic},
              {"energy_bound", r.energy_bound},
              {"eta_macro", r.macro},
              {"eta_over", r.over},
              {"eta_micro", r.micro},
              {"q_ref", std::isnan(r.q_ref) ? json(nullptr) : json(r.q_ref)},
              {"error", std::isnan(r.error) ? json(nullptr) : json(r.error)},
              {"effectivity", std::isnan(r.effectivity) ? json(nullptr) : json(r.effectivity)}};
}

}  // namespace

RunResult run_experiment(const RunConfig& c, const std::string& cache_dir, const std::string& output,
                         std::ostream* log, const IterationObserver& observe) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.problem = build_problem(c);
  const long long nodes =
      static_cast<long long>(res.problem.n_root * res.problem.cells_per_element + 1) *
      (res.problem.n_root * res.problem.cells_per_element + 1);
  if (c.oracle && nodes > kMaxOracleNodes)
    throw std::length_error("oracle grid has " + std::to_string(nodes) + " nodes, above the limit of " +
                            std::to_string(kMaxOracleNodes));
  if (!output.empty()) {
    fs::create_directories(output);
    write_config((fs::path(output) / "config.cfg").string(), to_key_values(c));
  }
  Experiment ex(res.problem, adapt_options(c, cache_dir));
  res.q_ref = ex.q_ref();
  if (log) *log << "preset " << c.preset << " qoi " << c.qoi << " mode " << to_string(c.mode) << '\n';

  CsvTable hist(kHistoryHeader);
  std::vector<double> times;
  std::unique_ptr<Evaluation> last;
  auto watch = [&](const IterationRecord& r, const Evaluation& ev) {
    hist.add(history_row(r));
    times.push_back(r.seconds);
    if (log) {
      *log << "it " << r.k << "  eta " << fmt(r.eta) << "  rel " << fmt(r.rel) << "  leaves " << r.leaves
           << "  source " << r.source << "  marked " << r.marked;
      if (!std::isnan(r.effectivity)) *log << "  effectivity " << fmt(r.effectivity);
      *log << '\n';
      log->flush();
    }
    if (!output.empty())
      write_mesh_vtk((fs::path(output) / ("mesh_" + std::to_string(r.k) + ".vtk")).string(), *ev.mesh,
                     res.problem.eps, {{"eta_k", ev.eta_k}});
    last = std::make_unique<Evaluation>(ev);
    if (observe) observe(r, ev);
  };
  res.state = c.mode == AdaptMode::global ? run_global_adaptive(ex, watch) : run_adaptive(ex, watch);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (output.empty()) return res;
  res.output = output;

  const fs::path dir(output);
  hist.write((dir / "history.csv").string());

  const CoarseMesh& mesh = *last->mesh;
  CsvTable params({"leaf", "level", "ix", "iy", "x0", "y0", "x1", "y1", "H", "h", "d", "layers", "rung", "eta_k"});
  for (int k = 0; k < mesh.size(); ++k) {
    const Leaf& l = mesh.leaves[k];
    const Rect r = mesh.rect(l);
    params.add({std::to_string(k), std::to_string(l.level), std::to_string(l.ix), std::to_string(l.iy), fmt(r.x0),
                fmt(r.y0), fmt(r.x1), fmt(r.y1), fmt(mesh.H(l)), fmt(mesh.h(l)), fmt(mesh.d(l)),
                std::to_string(l.p.layers), std::to_string(l.p.rung), fmt(last->eta_k[k])});
  }
  params.write((dir / "params.csv").string());
  write_fields((dir / "fields.vtk").string(), ex, *last);

  json rep = report_json(res.state.history.back());
  rep["converged"] = res.state.converged;
  rep["iterations"] = static_cast<int>(res.state.history.size());
  rep["eta_k"] = last->eta_k;
  std::ofstream((dir / "report.json").string()) << rep.dump(2) << '\n';

  json man;
  man["version"] = version_string();
  man["config"] = to_key_values(c);
  man["problem"] = {{"name", res.problem.name},
                    {"qoi", res.problem.qoi_name},
                    {"qoi_kind", to_string(res.problem.qoi)},
                    {"omega", {res.problem.omega.x0, res.problem.omega.y0, res.problem.omega.x1, res.problem.omega.y1}},
                    {"eps", res.problem.eps},
                    {"truth_grid", res.problem.n_root * res.problem.cells_per_element},
                    {"ladder", res.problem.ladder}};
  man["cache_dir"] = cache_dir;
  man["seconds"] = res.seconds;
  man["iteration_seconds"] = times;
  std::ofstream((dir / "manifest.json").string()) << man.dump(2) << '\n';
  return res;
}

RunSummary summarize_run(const std::string& dir, const std::string& label) {
  const auto rows = read_csv((fs::path(dir) / "history.csv").string());
  if (rows.size() < 2) throw std::runtime_error("no history in " + dir);
  const auto& h = rows.front();
  const auto& r = rows.back();
  auto col = [&](const std::string& name) -> const std::string& {
    for (std::size_t i = 0; i < h.size(); ++i)
      if (h[i] == name) return r.at(i);
    throw std::runtime_error("history.csv lacks column " + name);
  };
  RunSummary s;
  s.label = label;
  s.iterations = static_cast<int>(rows.size()) - 1;
  s.leaves = std::stoi(col("leaves"));
  s.coarse_dofs = std::stoi(col("coarse_dofs"));
  s.fine_dofs = std::stoll(col("fine_dofs"));
  s.fine_solves = std::stoi(col("fine_solves"));
  s.eta = std::stod(col("eta"));
  s.rel = std::stod(col("rel"));
  double tol = 0.01;
  const auto cfg = fs::path(dir) / "config.cfg";
  if (fs::exists(cfg)) tol = run_config_from(read_config(cfg.string())).tol;
  s.converged = s.rel <= tol;
  return s;
}

CsvTable compare_runs(const std::string& goal_dir, const std::string& global_dir) {
  CsvTable t({"label", "dir", "iterations", "leaves", "coarse_dofs", "fine_dofs", "fine_solves", "eta", "rel",
              "converged"});
  for (const auto& [label, dir] : {std::pair{std::string("goal"), goal_dir}, std::pair{std::string("global"), global_dir}}) {
    const RunSummary s = summarize_run(dir, label);
    t.add({s.label, dir, std::to_string(s.iterations), std::to_string(s.leaves), std::to_string(s.coarse_dofs),
           std::to_string(s.fine_dofs), std::to_string(s.fine_solves), fmt(s.eta), fmt(s.rel),
           s.converged ? "true" : "false"});
  }
  return t;
}

}  // namespace msgoal
