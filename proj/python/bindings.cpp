// Python bindings: configuration, runs, marking and the reference solve.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "msgoal/runner.hpp"

namespace py = pybind11;
using namespace msgoal;

namespace {

KeyValues to_kv(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) {
    std::string s;
    if (py::isinstance<py::bool_>(v)) s = v.cast<bool>() ? "true" : "false";
    else if (py::isinstance<py::str>(v)) s = v.cast<std::string>();
    else if (py::isinstance<py::float_>(v)) s = fmt(v.cast<double>());
    else s = py::str(v).cast<std::string>();
    kv[k.cast<std::string>()] = s;
  }
  return kv;
}

py::dict record_dict(const IterationRecord& r) {
  py::dict d;
  d["k"] = r.k;
  d["eta"] = r.eta;
  d["rel"] = r.rel;
  d["eta_macro"] = r.macro;
  d["eta_over"] = r.over;
  d["eta_micro"] = r.micro;
  d["leaves"] = r.leaves;
  d["coarse_dofs"] = r.coarse_dofs;
  d["fine_dofs"] = r.fine_dofs;
  d["source"] = r.source;
  d["marked"] = r.marked;
  d["q_h"] = r.q_h;
  d["corrected"] = r.corrected;
  d["delta_q"] = r.delta_q;
  d["c_bar"] = r.c_bar;
  d["e"] = r.e;
  d["e_adj"] = r.e_adj;
  d["basic"] = r.basic;
  d["energy_bound"] = r.energy_bound;
  d["q_ref"] = r.q_ref;
  d["error"] = r.error;
  d["effectivity"] = r.effectivity;
  d["max_equilibrium"] = r.max_equilibrium;
  d["fine_solves"] = r.host_solves;
  return d;
}

py::list leaves_list(const CoarseMesh& m) {
  py::list out;
  for (const Leaf& l : m.leaves) {
    const Rect r = m.rect(l);
    py::dict d;
    d["level"] = l.level;
    d["rect"] = py::make_tuple(r.x0, r.y0, r.x1, r.y1);
    d["H"] = m.H(l);
    d["h"] = m.h(l);
    d["d"] = m.d(l);
    d["layers"] = l.p.layers;
    d["rung"] = l.p.rung;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Goal-oriented adaptive multiscale finite elements";

  m.def("version", &version_string);
  m.def("default_cache_dir", &default_cache_dir);

  m.def(
      "normalize_config", [](const py::dict& d) { return to_key_values(run_config_from(to_kv(d))); },
      py::arg("config"), "Validated configuration with every key filled in.");
  m.def("read_config", &read_config, py::arg("path"));
  m.def("write_config", &write_config, py::arg("path"), py::arg("config"));

  m.def(
      "problem_info",
      [](const py::dict& d) {
        const Problem p = build_problem(run_config_from(to_kv(d)));
        py::dict out;
        out["name"] = p.name;
        out["qoi"] = p.qoi_name;
        out["qoi_kind"] = to_string(p.qoi);
        out["domain"] = py::make_tuple(p.domain.box.x0, p.domain.box.y0, p.domain.box.x1, p.domain.box.y1);
        out["omega"] = py::make_tuple(p.omega.x0, p.omega.y0, p.omega.x1, p.omega.y1);
        out["eps"] = p.eps;
        out["n_root"] = p.n_root;
        out["truth_grid"] = p.n_root * p.cells_per_element;
        out["ladder"] = p.ladder;
        out["initial_leaves"] = leaves_list(initial_mesh(p));
        return out;
      },
      py::arg("config"));

  m.def(
      "run",
      [](const py::dict& d, const std::string& output, const std::string& cache_dir,
         const std::function<void(py::dict)>& callback) {
        const RunConfig c = run_config_from(to_kv(d));
        py::list history;
        std::shared_ptr<const CoarseMesh> mesh;
        RunResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(c, cache_dir, output, nullptr, [&](const IterationRecord& r, const Evaluation& ev) {
            mesh = ev.mesh;
            py::gil_scoped_acquire acquire;
            py::dict rd = record_dict(r);
            history.append(rd);
            if (callback) callback(rd);
          });
        }
        py::dict out;
        out["history"] = history;
        out["converged"] = res.state.converged;
        out["q_ref"] = res.q_ref;
        out["seconds"] = res.seconds;
        out["output"] = res.output;
        out["leaves"] = mesh ? leaves_list(*mesh) : py::list();
        return out;
      },
      py::arg("config"), py::arg("output") = "", py::arg("cache_dir") = "", py::arg("callback") = nullptr,
      "Adaptive run; returns the per-iteration history and the final leaves.");

  m.def(
      "compare",
      [](const std::string& goal_dir, const std::string& global_dir) {
        std::vector<py::dict> rows;
        for (const auto& [label, dir] : {std::pair{std::string("goal"), goal_dir}, std::pair{std::string("global"), global_dir}}) {
          const RunSummary s = summarize_run(dir, label);
          py::dict r;
          r["label"] = s.label;
          r["iterations"] = s.iterations;
          r["leaves"] = s.leaves;
          r["coarse_dofs"] = s.coarse_dofs;
          r["fine_dofs"] = s.fine_dofs;
          r["fine_solves"] = s.fine_solves;
          r["eta"] = s.eta;
          r["rel"] = s.rel;
          r["converged"] = s.converged;
          rows.push_back(r);
        }
        return rows;
      },
      py::arg("goal_dir"), py::arg("global_dir"));

  m.def(
      "mark",
      [](const std::vector<double>& values, const std::vector<double>& areas, double gamma) {
        return mark(values, areas, gamma);
      },
      py::arg("values"), py::arg("areas"), py::arg("gamma"));

  m.def(
      "reference_solution",
      [](const py::dict& d, const std::string& cache_dir) {
        const Problem p = build_problem(run_config_from(to_kv(d)));
        Vec u;
        int N = 0;
        double q = 0.0;
        {
          py::gil_scoped_release release;
          const Medium med = make_medium(initial_mesh(p), p.A, p.eps);
          const GridLoad load = grid_load(med.grid, med.domain, p.load);
          u = oracle_solution(med, load, cache_dir).u;
          q = evaluate(med, qoi_preset(med.grid, p.qoi, p.omega), u);
          N = med.grid.N;
        }
        // Row j holds the nodes of y_j.
        Eigen::MatrixXd grid = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            u.data(), N + 1, N + 1);
        return py::make_tuple(grid, q);
      },
      py::arg("config"), py::arg("cache_dir") = "",
      "Truth-grid solution as an (N+1) x (N+1) array indexed [j, i], and Q of it.");
}
