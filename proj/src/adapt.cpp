#include "msgoal/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace msgoal {

std::string to_string(Source s) {
  switch (s) {
    case Source::macro: return "macro";
    case Source::over: return "over";
    case Source::micro: return "micro";
  }
  return "";
}

double SourceIndicators::global(Source s) const {
  return s == Source::macro ? macro : s == Source::over ? over : micro;
}

const std::vector<double>& SourceIndicators::map(Source s) const {
  return s == Source::macro ? macro_k : s == Source::over ? over_k : micro_k;
}

std::vector<double> leaf_areas(const CoarseMesh& mesh) {
  std::vector<double> a(mesh.size());
  for (int k = 0; k < mesh.size(); ++k) a[k] = mesh.rect(mesh.leaves[k]).area();
  return a;
}

std::vector<int> mark(const std::vector<double>& values, const std::vector<double>& areas, double gamma) {
  if (values.size() != areas.size()) throw std::invalid_argument("mark: size mismatch");
  double top = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) top = std::max(top, values[k] / areas[k]);
  std::vector<int> out;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (values[k] / areas[k] >= gamma * top) out.push_back(static_cast<int>(k));
  return out;
}

bool can_update(const CoarseMesh& mesh, int leaf, Source s, const Problem& p) {
  const Leaf& l = mesh.leaves.at(leaf);
  switch (s) {
    case Source::micro:
      for (int r = l.p.rung + 1; r <= max_rung(p.ladder); ++r)
        if (rung_s(mesh, l, p.ladder, r) < l.p.s) return true;
      return false;
    case Source::over:
      return l.p.s < mesh.cells_per_side(l.level) && l.p.layers < kMaxLayers;
    case Source::macro:
      return l.level < mesh.max_level();
  }
  return false;
}

namespace {

// The leaf solves its own local problems afresh with its current s and layers.
void rehost(const CoarseMesh& mesh, Leaf& l, double eps) {
  l.p.width = oversampling_width_cells(mesh, l, l.p.layers, eps);
  l.p.host_level = l.level;
  l.p.host_ix = l.ix;
  l.p.host_iy = l.iy;
  l.p.host_s = l.p.s;
  l.p.host_width = l.p.width;
}

}  // namespace

CoarseMesh update_parameters(const CoarseMesh& mesh, Source s, const std::vector<int>& marked, const Problem& p,
                             std::vector<int>* applied) {
  std::vector<int> ok;
  for (int k : marked)
    if (can_update(mesh, k, s, p)) ok.push_back(k);
  std::sort(ok.begin(), ok.end());
  ok.erase(std::unique(ok.begin(), ok.end()), ok.end());
  if (applied) *applied = ok;
  if (s == Source::macro) {
    CoarseMesh out = refine_elements(mesh, ok);
    if (!p.reuse_parent_basis)
      for (Leaf& l : out.leaves)
        if (l.p.host_level != l.level) {
          l.p.s = rung_s(out, l, p.ladder, l.p.rung);
          rehost(out, l, p.eps);
        }
    return out;
  }

  CoarseMesh out = mesh;
  for (int k : ok) {
    Leaf& l = out.leaves[k];
    if (s == Source::micro) {
      // Skip rungs that snap to the current fine size.
      int r = l.p.rung + 1;
      while (rung_s(out, l, p.ladder, r) >= l.p.s) ++r;
      l.p.rung = r;
      l.p.s = rung_s(out, l, p.ladder, r);
    } else {
      l.p.layers += 1;
    }
    rehost(out, l, p.eps);
  }
  return out;
}

long long fine_dofs(const CoarseMesh& mesh) {
  std::set<std::tuple<int, int, int, int, int>> hosts;
  long long n = 0;
  for (const Leaf& l : mesh.leaves) {
    const auto key = std::make_tuple(l.p.host_level, l.p.host_ix, l.p.host_iy, l.p.host_s, l.p.host_width);
    if (!hosts.insert(key).second) continue;
    const IRect c = mesh.cells(l.p.host_level, l.p.host_ix, l.p.host_iy).grow(l.p.host_width).intersect(mesh.grid.all());
    n += static_cast<long long>(c.nx() / l.p.host_s + 1) * (c.ny() / l.p.host_s + 1);
  }
  return n;
}

AdaptOptions adapt_options(const RunConfig& c, const std::string& cache_dir) {
  AdaptOptions o;
  o.mode = c.mode;
  o.tol = c.tol;
  o.gamma = c.gamma;
  o.max_iter = c.max_iter;
  o.enrich = c.enrich;
  o.oracle = c.oracle;
  o.cache_dir = cache_dir;
  return o;
}

Experiment::Experiment(Problem p, AdaptOptions o) : p_(std::move(p)), o_(std::move(o)) {
  const CoarseMesh m = initial_mesh(p_);
  med_ = make_medium(m, p_.A, p_.eps);
  load_ = grid_load(med_.grid, med_.domain, p_.load);
  q_ = qoi_preset(med_.grid, p_.qoi, p_.omega);
  if (o_.enrich && o_.mode != AdaptMode::global)
    hb_ = std::make_unique<Handbook>(precompute_handbook(med_, q_, o_.cache_dir));
  q_ref_ = std::numeric_limits<double>::quiet_NaN();
  if (o_.oracle) {
    u_ref_ = oracle_solution(med_, load_, o_.cache_dir).u;
    q_ref_ = msgoal::evaluate(med_, q_, u_ref_);
  }
}

Evaluation Experiment::evaluate(const CoarseMesh& mesh) {
  Evaluation ev;
  ev.mesh = std::make_shared<const CoarseMesh>(mesh);
  ev.space = std::make_shared<const MsFemSpace>(build_space(med_, *ev.mesh, {}, basis_));
  const MsFemSpace& sp = *ev.space;
  ev.u = solve_msfem(med_, sp, load_);
  ev.primal = admissible_pair(med_, sp, ev.u, load_, local_);
  const int nl = ev.mesh->size();
  if (o_.mode == AdaptMode::global) {
    const auto nc = broken_difference_sq(med_, sp, ev.u, ev.primal.u_hat);
    ev.eta_k.resize(nl);
    for (int k = 0; k < nl; ++k) ev.eta_k[k] = ev.primal.cre_k[k] + nc[k];
    ev.eta = ev.primal.cre + ev.primal.nonconformity;
    ev.report.e = ev.primal.cre;
    ev.report.energy_bound = ev.eta;
    const auto qk = evaluate_split(med_, sp, q_, ev.u);
    for (double v : qk) ev.report.q_h += v;
    ev.report.delta_q = msgoal::evaluate(med_, q_, ev.primal.u_hat) - ev.report.q_h;
    const double en = std::sqrt(grid_energy_sq(med_.grid, med_.coef, ev.primal.u_hat));
    ev.rel = en > 0 ? ev.eta / en : ev.eta;
    return ev;
  }
  PumRegion pum;
  if (hb_) {
    pum = build_pum_region(mesh, q_.omega, p_.pum_rings);
    ev.adjoint = solve_adjoint_residual(med_, sp, q_, *hb_, pum);
  } else {
    ev.adjoint = solve_adjoint(med_, sp, q_);
  }
  ev.has_adjoint = true;
  ev.adjoint_pair = admissible_pair(med_, sp, ev.adjoint.res, ev.adjoint.load, local_);
  ev.report = goal_estimate(med_, sp, ev.u, ev.primal, load_, q_, ev.adjoint, ev.adjoint_pair);
  ev.eta_k = ev.report.eta_k;
  ev.eta = ev.report.eta;
  const double q = std::abs(ev.report.q_h);
  ev.rel = q > 0 ? ev.eta / q : ev.eta;
  return ev;
}

std::vector<int> probe_candidates(const Evaluation& base, const Problem& p) {
  const CoarseMesh& mesh = *base.mesh;
  const auto areas = leaf_areas(mesh);
  std::vector<int> c;
  for (int k = 0; k < mesh.size(); ++k)
    if (base.eta_k[k] > 0.0 && (can_update(mesh, k, Source::macro, p) || can_update(mesh, k, Source::over, p) ||
                                can_update(mesh, k, Source::micro, p)))
      c.push_back(k);
  std::stable_sort(c.begin(), c.end(),
                   [&](int a, int b) { return base.eta_k[a] / areas[a] > base.eta_k[b] / areas[b]; });
  return c;
}

SourceIndicators Experiment::source_indicators(const Evaluation& base) {
  const CoarseMesh& mesh = *base.mesh;
  const int nl = mesh.size();
  double total = 0.0;
  for (double v : base.eta_k) total += v;
  SourceIndicators s;
  s.macro_k.assign(nl, 0.0);
  s.over_k.assign(nl, 0.0);
  s.micro_k.assign(nl, 0.0);
  // Decrease of the summed contributions when only leaf k is updated.
  auto probe = [&](int k, Source src) {
    if (!can_update(mesh, k, src, p_)) return 0.0;
    const Evaluation ev = evaluate(update_parameters(mesh, src, {k}, p_));
    double t = 0.0;
    for (double v : ev.eta_k) t += v;
    return std::max(0.0, total - t);
  };
  // The marked leaves of the element map first; further leaves only while
  // every probe so far came back empty.
  const auto cand = probe_candidates(base, p_);
  const auto areas = leaf_areas(mesh);
  const double top = cand.empty() ? 0.0 : base.eta_k[cand[0]] / areas[cand[0]];
  bool any = false;
  std::vector<int> probed;
  for (std::size_t i = 0; i < cand.size() && static_cast<int>(i) < 2 * kMaxProbes; ++i) {
    const int k = cand[i];
    const bool marked = base.eta_k[k] / areas[k] >= o_.gamma * top && static_cast<int>(i) < kMaxProbes;
    if (!marked && any) break;
    s.micro_k[k] = probe(k, Source::micro);
    s.over_k[k] = probe(k, Source::over);
    if (can_update(mesh, k, Source::macro, p_))
      s.macro_k[k] = std::max(0.0, base.eta_k[k] - s.micro_k[k] - s.over_k[k]);
    any = any || s.micro_k[k] > 0.0 || s.over_k[k] > 0.0 || s.macro_k[k] > 0.0;
    probed.push_back(k);
  }
  // Remaining candidates get the probed gain per unit of contribution.
  double eta_probed = 0.0, g_macro = 0.0, g_over = 0.0, g_micro = 0.0;
  for (int k : probed) {
    eta_probed += base.eta_k[k];
    g_macro += s.macro_k[k];
    g_over += s.over_k[k];
    g_micro += s.micro_k[k];
  }
  if (eta_probed > 0.0) {
    std::vector<char> seen(nl, 0);
    for (int k : probed) seen[k] = 1;
    for (int k : cand) {
      if (seen[k]) continue;
      const double w = base.eta_k[k] / eta_probed;
      if (can_update(mesh, k, Source::macro, p_)) s.macro_k[k] = w * g_macro;
      if (can_update(mesh, k, Source::over, p_)) s.over_k[k] = w * g_over;
      if (can_update(mesh, k, Source::micro, p_)) s.micro_k[k] = w * g_micro;
    }
  }
  for (int k = 0; k < nl; ++k) {
    s.macro += s.macro_k[k];
    s.micro += s.micro_k[k];
    s.over += s.over_k[k];
  }
  return s;
}

namespace {

IterationRecord record(Experiment& ex, int k, const Evaluation& ev, double seconds) {
  IterationRecord r;
  r.k = k;
  r.eta = ev.eta;
  r.rel = ev.rel;
  r.leaves = ev.mesh->size();
  r.coarse_dofs = ev.space->size();
  r.fine_dofs = fine_dofs(*ev.mesh);
  r.q_h = ev.report.q_h;
  r.corrected = ev.report.corrected;
  r.delta_q = ev.report.delta_q;
  r.c_bar = ev.report.c_bar;
  r.e = ev.report.e;
  r.e_adj = ev.report.e_adj;
  r.basic = ev.report.basic;
  r.energy_bound = ev.primal.cre + ev.primal.nonconformity;
  r.q_ref = ex.q_ref();
  r.error = r.q_ref - r.q_h;
  r.effectivity = r.eta / std::abs(r.error);
  if (ex.options().mode == AdaptMode::global && ex.reference()) {
    double e2 = 0.0;
    for (double v : broken_difference_sq(ex.medium(), *ev.space, ev.u, *ex.reference())) e2 += v;
    r.error = std::sqrt(e2);
    r.effectivity = r.eta / r.error;
  }
  r.max_equilibrium = 0.0;
  for (double v : ev.primal.flux.equilibrium) r.max_equilibrium = std::max(r.max_equilibrium, std::abs(v));
  if (ev.has_adjoint)
    for (double v : ev.adjoint_pair.flux.equilibrium) r.max_equilibrium = std::max(r.max_equilibrium, std::abs(v));
  r.host_solves = ex.basis_cache().host_solves();
  r.seconds = seconds;
  return r;
}

AdaptState run_loop(Experiment& ex, const IterationObserver& observe) {
  using clock = std::chrono::steady_clock;
  const Problem& p = ex.problem();
  const AdaptOptions& o = ex.options();
  AdaptState st;
  st.mesh = initial_mesh(p);
  for (int it = 0; it < o.max_iter; ++it) {
    const auto t0 = clock::now();
    st.iteration = it;
    const Evaluation ev = ex.evaluate(st.mesh);
    st.eta_k = ev.eta_k;
    IterationRecord rec = record(ex, it, ev, 0.0);
    const bool last = it + 1 == o.max_iter;
    if (ev.rel <= o.tol || o.mode == AdaptMode::none || last) {
      st.converged = ev.rel <= o.tol;
      rec.source = st.converged || o.mode == AdaptMode::none ? "none" : "cap";
      rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      st.history.push_back(rec);
      if (observe) observe(rec, ev);
      break;
    }
    st.indicators = ex.source_indicators(ev);
    const SourceIndicators& si = st.indicators;
    rec.macro = si.macro;
    rec.over = si.over;
    rec.micro = si.micro;

    // Sources above a third of the tolerance come first, largest first.
    const double target = o.tol / 3.0 * (ev.eta / std::max(ev.rel, 1e-300));
    std::vector<Source> order{Source::macro, Source::over, Source::micro};
    std::stable_sort(order.begin(), order.end(), [&](Source a, Source b) {
      const bool ha = si.global(a) > target, hb = si.global(b) > target;
      if (ha != hb) return ha;
      return si.global(a) > si.global(b);
    });
    const auto areas = leaf_areas(st.mesh);
    CoarseMesh next;
    std::vector<int> applied;
    Source chosen = order.front();
    for (Source s : order) {
      if (si.global(s) <= 0.0) continue;
      const auto marked = mark(si.map(s), areas, o.gamma);
      next = update_parameters(st.mesh, s, marked, p, &applied);
      if (!applied.empty()) {
        chosen = s;
        break;
      }
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (applied.empty()) {
      rec.source = "stalled";
      st.history.push_back(rec);
      if (observe) observe(rec, ev);
      break;
    }
    rec.source = to_string(chosen);
    rec.marked = static_cast<int>(applied.size());
    st.marked_glob = applied;
    st.marked_loc = chosen == Source::macro ? std::vector<int>{} : applied;
    st.history.push_back(rec);
    if (observe) observe(rec, ev);
    st.mesh = std::move(next);
  }
  return st;
}

}  // namespace

AdaptState run_adaptive(Experiment& ex, const IterationObserver& observe) {
  if (ex.options().mode == AdaptMode::global) throw std::invalid_argument("run_adaptive: experiment set up for global control");
  return run_loop(ex, observe);
}

AdaptState run_global_adaptive(Experiment& ex, const IterationObserver& observe) {
  if (ex.options().mode != AdaptMode::global) throw std::invalid_argument("run_global_adaptive: experiment set up for goal control");
  return run_loop(ex, observe);
}

}  // namespace msgoal
