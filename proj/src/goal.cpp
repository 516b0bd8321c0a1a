#include "msgoal/goal.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "msgoal/io.hpp"

namespace msgoal {

namespace {

bool inside_closed(const IRect& r, int i, int j) { return i >= r.i0 && i <= r.i1 && j >= r.j0 && j <= r.j1; }

double grid_dot(const Medium& med, const std::vector<Vec2>& a, const std::vector<Vec2>& b, const IRect& r) {
  const TruthGrid& g = med.grid;
  double s = 0.0;
  for (int j = r.j0; j < r.j1; ++j)
    for (int i = r.i0; i < r.i1; ++i)
      for (int t = 0; t < 2; ++t) {
        const int T = g.tri(i, j, t);
        s += med.coef.abar[T] * a[T].dot(b[T]);
      }
  return s * g.tri_area();
}

std::vector<Vec2> combine(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double sb) {
  std::vector<Vec2> out(a.size());
  for (size_t t = 0; t < a.size(); ++t) out[t] = a[t] + sb * b[t];
  return out;
}

}  // namespace

QoiKind qoi_kind_from_string(const std::string& s) {
  if (s == "avg_u") return QoiKind::avg_u;
  if (s == "avg_flux_e1") return QoiKind::avg_flux_e1;
  throw std::invalid_argument("unknown quantity of interest: " + s);
}

std::string to_string(QoiKind k) { return k == QoiKind::avg_u ? "avg_u" : "avg_flux_e1"; }

QuantityOfInterest qoi_preset(const TruthGrid& g, QoiKind kind, const Rect& omega) {
  if (omega.empty()) throw std::invalid_argument("qoi: empty window");
  QuantityOfInterest q;
  q.kind = kind;
  q.omega = g.snap(omega);
  const Rect r = g.rect(q.omega);
  const double tol = 1e-9 * std::max(1.0, g.box.width());
  if (std::abs(r.x0 - omega.x0) > tol || std::abs(r.x1 - omega.x1) > tol || std::abs(r.y0 - omega.y0) > tol ||
      std::abs(r.y1 - omega.y1) > tol || !g.box.contains(omega))
    throw std::invalid_argument("qoi: window is not aligned with the truth grid");
  const double area = r.area();
  q.extractor = kind == QoiKind::avg_u ? indicator_body(g, q.omega, 1.0 / area)
                                       : indicator_preflux(g, q.omega, Vec2(1.0 / area, 0.0));
  return q;
}

double evaluate(const Medium& med, const QuantityOfInterest& q, const Vec& v) {
  return apply(med.grid, med.coef, q.extractor, v);
}

std::vector<double> evaluate_split(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q,
                                   const MsFemSolution& u) {
  return broken_apply(med, space, q.extractor, u);
}

IRect handbook_domain(const TruthGrid& g, const IRect& omega, double factor) {
  const double ci = 0.5 * (omega.i0 + omega.i1), cj = 0.5 * (omega.j0 + omega.j1);
  const double hx = 0.5 * factor * omega.nx(), hy = 0.5 * factor * omega.ny();
  IRect r{static_cast<int>(std::floor(ci - hx + 1e-9)), static_cast<int>(std::floor(cj - hy + 1e-9)),
          static_cast<int>(std::ceil(ci + hx - 1e-9)), static_cast<int>(std::ceil(cj + hy - 1e-9))};
  return r.intersect(g.all());
}

std::string default_cache_dir() {
  const char* e = std::getenv("MSGOAL_CACHE");
  return e ? std::string(e) : std::string();
}

Handbook precompute_handbook(const Medium& med, const QuantityOfInterest& q, const std::string& cache_dir,
                             double factor) {
  const TruthGrid& g = med.grid;
  Handbook hb;
  hb.domain = handbook_domain(g, q.omega, factor);
  Hasher f;
  f.value(g.N);
  f.value(g.box);
  f.value(hb.domain);
  f.value(q.omega);
  f.value(static_cast<int>(q.kind));
  f.value(med.domain.dirichlet);
  for (int j = hb.domain.j0; j < hb.domain.j1; ++j)
    for (int i = hb.domain.i0; i < hb.domain.i1; ++i)
      for (int t = 0; t < 2; ++t) f.value(med.coef.abar[g.tri(i, j, t)]);
  hb.key = f.hex();
  const int n = SubgridIndex{hb.domain}.size();

  std::string file;
  if (!cache_dir.empty()) {
    file = (std::filesystem::path(cache_dir) / ("handbook-" + hb.key + ".bin")).string();
    if (auto v = read_vector(file, n)) {
      hb.u = std::move(*v);
      hb.from_cache = true;
      return hb;
    }
  }
  hb.u = grid_solve(g, med.coef, med.domain, q.extractor, hb.domain);
  if (!cache_dir.empty()) write_vector(file, hb.u);
  return hb;
}

PumRegion build_pum_region(const CoarseMesh& mesh, const IRect& omega, int rings) {
  const int m0 = mesh.m0;
  const TruthGrid& g = mesh.grid;
  PumRegion p;
  IRect roots{omega.i0 / m0, omega.j0 / m0, (omega.i1 + m0 - 1) / m0, (omega.j1 + m0 - 1) / m0};
  roots = roots.grow(rings).intersect({0, 0, mesh.n_root, mesh.n_root});
  p.omega1 = {roots.i0 * m0, roots.j0 * m0, roots.i1 * m0, roots.j1 * m0};

  // Sum of the root-mesh Q1 hats attached to the nodes of the union, so the
  // cutoff does not steepen when the mesh is refined.
  auto base = [&](int I, int J) { return inside_closed(roots, I, J) ? 1.0 : 0.0; };
  p.chi = Vec::Zero(g.num_nodes());
  IRect sup{g.N, g.N, 0, 0};
  for (int J = 0; J < mesh.n_root; ++J)
    for (int I = 0; I < mesh.n_root; ++I) {
      const double v00 = base(I, J), v10 = base(I + 1, J), v01 = base(I, J + 1), v11 = base(I + 1, J + 1);
      if (v00 == 0 && v10 == 0 && v01 == 0 && v11 == 0) continue;
      const IRect c{I * m0, J * m0, (I + 1) * m0, (J + 1) * m0};
      sup = {std::min(sup.i0, c.i0), std::min(sup.j0, c.j0), std::max(sup.i1, c.i1), std::max(sup.j1, c.j1)};
      for (int j = c.j0; j <= c.j1; ++j)
        for (int i = c.i0; i <= c.i1; ++i) {
          const double s = double(i - c.i0) / m0, t = double(j - c.j0) / m0;
          p.chi[g.node(i, j)] = (1 - s) * (1 - t) * v00 + s * (1 - t) * v10 + (1 - s) * t * v01 + s * t * v11;
        }
    }
  p.support = sup;
  return p;
}

GridLoad residual_adjoint_load(const Medium& med, const QuantityOfInterest& q, const Vec& z) {
  GridLoad zl;
  zl.pre = grid_flux(med.grid, z);
  for (auto& v : zl.pre) v = -v;
  return add(q.extractor, zl);
}

AdjointSolution solve_adjoint(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q) {
  AdjointSolution a;
  a.load = q.extractor;
  a.z = Vec::Zero(med.grid.num_nodes());
  a.res = solve_msfem(med, space, a.load);
  return a;
}

AdjointSolution solve_adjoint_residual(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q,
                                       const Handbook& hb, const PumRegion& pum) {
  const TruthGrid& g = med.grid;
  if (!hb.domain.contains(q.omega)) throw std::invalid_argument("enrichment: window outside the handbook domain");
  AdjointSolution a;
  a.enriched = true;
  a.z = Vec::Zero(g.num_nodes());
  const SubgridIndex ix{hb.domain};
  for (int j = 0; j <= g.N; ++j)
    for (int i = 0; i <= g.N; ++i) {
      const double c = pum.chi[g.node(i, j)];
      if (c == 0.0) continue;
      if (!inside_closed(hb.domain, i, j))
        throw std::invalid_argument("enrichment: cutoff support exceeds the handbook domain");
      a.z[g.node(i, j)] = c * hb.u[ix.local(i, j)];
    }
  a.load = residual_adjoint_load(med, q, a.z);
  a.res = solve_msfem(med, space, a.load);
  return a;
}

AdmissiblePair admissible_pair(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                               const GridLoad& load, LocalSolverCache& cache) {
  AdmissiblePair p;
  p.u_hat = conforming_recovery(med, space, u);
  p.flux = equilibrate(med, space, u, load, cache);
  p.cre_k = cre_sq(med, space, p.flux.g, p.u_hat);
  double s = 0.0;
  for (double v : p.cre_k) s += v;
  p.cre = std::sqrt(s);
  double nc = 0.0;
  for (double v : broken_difference_sq(med, space, u, p.u_hat)) nc += v;
  p.nonconformity = std::sqrt(nc);
  return p;
}

double residual_functional(const Medium& med, const GridLoad& load, const Vec& u_hat, const Vec& v) {
  const TruthGrid& g = med.grid;
  double b = 0.0;
  for (int T = 0; T < g.num_tris(); ++T)
    b += med.coef.abar[T] * grid_gradient(g, T, u_hat).dot(grid_gradient(g, T, v));
  return apply(g, med.coef, load, v) - b * g.tri_area();
}

GoalReport goal_estimate(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                         const AdmissiblePair& primal, const GridLoad& load, const QuantityOfInterest& q,
                         const AdjointSolution& adj, const AdmissiblePair& adjoint) {
  const TruthGrid& g = med.grid;
  GoalReport r;
  const auto qk_h = evaluate_split(med, space, q, u);
  const auto qk_hat = split_apply(med, space, q.extractor, primal.u_hat);
  for (double v : qk_h) r.q_h += v;
  r.delta_q = evaluate(med, q, primal.u_hat) - r.q_h;

  const Vec u_plus = adj.z + adjoint.u_hat;
  const auto gz = grid_flux(g, adj.z);
  const auto g_plus = combine(gz, adjoint.flux.g, 1.0);
  const auto du = grid_flux(g, primal.u_hat), dup = grid_flux(g, u_plus);
  const auto left = combine(primal.flux.g, du, -1.0);
  const auto right = combine(g_plus, dup, 1.0);

  const int nl = static_cast<int>(space.shapes.size());
  std::vector<double> ck(nl);
  for (int k = 0; k < nl; ++k) {
    ck[k] = 0.5 * grid_dot(med, left, right, space.shapes[k]->cells);
    r.c_bar += ck[k];
  }
  r.e = primal.cre;
  r.e_adj = adjoint.cre;
  const double prod = r.e * r.e_adj;
  const double ep = std::abs(r.delta_q + r.c_bar + 0.5 * prod), em = std::abs(r.delta_q + r.c_bar - 0.5 * prod);
  r.theta = ep >= em ? 1 : -1;
  r.eta = std::max(ep, em);
  r.corrected = r.q_h + r.delta_q + r.c_bar;
  r.residual_term = residual_functional(med, load, primal.u_hat, u_plus);
  r.basic = std::max(std::abs(r.delta_q + r.residual_term + prod), std::abs(r.delta_q + r.residual_term - prod));
  r.energy_bound = primal.cre + primal.nonconformity;

  r.eta_k.resize(nl);
  const double e2 = r.e * r.e, a2 = r.e_adj * r.e_adj;
  for (int k = 0; k < nl; ++k) {
    double w = 0.0;
    if (e2 > 0 && a2 > 0)
      w = 0.5 * primal.cre_k[k] / e2 + 0.5 * adjoint.cre_k[k] / a2;
    r.eta_k[k] = std::abs(qk_hat[k] - qk_h[k] + ck[k] + 0.5 * r.theta * prod * w);
  }
  return r;
}

GoalAnalysis analyze(const Medium& med, const MsFemSpace& space, const GridLoad& load, const QuantityOfInterest& q,
                     const Handbook* hb, const PumRegion* pum, LocalSolverCache& cache) {
  GoalAnalysis a;
  a.u = solve_msfem(med, space, load);
  a.primal = admissible_pair(med, space, a.u, load, cache);
  a.adjoint = (hb && pum) ? solve_adjoint_residual(med, space, q, *hb, *pum) : solve_adjoint(med, space, q);
  a.adjoint_pair = admissible_pair(med, space, a.adjoint.res, a.adjoint.load, cache);
  a.report = goal_estimate(med, space, a.u, a.primal, load, q, a.adjoint, a.adjoint_pair);
  return a;
}

double dwr_indicator(const Medium& med, const MsFemSpace& space, const GridLoad& load, const QuantityOfInterest& q,
                     const Vec& u_hat, double delta_q, BasisCache& cache) {
  std::vector<int> all(space.mesh->size());
  for (int k = 0; k < space.mesh->size(); ++k) all[k] = k;
  const CoarseMesh fine = refine_elements(*space.mesh, all);
  SpaceOptions o = space.opt;
  o.k += 1;
  const MsFemSpace plus = build_space(med, fine, o, cache);
  const auto adj = solve_adjoint(med, plus, q);
  const Vec v = conforming_recovery(med, plus, adj.res);
  return residual_functional(med, load, u_hat, v) + delta_q;
}

}  // namespace msgoal
