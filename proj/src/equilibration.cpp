#include "msgoal/equilibration.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace msgoal {

namespace {

// Gradient of a field given on the sub-grid of r, on triangle (i, j, t).
Vec2 local_gradient(const TruthGrid& g, const SubgridIndex& ix, const Vec& u, int i, int j, int t) {
  const double u00 = u[ix.local(i, j)], u11 = u[ix.local(i + 1, j + 1)];
  if (t == 0) {
    const double u10 = u[ix.local(i + 1, j)];
    return {(u10 - u00) / g.h, (u11 - u10) / g.h};
  }
  const double u01 = u[ix.local(i, j + 1)];
  return {(u11 - u01) / g.h, (u01 - u00) / g.h};
}

std::array<Vec2, 3> hats(int t, double h) {
  if (t == 0) return {Vec2(-1 / h, 0), Vec2(1 / h, -1 / h), Vec2(0, 1 / h)};
  return {Vec2(0, -1 / h), Vec2(1 / h, 0), Vec2(-1 / h, 1 / h)};
}

std::array<bool, 4> dirichlet_sides(const Medium& med, const IRect& c) {
  const auto& d = med.domain.dirichlet;
  const int N = med.grid.N;
  return {d[kLeft] && c.i0 == 0, d[kRight] && c.i1 == N, d[kBottom] && c.j0 == 0, d[kTop] && c.j1 == N};
}

// Sub-grid node of position k along edge e.
int edge_node(const SubgridIndex& ix, const CoarseEdge& e, int k) {
  return e.vertical ? ix.local(e.line, e.lo + k) : ix.local(e.lo + k, e.line);
}

// Integrals of the edge hats.
Vec hat_integrals(const CoarseEdge& e, double h) {
  Vec w = Vec::Constant(e.nodes(), h);
  w[0] = w[e.nodes() - 1] = 0.5 * h;
  return w;
}

Vec edge_mass_apply(const Vec& v, double h) {
  const int n = static_cast<int>(v.size());
  Vec r = Vec::Zero(n);
  for (int k = 0; k + 1 < n; ++k) {
    r[k] += h / 6 * (2 * v[k] + v[k + 1]);
    r[k + 1] += h / 6 * (v[k] + 2 * v[k + 1]);
  }
  return r;
}

}  // namespace

const SpMat& LocalSolverCache::stiffness(const Medium& med, const IRect& c) {
  auto key = std::make_tuple(c.i0, c.j0, c.i1, c.j1);
  auto it = stiffness_.find(key);
  if (it != stiffness_.end()) return *it->second;
  auto K = std::make_shared<SpMat>(subgrid_stiffness(med.grid, med.coef, c));
  stiffness_[key] = K;
  return *K;
}

const ReducedSolver& LocalSolverCache::get(const Medium& med, const IRect& c,
                                           const std::array<bool, 4>& dir) {
  const int mask = dir[0] | dir[1] << 1 | dir[2] << 2 | dir[3] << 3;
  auto key = std::make_tuple(c.i0, c.j0, c.i1, c.j1, mask);
  auto it = solvers_.find(key);
  if (it != solvers_.end()) return *it->second;
  const SubgridIndex ix{c};
  std::vector<char> fixed(ix.size(), 0);
  for (int n = 0; n < ix.size(); ++n) {
    const int i = ix.gi(n), j = ix.gj(n);
    if ((dir[kLeft] && i == c.i0) || (dir[kRight] && i == c.i1) || (dir[kBottom] && j == c.j0) ||
        (dir[kTop] && j == c.j1))
      fixed[n] = 1;
  }
  if (mask == 0) fixed[0] = 1;  // pure Neumann: pin one node
  auto s = std::make_shared<ReducedSolver>(stiffness(med, c), fixed);
  solvers_[key] = s;
  return *s;
}

EdgeSet build_edges(const Medium& med, const MsFemSpace& space) {
  const CoarseMesh& mesh = *space.mesh;
  EdgeSet es;
  es.of_leaf.resize(mesh.size());
  std::vector<int> owner;
  for (int k = 0; k < mesh.size(); ++k) {
    const IRect c = mesh.cells(mesh.leaves[k]);
    for (int s = 0; s < 4; ++s) {
      const auto nbs = mesh.neighbors(k, static_cast<Side>(s));
      CoarseEdge e;
      if (nbs.empty()) {
        e.kind = med.domain.dirichlet[s] ? CoarseEdge::dirichlet : CoarseEdge::neumann;
      } else {
        if (nbs.size() > 1) continue;
        const int nsize = mesh.cells(mesh.leaves[nbs[0]]).nx();
        if (nsize < c.nx()) continue;
        if (nsize == c.nx() && (s == kLeft || s == kBottom)) continue;
      }
      const int nb = nbs.empty() ? -1 : nbs[0];
      e.vertical = s == kLeft || s == kRight;
      e.line = s == kLeft ? c.i0 : s == kRight ? c.i1 : s == kBottom ? c.j0 : c.j1;
      e.lo = e.vertical ? c.j0 : c.i0;
      e.hi = e.vertical ? c.j1 : c.i1;
      const bool k_minus = s == kRight || s == kTop;
      e.minus = k_minus ? k : nb;
      e.plus = k_minus ? nb : k;
      es.edges.push_back(e);
      owner.push_back(k);
    }
  }
  const int n_ext = space.dofs.n_ext;
  for (size_t id = 0; id < es.edges.size(); ++id) {
    CoarseEdge& e = es.edges[id];
    if (e.minus >= 0) es.of_leaf[e.minus].emplace_back(static_cast<int>(id), 1);
    if (e.plus >= 0) es.of_leaf[e.plus].emplace_back(static_cast<int>(id), -1);
    // Lagrange traces from the owning (smaller) side.
    const int k = owner[id];
    const auto& sh = *space.shapes[k];
    const SubgridIndex ix{sh.cells};
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(e.nodes(), n_ext);
    const SpMat& T = space.dofs.T[k];
    for (int a = 0; a < T.outerSize(); ++a)
      for (SpMat::InnerIterator it(T, a); it; ++it)
        for (int q = 0; q < e.nodes(); ++q)
          full(q, it.row()) += it.value() * sh.psi0[a][edge_node(ix, e, q)];
    for (int i = 0; i < n_ext; ++i)
      if (full.col(i).cwiseAbs().maxCoeff() > 1e-13) e.dofs.push_back(i);
    e.tau.resize(e.nodes(), e.dofs.size());
    for (size_t c = 0; c < e.dofs.size(); ++c) e.tau.col(c) = full.col(e.dofs[c]);
  }
  return es;
}

Vec averaged_traction(const Medium& med, const CoarseEdge& e, const MsFemSpace& space,
                      const MsFemSolution& u, const GridLoad& load) {
  const TruthGrid& g = med.grid;
  const double h = g.h;
  Vec m = Vec::Zero(e.nodes());
  if (e.kind == CoarseEdge::neumann) return m;
  const Vec2 n = e.vertical ? Vec2(1, 0) : Vec2(0, 1);
  auto one_sided = [&](int leaf, bool minus, int k) {
    int i, j, t;
    if (e.vertical) {
      i = minus ? e.line - 1 : e.line;
      j = e.lo + k;
      t = minus ? 0 : 1;
    } else {
      i = e.lo + k;
      j = minus ? e.line - 1 : e.line;
      t = minus ? 1 : 0;
    }
    const SubgridIndex ix{space.shapes[leaf]->cells};
    Vec2 gr = local_gradient(g, ix, u.local[leaf], i, j, t);
    const int T = g.tri(i, j, t);
    if (load.has_pre()) gr -= load.pre[T];
    return med.coef.abar[T] * gr.dot(n);
  };
  for (int k = 0; k + 1 < e.nodes(); ++k) {
    double q = 0.0;
    int cnt = 0;
    if (e.minus >= 0) q += one_sided(e.minus, true, k), ++cnt;
    if (e.plus >= 0) q += one_sided(e.plus, false, k), ++cnt;
    q /= cnt;
    m[k] += 0.5 * h * q;
    m[k + 1] += 0.5 * h * q;
  }
  return m;
}

EquilibratedFlux equilibrate(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                             const GridLoad& load, LocalSolverCache& cache) {
  const TruthGrid& g = med.grid;
  const double h = g.h;
  const int nl = static_cast<int>(space.shapes.size());
  const EdgeSet es = build_edges(med, space);
  const int ne = static_cast<int>(es.edges.size());

  // Element residuals against the test functions, and local loads.
  std::vector<Vec> lK(nl), RK(nl);
  for (int k = 0; k < nl; ++k) {
    const IRect& c = space.shapes[k]->cells;
    lK[k] = subgrid_load(g, med.coef, load, c);
    const Vec res = cache.stiffness(med, c) * u.local[k] - lK[k];
    const auto& tf = space.test(k);
    Vec r(tf.size());
    for (size_t a = 0; a < tf.size(); ++a) r[a] = tf[a].dot(res);
    RK[k] = space.dofs.T[k] * r;  // per extended DOF
  }

  // Averaged tractions and their projections on the Lagrange traces.
  std::vector<Vec> mbar(ne), bbar(ne), b(ne);
  std::vector<std::vector<int>> edges_of_dof(space.dofs.n_ext);
  for (int id = 0; id < ne; ++id) {
    const CoarseEdge& e = es.edges[id];
    mbar[id] = averaged_traction(med, e, space, u, load);
    bbar[id] = e.tau.transpose() * mbar[id];
    b[id] = bbar[id];
    if (e.kind != CoarseEdge::neumann)
      for (int i : e.dofs) edges_of_dof[i].push_back(id);
  }
  auto column = [&](int id, int i) {
    const auto& d = es.edges[id].dofs;
    return static_cast<int>(std::find(d.begin(), d.end(), i) - d.begin());
  };

  EquilibratedFlux out;
  // Vertex systems: sum over the edges of K of sign * b = R_K(phi_i).
  for (int i = 0; i < space.dofs.n_ext; ++i) {
    const auto& sup = space.dofs.support[i];
    const auto& eds = edges_of_dof[i];
    if (sup.empty() || eds.empty()) continue;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(sup.size(), eds.size());
    Vec rhs(sup.size()), w(eds.size()), b0(eds.size());
    for (size_t q = 0; q < eds.size(); ++q) {
      w[q] = std::sqrt(es.edges[eds[q]].length(h));
      b0[q] = bbar[eds[q]][column(eds[q], i)];
    }
    double scale = 0.0;
    for (size_t p = 0; p < sup.size(); ++p) {
      const int k = sup[p];
      rhs[p] = RK[k][i];
      scale = std::max(scale, std::abs(rhs[p]));
      for (const auto& [id, sg] : es.of_leaf[k]) {
        auto it = std::find(eds.begin(), eds.end(), id);
        if (it != eds.end()) C(p, it - eds.begin()) += sg;
      }
    }
    const Vec r0 = rhs - C * b0;
    const Eigen::MatrixXd CW = C * w.asDiagonal();
    const Vec y = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(CW).solve(r0);
    const double defect = (CW * y - r0).lpNorm<Eigen::Infinity>();
    out.max_vertex_residual = std::max(out.max_vertex_residual, defect);
    if (defect > 1e-9 * std::max(1.0, scale + b0.lpNorm<Eigen::Infinity>())) ++out.fallback_vertices;
    for (size_t q = 0; q < eds.size(); ++q) b[eds[q]][column(eds[q], i)] = b0[q] + w[q] * y[q];
  }

  // Edge tractions m = mbar + M tau alpha with tau^T m = b.
  out.tractions.resize(ne);
  for (int id = 0; id < ne; ++id) {
    const CoarseEdge& e = es.edges[id];
    if (e.kind == CoarseEdge::neumann) {
      out.tractions[id] = Vec::Zero(e.nodes());
      continue;
    }
    Eigen::MatrixXd N(e.nodes(), e.dofs.size());
    for (int c = 0; c < N.cols(); ++c) N.col(c) = edge_mass_apply(e.tau.col(c), h);
    const Eigen::MatrixXd G = e.tau.transpose() * N;
    const Vec alpha = G.ldlt().solve(b[id] - bbar[id]);
    out.tractions[id] = mbar[id] + N * alpha;
  }

  // Constant corrections per edge restoring exact element equilibrium.
  out.equilibrium.assign(nl, 0.0);
  auto element_balance = [&](int k) {
    double r = lK[k].sum();
    for (const auto& [id, sg] : es.of_leaf[k]) r += sg * out.tractions[id].sum();
    return r;
  };
  {
    std::vector<int> var;
    for (int id = 0; id < ne; ++id)
      if (es.edges[id].kind != CoarseEdge::neumann) var.push_back(id);
    Vec r(nl);
    for (int k = 0; k < nl; ++k) r[k] = element_balance(k);
    std::vector<Triplet> trip;
    for (int id : var) {
      const CoarseEdge& e = es.edges[id];
      const double L = e.length(h);
      const int a = e.minus, c = e.plus;
      if (a >= 0) trip.emplace_back(a, a, L);
      if (c >= 0) trip.emplace_back(c, c, L);
      if (a >= 0 && c >= 0) trip.emplace_back(a, c, -L), trip.emplace_back(c, a, -L);
    }
    SpMat Lap(nl, nl);
    Lap.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(Lap);
    if (ldlt.info() != Eigen::Success) throw SolverError("equilibration: singular element graph", -1.0);
    const Vec lam = ldlt.solve(-r);
    for (int id : var) {
      const CoarseEdge& e = es.edges[id];
      const double x = ((e.minus >= 0 ? lam[e.minus] : 0.0) - (e.plus >= 0 ? lam[e.plus] : 0.0));
      out.tractions[id] += x * hat_integrals(e, h);
    }
  }
  for (int k = 0; k < nl; ++k) out.equilibrium[k] = element_balance(k);

  // Local problems on each leaf.
  out.g.assign(g.num_tris(), Vec2::Zero());
  for (int k = 0; k < nl; ++k) {
    const IRect& c = space.shapes[k]->cells;
    const SubgridIndex ix{c};
    Vec rhs = lK[k];
    for (const auto& [id, sg] : es.of_leaf[k]) {
      const CoarseEdge& e = es.edges[id];
      for (int q = 0; q < e.nodes(); ++q) rhs[edge_node(ix, e, q)] += sg * out.tractions[id][q];
    }
    const auto dir = dirichlet_sides(med, c);
    const Vec w = cache.get(med, c, dir).solve(rhs);
    for (int j = c.j0; j < c.j1; ++j)
      for (int i = c.i0; i < c.i1; ++i)
        for (int t = 0; t < 2; ++t) out.g[g.tri(i, j, t)] = local_gradient(g, ix, w, i, j, t);
  }
  return out;
}

std::vector<Vec2> grid_flux(const TruthGrid& g, const Vec& v) {
  std::vector<Vec2> out(g.num_tris());
  for (int t = 0; t < g.num_tris(); ++t) out[t] = grid_gradient(g, t, v);
  return out;
}

std::vector<double> cre_sq(const Medium& med, const MsFemSpace& space, const std::vector<Vec2>& p,
                           const Vec& v) {
  const TruthGrid& g = med.grid;
  std::vector<double> out(space.shapes.size(), 0.0);
  for (size_t k = 0; k < out.size(); ++k) {
    const IRect& c = space.shapes[k]->cells;
    double s = 0.0;
    for (int j = c.j0; j < c.j1; ++j)
      for (int i = c.i0; i < c.i1; ++i)
        for (int t = 0; t < 2; ++t) {
          const int T = g.tri(i, j, t);
          s += med.coef.abar[T] * (p[T] - grid_gradient(g, T, v)).squaredNorm();
        }
    out[k] = s * g.tri_area();
  }
  return out;
}

double cre(const Medium& med, const std::vector<Vec2>& p, const Vec& v) {
  const TruthGrid& g = med.grid;
  double s = 0.0;
  for (int T = 0; T < g.num_tris(); ++T)
    s += med.coef.abar[T] * (p[T] - grid_gradient(g, T, v)).squaredNorm();
  return std::sqrt(s * g.tri_area());
}

double flux_norm_sq(const Medium& med, const std::vector<Vec2>& p) {
  double s = 0.0;
  for (size_t T = 0; T < p.size(); ++T) s += med.coef.abar[T] * p[T].squaredNorm();
  return s * med.grid.tri_area();
}

EnergyBound energy_error_bound(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                               const Vec& u_hat, const EquilibratedFlux& p) {
  EnergyBound b;
  b.cre = cre(med, p.g, u_hat);
  double nc = 0.0;
  for (double v : broken_difference_sq(med, space, u, u_hat)) nc += v;
  b.nonconformity = std::sqrt(nc);
  b.bound = b.cre + b.nonconformity;
  return b;
}

PragerSynge prager_synge(const Medium& med, const Vec& u_hat, const std::vector<Vec2>& p, const Vec& u_ref) {
  const TruthGrid& g = med.grid;
  double lhs = 0, q = 0, mid = 0;
  for (int T = 0; T < g.num_tris(); ++T) {
    const double a = med.coef.abar[T];
    const Vec2 gh = grid_gradient(g, T, u_hat), gr = grid_gradient(g, T, u_ref);
    lhs += a * (p[T] - gh).squaredNorm();
    q += a * (p[T] - gr).squaredNorm();
    mid += a * (gr - 0.5 * (p[T] + gh)).squaredNorm();
  }
  const double area = g.tri_area();
  PragerSynge ps;
  ps.lhs = lhs * area;
  ps.rhs = q * area + grid_energy_sq(g, med.coef, u_ref - u_hat);
  ps.cre = std::sqrt(ps.lhs);
  ps.twice_mid = 2.0 * std::sqrt(mid * area);
  return ps;
}

double weak_equilibrium_defect(const Medium& med, const std::vector<Vec2>& p, const GridLoad& load) {
  const TruthGrid& g = med.grid;
  Vec r = -subgrid_load(g, med.coef, load, g.all());
  const double area = g.tri_area();
  for (int T = 0; T < g.num_tris(); ++T) {
    const auto nd = g.tri_nodes(T);
    const auto gr = hats(T % 2, g.h);
    for (int a = 0; a < 3; ++a) r[nd[a]] += med.coef.abar[T] * area * p[T].dot(gr[a]);
  }
  const auto& d = med.domain.dirichlet;
  double m = 0.0;
  for (int j = 0; j <= g.N; ++j)
    for (int i = 0; i <= g.N; ++i) {
      if ((d[kLeft] && i == 0) || (d[kRight] && i == g.N) || (d[kBottom] && j == 0) || (d[kTop] && j == g.N))
        continue;
      m = std::max(m, std::abs(r[g.node(i, j)]));
    }
  return m;
}

}  // namespace msgoal
