#include "msgoal/msfem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace msgoal {

Medium make_medium(const CoarseMesh& mesh, const CoefficientField& A, double eps) {
  Medium m;
  m.grid = mesh.grid;
  m.domain = mesh.domain;
  m.coef = grid_coefficient(mesh.grid, A);
  m.eps = eps;
  return m;
}

Vec restrict_grid(const TruthGrid& g, const Vec& v, const IRect& r) {
  const SubgridIndex ix{r};
  Vec out(ix.size());
  for (int n = 0; n < ix.size(); ++n) out[n] = v[g.node(ix.gi(n), ix.gj(n))];
  return out;
}

Vec restrict_sub(const IRect& from, const Vec& v, const IRect& to) {
  const SubgridIndex src{from}, dst{to};
  Vec out(dst.size());
  for (int n = 0; n < dst.size(); ++n) out[n] = v[src.local(dst.gi(n), dst.gj(n))];
  return out;
}

double local_energy_sq(const Medium& med, const IRect& r, const Vec& v) {
  const TruthGrid& g = med.grid;
  const SubgridIndex ix{r};
  const double area = g.tri_area(), ih = 1.0 / g.h;
  double s = 0.0;
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      const double v00 = v[ix.local(i, j)], v10 = v[ix.local(i + 1, j)];
      const double v01 = v[ix.local(i, j + 1)], v11 = v[ix.local(i + 1, j + 1)];
      // Lower-right and upper-left triangles.
      const double a0 = (v10 - v00) * ih, b0 = (v11 - v10) * ih;
      const double a1 = (v11 - v01) * ih, b1 = (v01 - v00) * ih;
      s += med.coef.abar[g.tri(i, j, 0)] * area * (a0 * a0 + b0 * b0);
      s += med.coef.abar[g.tri(i, j, 1)] * area * (a1 * a1 + b1 * b1);
    }
  }
  return s;
}

double lagrange_1d(int k, int a, double t) {
  double v = 1.0;
  const double ta = double(a) / k;
  for (int m = 0; m <= k; ++m) {
    if (m == a) continue;
    const double tm = double(m) / k;
    v *= (t - tm) / (ta - tm);
  }
  return v;
}

double lagrange_q(int k, int a, int b, const Rect& r, double x, double y) {
  return lagrange_1d(k, a, (x - r.x0) / r.width()) * lagrange_1d(k, b, (y - r.y0) / r.height());
}

HostSolution solve_host(const Medium& med, const IRect& host, int s, int width) {
  const TruthGrid& g = med.grid;
  HostSolution h;
  h.host = host;
  h.s = s;
  h.patch = host.grow(width).intersect(g.all());
  const IRect& p = h.patch;
  if (p.nx() % s != 0 || p.ny() % s != 0 || (host.i0 - p.i0) % s != 0 || (host.j0 - p.j0) % s != 0)
    throw std::invalid_argument("host solve: patch not aligned with the fine mesh");
  const SpMat KG = subgrid_stiffness(g, med.coef, p);
  const SpMat P = subgrid_prolongation(p, s);
  const SpMat K = SpMat(P.transpose() * KG * P);
  const int cx = p.nx() / s, cy = p.ny() / s, n = (cx + 1) * (cy + 1);
  std::vector<char> fixed(n, 0);
  Vec xs(n), ys(n);
  std::array<Vec, 4> data;
  for (auto& d : data) d.resize(n);
  for (int b = 0; b <= cy; ++b) {
    for (int a = 0; a <= cx; ++a) {
      const int v = b * (cx + 1) + a;
      fixed[v] = (a == 0 || b == 0 || a == cx || b == cy);
      const int gi = p.i0 + a * s, gj = p.j0 + b * s;
      xs[v] = g.x(gi);
      ys[v] = g.y(gj);
      // Bilinear corner functions of the host, extended to the whole patch.
      const double xi = double(gi - host.i0) / host.nx(), eta = double(gj - host.j0) / host.ny();
      data[0][v] = (1 - xi) * (1 - eta);
      data[1][v] = xi * (1 - eta);
      data[2][v] = (1 - xi) * eta;
      data[3][v] = xi * eta;
    }
  }
  const ReducedSolver solver(K, fixed);
  const Vec zero = Vec::Zero(n);
  for (int c = 0; c < 4; ++c) h.corner[c] = solver.solve(zero, data[c]);
  h.w1 = solver.solve(zero, xs);
  h.w2 = solver.solve(zero, ys);
  return h;
}

namespace {

// Values of a host field (nodal on the host patch mesh) at the fine nodes of
// the aligned mesh of cells c with the same coarsening.
Vec host_values_on(const HostSolution& h, const Vec& field, const IRect& c) {
  const int s = h.s, cxp = h.patch.nx() / s;
  const int cx = c.nx() / s, cy = c.ny() / s;
  Vec out((cx + 1) * (cy + 1));
  for (int b = 0; b <= cy; ++b)
    for (int a = 0; a <= cx; ++a) {
      const int A = (c.i0 - h.patch.i0) / s + a, B = (c.j0 - h.patch.j0) / s + b;
      out[b * (cx + 1) + a] = field[B * (cxp + 1) + A];
    }
  return out;
}

}  // namespace

HarmonicMap compute_harmonic_coordinates(const Medium& med, const IRect& cells, int s, int width,
                                         const IRect& on) {
  const HostSolution h = solve_host(med, cells, s, width);
  HarmonicMap m;
  m.cells = on.empty() ? cells : on;
  if (!h.patch.contains(m.cells)) throw std::invalid_argument("harmonic map: target outside patch");
  const SpMat P = subgrid_prolongation(h.patch, s);
  m.w1 = restrict_sub(h.patch, P * h.w1, m.cells);
  m.w2 = restrict_sub(h.patch, P * h.w2, m.cells);
  return m;
}

// ---------------------------------------------------------------------------

void BasisCache::clear() {
  hosts_.clear();
  shapes_.clear();
}

std::shared_ptr<const HostSolution> BasisCache::host(const Medium& med, const IRect& host, int s,
                                                     int width) {
  const HostKey key{host.i0, host.j0, host.nx(), host.ny(), s, width};
  auto it = hosts_.find(key);
  if (it != hosts_.end()) return it->second;
  auto h = std::make_shared<const HostSolution>(solve_host(med, host, s, width));
  ++host_solves_;
  fine_dofs_ += (h->patch.nx() / s + 1) * (h->patch.ny() / s + 1);
  hosts_[key] = h;
  return h;
}

std::shared_ptr<const LocalShapes> BasisCache::shapes(const Medium& med, const CoarseMesh& mesh,
                                                      const Leaf& leaf, int k, BasisKind kind) {
  const IRect c = mesh.cells(leaf);
  const LeafParams& p = leaf.p;
  const IRect hc = mesh.cells(p.host_level, p.host_ix, p.host_iy);
  const int s = p.host_s;
  const ShapeKey key{c.i0, c.j0, c.nx(), s, k, static_cast<int>(kind),
                     hc.i0, hc.j0, hc.nx(), p.host_s, p.host_width, 0};
  auto it = shapes_.find(key);
  if (it != shapes_.end()) return it->second;

  if (c.nx() % s != 0) throw std::invalid_argument("shapes: fine mesh does not divide the element");
  const TruthGrid& g = med.grid;
  const Rect r = g.rect(c);
  const int cx = c.nx() / s, cy = c.ny() / s, nloc = (k + 1) * (k + 1);
  const SpMat P = subgrid_prolongation(c, s);
  auto sh = std::make_shared<LocalShapes>();
  sh->cells = c;
  sh->s = s;
  sh->k = k;

  std::vector<Vec> lag(nloc, Vec((cx + 1) * (cy + 1)));
  for (int b = 0; b <= cy; ++b)
    for (int a = 0; a <= cx; ++a) {
      const double x = g.x(c.i0 + a * s), y = g.y(c.j0 + b * s);
      for (int q = 0; q <= k; ++q)
        for (int pp = 0; pp <= k; ++pp) lag[pp + (k + 1) * q][b * (cx + 1) + a] = lagrange_q(k, pp, q, r, x, y);
    }
  for (int i = 0; i < nloc; ++i) sh->psi0.push_back(P * lag[i]);

  if (kind == BasisKind::standard) {
    sh->psi = sh->psi0;
  } else {
    auto h = host(med, hc, s, p.host_width);
    if (k == 1 && hc == c) {
      for (int i = 0; i < 4; ++i) sh->psi.push_back(P * host_values_on(*h, h->corner[i], c));
    } else {
      // Composition of the element's Lagrange shapes with the harmonic coordinates.
      const Vec w1 = host_values_on(*h, h->w1, c), w2 = host_values_on(*h, h->w2, c);
      for (int q = 0; q <= k; ++q)
        for (int pp = 0; pp <= k; ++pp) {
          Vec v(w1.size());
          for (int n = 0; n < v.size(); ++n) v[n] = lagrange_q(k, pp, q, r, w1[n], w2[n]);
          sh->psi.push_back(P * v);
        }
    }
  }

  const SpMat KG = subgrid_stiffness(g, med.coef, c);
  Eigen::MatrixXd Psi(sh->psi[0].size(), nloc), Psi0(sh->psi[0].size(), nloc);
  for (int i = 0; i < nloc; ++i) {
    Psi.col(i) = sh->psi[i];
    Psi0.col(i) = sh->psi0[i];
  }
  const Eigen::MatrixXd KPsi = KG * Psi;
  sh->K = Psi.transpose() * KPsi;
  sh->K = 0.5 * (sh->K + sh->K.transpose());
  sh->Kpg = Psi0.transpose() * KPsi;
  shapes_[key] = sh;
  return sh;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kLattice = 840;

using NodeKey = std::pair<std::int64_t, std::int64_t>;  // (y, x) in grid units / 840

NodeKey node_key(const IRect& c, int k, int a, int b) {
  return {c.j0 * kLattice + b * c.ny() * kLattice / k, c.i0 * kLattice + a * c.nx() * kLattice / k};
}

}  // namespace

DofMap build_dofs(const CoarseMesh& mesh, int k) {
  if (k < 1 || kLattice % k != 0) throw std::invalid_argument("dofs: unsupported order");
  const int nl = mesh.size(), nloc = (k + 1) * (k + 1);
  std::vector<std::vector<NodeKey>> keys(nl, std::vector<NodeKey>(nloc));
  for (int e = 0; e < nl; ++e) {
    const IRect c = mesh.cells(mesh.leaves[e]);
    if ((c.nx() * kLattice) % k != 0) throw std::invalid_argument("dofs: lattice too coarse");
    for (int b = 0; b <= k; ++b)
      for (int a = 0; a <= k; ++a) keys[e][a + (k + 1) * b] = node_key(c, k, a, b);
  }

  // Hanging nodes: element nodes on a side of a larger neighbour that are not
  // nodes of that neighbour. Their value is the 1D Lagrange trace of the big side.
  std::map<NodeKey, std::vector<std::pair<NodeKey, double>>> hanging;
  for (int e = 0; e < nl; ++e) {
    const IRect c = mesh.cells(mesh.leaves[e]);
    for (int si = 0; si < 4; ++si) {
      const Side s = static_cast<Side>(si);
      for (int nb : mesh.neighbors(e, s)) {
        const IRect cb = mesh.cells(mesh.leaves[nb]);
        if (cb.nx() <= c.nx()) continue;
        const bool vertical = (s == kLeft || s == kRight);
        // Big neighbour's nodes along the shared line.
        std::vector<NodeKey> big;
        for (int t = 0; t <= k; ++t) {
          if (vertical) big.push_back(node_key(cb, k, s == kLeft ? k : 0, t));
          else big.push_back(node_key(cb, k, t, s == kBottom ? k : 0));
        }
        for (int t = 0; t <= k; ++t) {
          const NodeKey mine = vertical ? keys[e][(s == kLeft ? 0 : k) + (k + 1) * t]
                                        : keys[e][t + (k + 1) * (s == kBottom ? 0 : k)];
          if (std::find(big.begin(), big.end(), mine) != big.end()) continue;
          const double lo = vertical ? cb.j0 * double(kLattice) : cb.i0 * double(kLattice);
          const double len = (vertical ? cb.ny() : cb.nx()) * double(kLattice);
          const double pos = vertical ? double(mine.first) : double(mine.second);
          const double tt = (pos - lo) / len;
          std::vector<std::pair<NodeKey, double>> ms;
          for (int m = 0; m <= k; ++m) {
            const double w = lagrange_1d(k, m, tt);
            if (std::abs(w) > 1e-15) ms.emplace_back(big[m], w);
          }
          hanging[mine] = ms;
        }
      }
    }
  }

  DofMap d;
  d.k = k;
  std::map<NodeKey, int> index;
  for (int e = 0; e < nl; ++e)
    for (const auto& key : keys[e])
      if (!hanging.count(key)) index.emplace(key, 0);
  int n = 0;
  for (auto& kv : index) kv.second = n++;
  d.n_ext = n;
  d.hanging = static_cast<int>(hanging.size());
  d.node.resize(n);
  d.dirichlet.assign(n, 0);
  d.free_index.assign(n, -1);
  const TruthGrid& g = mesh.grid;
  for (auto& [key, i] : index) {
    const double gx = double(key.second) / kLattice, gy = double(key.first) / kLattice;
    d.node[i] = {g.box.x0 + gx * g.h, g.box.y0 + gy * g.h};
    const bool onl = key.second == 0, onr = key.second == std::int64_t(g.N) * kLattice;
    const bool onb = key.first == 0, ont = key.first == std::int64_t(g.N) * kLattice;
    const auto& dir = mesh.domain.dirichlet;
    d.dirichlet[i] = (onl && dir[kLeft]) || (onr && dir[kRight]) || (onb && dir[kBottom]) || (ont && dir[kTop]);
  }
  for (int i = 0; i < n; ++i)
    if (!d.dirichlet[i]) d.free_index[i] = d.n_free++;

  std::function<void(const NodeKey&, double, std::vector<std::pair<int, double>>&, int)> resolve =
      [&](const NodeKey& key, double w, std::vector<std::pair<int, double>>& out, int depth) {
        if (depth > 32) throw std::runtime_error("dofs: cyclic hanging constraints");
        auto it = index.find(key);
        if (it != index.end()) {
          out.emplace_back(it->second, w);
          return;
        }
        for (const auto& [m, wm] : hanging.at(key)) resolve(m, w * wm, out, depth + 1);
      };
  d.T.resize(nl);
  d.support.assign(n, {});
  for (int e = 0; e < nl; ++e) {
    std::vector<Triplet> trip;
    for (int a = 0; a < nloc; ++a) {
      std::vector<std::pair<int, double>> terms;
      resolve(keys[e][a], 1.0, terms, 0);
      for (auto [i, w] : terms) trip.emplace_back(i, a, w);
    }
    d.T[e].resize(n, nloc);
    d.T[e].setFromTriplets(trip.begin(), trip.end());
    for (int col = 0; col < d.T[e].outerSize(); ++col)
      for (SpMat::InnerIterator it(d.T[e], col); it; ++it) {
        auto& sup = d.support[it.row()];
        if (sup.empty() || sup.back() != e) sup.push_back(e);
      }
  }
  for (auto& sup : d.support) {
    std::sort(sup.begin(), sup.end());
    sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
  }
  return d;
}

// ---------------------------------------------------------------------------

MsFemSpace build_space(const Medium& med, const CoarseMesh& mesh, const SpaceOptions& opt,
                       BasisCache& cache) {
  MsFemSpace sp;
  sp.mesh = &mesh;
  sp.opt = opt;
  sp.dofs = build_dofs(mesh, opt.k);
  sp.shapes.reserve(mesh.size());
  for (const Leaf& l : mesh.leaves) {
    sp.shapes.push_back(cache.shapes(med, mesh, l, opt.k, opt.basis));
    if (opt.basis == BasisKind::multiscale && l.p.host_width > 0) sp.conforming = false;
    // Composition with an ancestor's harmonic coordinates breaks trace conformity too.
    const IRect hc = mesh.cells(l.p.host_level, l.p.host_ix, l.p.host_iy);
    if (opt.basis == BasisKind::multiscale && hc != mesh.cells(l)) sp.conforming = false;
  }
  return sp;
}

const SpMat& MsFemSpace::matrix() const {
  if (B_.rows() == dofs.n_free && B_.rows() > 0) return B_;
  std::vector<Triplet> trip;
  const bool gal = opt.form == Formulation::galerkin;
  for (int e = 0; e < static_cast<int>(shapes.size()); ++e) {
    const Eigen::MatrixXd& Ke = gal ? shapes[e]->K : shapes[e]->Kpg;
    const SpMat& T = dofs.T[e];
    // Rows: test DOFs, columns: trial DOFs.
    std::vector<std::pair<int, int>> rows;  // (free index, local)
    std::vector<double> w;
    for (int col = 0; col < T.outerSize(); ++col)
      for (SpMat::InnerIterator it(T, col); it; ++it) {
        const int f = dofs.free_index[it.row()];
        if (f < 0) continue;
        rows.emplace_back(f, col);
        w.push_back(it.value());
      }
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < rows.size(); ++j)
        trip.emplace_back(rows[i].first, rows[j].first, w[i] * w[j] * Ke(rows[i].second, rows[j].second));
  }
  B_.resize(dofs.n_free, dofs.n_free);
  B_.setFromTriplets(trip.begin(), trip.end());
  return B_;
}

Vec MsFemSpace::solve_free(const Vec& rhs) const {
  const SpMat& B = matrix();
  if (B.rows() == 0) return Vec();
  if (opt.form == Formulation::galerkin) {
    if (!ldlt_) {
      ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(B);
      if (ldlt_->info() != Eigen::Success) throw SolverError("msfem: singular coarse system", -1.0);
    }
    return ldlt_->solve(rhs);
  }
  if (!lu_) {
    lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
    lu_->analyzePattern(B);
    lu_->factorize(B);
    if (lu_->info() != Eigen::Success) throw SolverError("msfem: singular coarse system", -1.0);
  }
  return lu_->solve(rhs);
}

std::vector<Vec> element_loads(const Medium& med, const MsFemSpace& space, const GridLoad& load,
                               bool test_functions) {
  const int nl = static_cast<int>(space.shapes.size());
  std::vector<Vec> out(nl);
  for (int e = 0; e < nl; ++e) {
    const auto& sh = *space.shapes[e];
    const Vec b = subgrid_load(med.grid, med.coef, load, sh.cells);
    const auto& fns = test_functions ? space.test(e) : sh.psi;
    out[e].resize(fns.size());
    for (size_t a = 0; a < fns.size(); ++a) out[e][a] = fns[a].dot(b);
  }
  return out;
}

MsFemSolution expand(const MsFemSpace& space, const Vec& coeff_ext) {
  MsFemSolution u;
  u.coeff = coeff_ext;
  const int nl = static_cast<int>(space.shapes.size());
  u.local.resize(nl);
  for (int e = 0; e < nl; ++e) {
    const auto& sh = *space.shapes[e];
    const Vec c = space.dofs.T[e].transpose() * coeff_ext;
    u.local[e] = Vec::Zero(sh.psi[0].size());
    for (size_t a = 0; a < sh.psi.size(); ++a)
      if (c[a] != 0.0) u.local[e] += c[a] * sh.psi[a];
  }
  return u;
}

MsFemSolution solve_msfem(const Medium& med, const MsFemSpace& space, const GridLoad& load) {
  const auto m = element_loads(med, space, load);
  Vec F = Vec::Zero(space.dofs.n_free);
  for (size_t e = 0; e < m.size(); ++e) {
    const Vec Fe = space.dofs.T[e] * m[e];
    for (int i = 0; i < space.dofs.n_ext; ++i)
      if (space.dofs.free_index[i] >= 0) F[space.dofs.free_index[i]] += Fe[i];
  }
  const Vec c = space.solve_free(F);
  Vec ext = Vec::Zero(space.dofs.n_ext);
  for (int i = 0; i < space.dofs.n_ext; ++i)
    if (space.dofs.free_index[i] >= 0) ext[i] = c[space.dofs.free_index[i]];
  return expand(space, ext);
}

Vec discrete_residual(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                      const GridLoad& load) {
  const auto m = element_loads(med, space, load);
  const bool gal = space.opt.form == Formulation::galerkin;
  Vec r = Vec::Zero(space.dofs.n_free);
  for (size_t e = 0; e < m.size(); ++e) {
    const auto& sh = *space.shapes[e];
    const Vec cl = space.dofs.T[e].transpose() * u.coeff;
    const Vec re = m[e] - (gal ? sh.K : sh.Kpg) * cl;
    const Vec Re = space.dofs.T[e] * re;
    for (int i = 0; i < space.dofs.n_ext; ++i)
      if (space.dofs.free_index[i] >= 0) r[space.dofs.free_index[i]] += Re[i];
  }
  return r;
}

namespace {

Vec average_on_grid(const Medium& med, const MsFemSpace& space, const MsFemSolution& u) {
  const TruthGrid& g = med.grid;
  Vec sum = Vec::Zero(g.num_nodes()), cnt = Vec::Zero(g.num_nodes());
  for (size_t e = 0; e < space.shapes.size(); ++e) {
    const SubgridIndex ix{space.shapes[e]->cells};
    for (int n = 0; n < ix.size(); ++n) {
      const int G = g.node(ix.gi(n), ix.gj(n));
      sum[G] += u.local[e][n];
      cnt[G] += 1.0;
    }
  }
  return sum.cwiseQuotient(cnt.cwiseMax(1.0));
}

}  // namespace

Vec conforming_recovery(const Medium& med, const MsFemSpace& space, const MsFemSolution& u) {
  Vec v = average_on_grid(med, space, u);
  const TruthGrid& g = med.grid;
  const auto& dir = med.domain.dirichlet;
  for (int t = 0; t <= g.N; ++t) {
    if (dir[kLeft]) v[g.node(0, t)] = 0.0;
    if (dir[kRight]) v[g.node(g.N, t)] = 0.0;
    if (dir[kBottom]) v[g.node(t, 0)] = 0.0;
    if (dir[kTop]) v[g.node(t, g.N)] = 0.0;
  }
  return v;
}

Vec to_grid(const Medium& med, const MsFemSpace& space, const MsFemSolution& u) {
  return average_on_grid(med, space, u);
}

std::vector<double> broken_difference_sq(const Medium& med, const MsFemSpace& space,
                                         const MsFemSolution& u, const Vec& v) {
  std::vector<double> out(space.shapes.size());
  for (size_t e = 0; e < out.size(); ++e) {
    const IRect& c = space.shapes[e]->cells;
    out[e] = local_energy_sq(med, c, restrict_grid(med.grid, v, c) - u.local[e]);
  }
  return out;
}

std::vector<double> broken_energy_sq(const Medium& med, const MsFemSpace& space, const MsFemSolution& u) {
  std::vector<double> out(space.shapes.size());
  for (size_t e = 0; e < out.size(); ++e) out[e] = local_energy_sq(med, space.shapes[e]->cells, u.local[e]);
  return out;
}

std::vector<double> broken_apply(const Medium& med, const MsFemSpace& space, const GridLoad& l,
                                 const MsFemSolution& u) {
  std::vector<double> out(space.shapes.size());
  for (size_t e = 0; e < out.size(); ++e)
    out[e] = subgrid_load(med.grid, med.coef, l, space.shapes[e]->cells).dot(u.local[e]);
  return out;
}

std::vector<double> split_apply(const Medium& med, const MsFemSpace& space, const GridLoad& l,
                                const Vec& v) {
  std::vector<double> out(space.shapes.size());
  for (size_t e = 0; e < out.size(); ++e) {
    const IRect& c = space.shapes[e]->cells;
    out[e] = subgrid_load(med.grid, med.coef, l, c).dot(restrict_grid(med.grid, v, c));
  }
  return out;
}

double max_interface_jump(const Medium& med, const MsFemSpace& space, const MsFemSolution& u) {
  const TruthGrid& g = med.grid;
  Vec lo = Vec::Constant(g.num_nodes(), 1e300), hi = Vec::Constant(g.num_nodes(), -1e300);
  for (size_t e = 0; e < space.shapes.size(); ++e) {
    const SubgridIndex ix{space.shapes[e]->cells};
    for (int n = 0; n < ix.size(); ++n) {
      const int G = g.node(ix.gi(n), ix.gj(n));
      lo[G] = std::min(lo[G], u.local[e][n]);
      hi[G] = std::max(hi[G], u.local[e][n]);
    }
  }
  double j = 0.0;
  for (int n = 0; n < g.num_nodes(); ++n)
    if (hi[n] >= lo[n]) j = std::max(j, hi[n] - lo[n]);
  return j;
}

}  // namespace msgoal
