#include "msgoal/fem_core.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace msgoal {

const TriangleRule& rule_order2() {
  static const TriangleRule r{{{2.0 / 3, 1.0 / 6, 1.0 / 6},
                               {1.0 / 6, 2.0 / 3, 1.0 / 6},
                               {1.0 / 6, 1.0 / 6, 2.0 / 3}},
                              {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  return r;
}

const TriangleRule& rule_order5() {
  static const TriangleRule r = [] {
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    TriangleRule q;
    q.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
              {a2, b2, b2},                {b2, a2, b2}, {b2, b2, a2}};
    q.w = {0.225, w1, w1, w1, w2, w2, w2};
    return q;
  }();
  return r;
}

namespace {

Point bary_point(const std::array<Point, 3>& p, const std::array<double, 3>& l) {
  return {l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x,
          l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
}

// Gradients of the three P1 hats on a triangle of a structured mesh.
std::array<Vec2, 3> hat_gradients(int t, double hx, double hy) {
  if (t % 2 == 0) return {Vec2(-1 / hx, 0), Vec2(1 / hx, -1 / hy), Vec2(0, 1 / hy)};
  return {Vec2(0, -1 / hy), Vec2(1 / hx, 0), Vec2(-1 / hx, 1 / hy)};
}

constexpr double kGauss3x[3] = {-0.774596669241483377, 0.0, 0.774596669241483377};
constexpr double kGauss3w[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};

// Integrals of g against the two end hats of the segment [p, q].
std::array<double, 2> segment_moments(const ScalarFn& g, Point p, Point q) {
  const double len = std::hypot(q.x - p.x, q.y - p.y);
  std::array<double, 2> m{0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const double t = 0.5 * (1.0 + kGauss3x[k]);
    const double v = g(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)) * 0.5 * kGauss3w[k] * len;
    m[0] += (1.0 - t) * v;
    m[1] += t * v;
  }
  return m;
}

template <class Solver>
Vec factor_and_solve(const SpMat& A, const Vec& b, const char* name) {
  Solver s;
  s.compute(A);
  if (s.info() != Eigen::Success)
    throw SolverError(std::string(name) + ": factorization failed (matrix not SPD?)", -1.0);
  Vec x = s.solve(b);
  if (s.info() != Eigen::Success) throw SolverError(std::string(name) + ": solve failed", -1.0);
  return x;
}

Vec spd_solve(const SpMat& A, const Vec& b, const SolveOptions& opt) {
  if (A.rows() == 0) return Vec();
  switch (opt.kind) {
    case SolverKind::cg: {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                               Eigen::DiagonalPreconditioner<double>>
          cg;
      cg.setTolerance(opt.tol);
      cg.setMaxIterations(opt.max_iter);
      cg.compute(A);
      Vec x = cg.solve(b);
      const double bn = b.norm();
      const double res = bn > 0 ? (b - A * x).norm() / bn : (A * x).norm();
      if (cg.info() != Eigen::Success || !(res <= 10 * opt.tol))
        throw SolverError("cg: no convergence within " + std::to_string(opt.max_iter) +
                              " iterations, relative residual " + std::to_string(res),
                          res);
      return x;
    }
    case SolverKind::direct:
    default:
      return factor_and_solve<Eigen::SimplicialLDLT<SpMat>>(A, b, "ldlt");
  }
}

}  // namespace

double triangle_mean(const ScalarFn& a, const std::array<Point, 3>& p) {
  const TriangleRule& q = rule_order5();
  double s = 0.0;
  for (size_t k = 0; k < q.w.size(); ++k) {
    const Point x = bary_point(p, q.bary[k]);
    s += q.w[k] * a(x.x, x.y);
  }
  return s;
}

std::vector<double> triangle_means(const FineMesh& mesh, const CoefficientField& A) {
  std::vector<double> out(mesh.num_tris());
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto n = mesh.tri_nodes(t);
    out[t] = triangle_mean(A.fn(), {mesh.point(n[0]), mesh.point(n[1]), mesh.point(n[2])});
  }
  return out;
}

SparseSystem assemble(const FineMesh& mesh, const CoefficientField& A, const LoadSpec& load,
                      const BoundarySpec& bc) {
  if (mesh.nx < 1 || mesh.ny < 1 || !(mesh.hx > 0) || !(mesh.hy > 0))
    throw std::invalid_argument("assemble: invalid mesh");
  const int n = mesh.num_nodes();
  const double area = 0.5 * mesh.hx * mesh.hy;
  const TriangleRule& q = rule_order5();
  std::vector<Triplet> trip;
  trip.reserve(9 * mesh.num_tris());
  SparseSystem sys;
  sys.b = Vec::Zero(n);
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto nd = mesh.tri_nodes(t);
    const std::array<Point, 3> p{mesh.point(nd[0]), mesh.point(nd[1]), mesh.point(nd[2])};
    const auto gr = hat_gradients(t, mesh.hx, mesh.hy);
    const double abar = triangle_mean(A.fn(), p);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(nd[a], nd[b], abar * area * gr[a].dot(gr[b]));
    if (load.f) {
      for (size_t k = 0; k < q.w.size(); ++k) {
        const Point x = bary_point(p, q.bary[k]);
        const double fv = load.f(x.x, x.y) * q.w[k] * area;
        for (int a = 0; a < 3; ++a) sys.b[nd[a]] += fv * q.bary[k][a];
      }
    }
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());

  auto side_nodes = [&](int s) {
    std::vector<int> out;
    if (s == kLeft || s == kRight) {
      const int a = s == kLeft ? 0 : mesh.nx;
      for (int b = 0; b <= mesh.ny; ++b) out.push_back(mesh.node(a, b));
    } else {
      const int b = s == kBottom ? 0 : mesh.ny;
      for (int a = 0; a <= mesh.nx; ++a) out.push_back(mesh.node(a, b));
    }
    return out;
  };
  std::vector<char> fixed(n, 0);
  for (int s = 0; s < 4; ++s) {
    const auto nodes = side_nodes(s);
    if (bc.dirichlet[s]) {
      for (int v : nodes) fixed[v] = 1;
    } else if (load.g) {
      for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const auto m = segment_moments(load.g, mesh.point(nodes[k]), mesh.point(nodes[k + 1]));
        sys.b[nodes[k]] += m[0];
        sys.b[nodes[k + 1]] += m[1];
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!fixed[v]) continue;
    const Point x = mesh.point(v);
    sys.constraints.push_back({v, bc.value ? bc.value(x.x, x.y) : 0.0, {}});
  }
  return sys;
}

Vec solve(const SparseSystem& sys, const SolveOptions& opt) {
  const int n = static_cast<int>(sys.A.rows());
  if (sys.b.size() != n) throw std::invalid_argument("solve: size mismatch");
  std::unordered_map<int, const Constraint*> cons;
  for (const auto& c : sys.constraints) cons[c.node] = &c;

  if (cons.empty()) {
    // Pure Neumann: require the compatibility condition, then fix the gauge.
    const double tot = sys.b.sum(), scale = sys.b.cwiseAbs().sum();
    if (std::abs(tot) > 1e-10 * std::max(scale, 1e-300) && std::abs(tot) > 1e-14)
      throw std::runtime_error("solve: singular system, load violates the compatibility condition");
    SparseSystem pinned = sys;
    pinned.constraints.push_back({0, 0.0, {}});
    Vec u = solve(pinned, opt);
    u.array() -= u.mean();
    return u;
  }

  // Affine map u = T r + c over the free nodes, resolving constraint chains.
  std::vector<int> red(n, -1);
  int nr = 0;
  for (int v = 0; v < n; ++v)
    if (!cons.count(v)) red[v] = nr++;
  std::unordered_map<int, std::pair<std::vector<std::pair<int, double>>, double>> memo;
  std::function<std::pair<std::vector<std::pair<int, double>>, double>(int, int)> expand =
      [&](int v, int depth) -> std::pair<std::vector<std::pair<int, double>>, double> {
    if (depth > 64) throw std::runtime_error("solve: cyclic constraints");
    if (red[v] >= 0) return {{{red[v], 1.0}}, 0.0};
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    const Constraint& c = *cons.at(v);
    std::pair<std::vector<std::pair<int, double>>, double> e{{}, c.value};
    for (auto [m, w] : c.masters) {
      auto sub = expand(m, depth + 1);
      for (auto [r, x] : sub.first) e.first.emplace_back(r, w * x);
      e.second += w * sub.second;
    }
    memo[v] = e;
    return e;
  };
  std::vector<Triplet> tt;
  Vec c = Vec::Zero(n);
  for (int v = 0; v < n; ++v) {
    auto e = expand(v, 0);
    for (auto [r, x] : e.first) tt.emplace_back(v, r, x);
    c[v] = e.second;
  }
  SpMat T(n, nr);
  T.setFromTriplets(tt.begin(), tt.end());
  SpMat Ar = SpMat(T.transpose() * sys.A * T);
  Vec br = T.transpose() * (sys.b - sys.A * c);
  Vec ur = spd_solve(Ar, br, opt);
  return T * ur + c;
}

Vec2 p1_gradient(const FineMesh& mesh, int t, const Vec& v) {
  const auto nd = mesh.tri_nodes(t);
  const auto gr = hat_gradients(t, mesh.hx, mesh.hy);
  return v[nd[0]] * gr[0] + v[nd[1]] * gr[1] + v[nd[2]] * gr[2];
}

double energy_norm(const FineMesh& mesh, const std::vector<double>& abar, const Vec& v) {
  const double area = 0.5 * mesh.hx * mesh.hy;
  double s = 0.0;
  for (int t = 0; t < mesh.num_tris(); ++t) s += abar[t] * area * p1_gradient(mesh, t, v).squaredNorm();
  return std::sqrt(s);
}

double energy_norm(const FineMesh& mesh, const CoefficientField& A, const Vec& v) {
  return energy_norm(mesh, triangle_means(mesh, A), v);
}

FluxField flux_of(const FineMesh& mesh, const Vec& v) {
  FluxField p;
  p.g.resize(mesh.num_tris());
  for (int t = 0; t < mesh.num_tris(); ++t) p.g[t] = p1_gradient(mesh, t, v);
  return p;
}

double flux_energy_norm(const FineMesh& mesh, const std::vector<double>& abar, const FluxField& p) {
  const double area = 0.5 * mesh.hx * mesh.hy;
  double s = 0.0;
  for (int t = 0; t < mesh.num_tris(); ++t) s += abar[t] * area * p.g[t].squaredNorm();
  return std::sqrt(s);
}

double broken_energy_norm(const std::vector<double>& element_squares) {
  double s = 0.0;
  for (double e : element_squares) s += e;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

GridCoefficient grid_coefficient(const TruthGrid& g, const CoefficientField& A) {
  GridCoefficient c;
  c.abar.resize(g.num_tris());
  for (int t = 0; t < g.num_tris(); ++t) c.abar[t] = triangle_mean(A.fn(), g.tri_points(t));
  return c;
}

bool GridLoad::has_neumann() const {
  for (const auto& v : neumann)
    if (!v.empty()) return true;
  return false;
}

GridLoad grid_load(const TruthGrid& g, const Domain& d, const LoadSpec& load) {
  GridLoad l;
  const TriangleRule& q = rule_order5();
  const double area = g.tri_area();
  if (load.f) {
    l.body.assign(g.num_tris(), {0.0, 0.0, 0.0});
    for (int t = 0; t < g.num_tris(); ++t) {
      const auto p = g.tri_points(t);
      for (size_t k = 0; k < q.w.size(); ++k) {
        const Point x = bary_point(p, q.bary[k]);
        const double fv = load.f(x.x, x.y) * q.w[k] * area;
        for (int a = 0; a < 3; ++a) l.body[t][a] += fv * q.bary[k][a];
      }
    }
  }
  if (load.g) {
    for (int s = 0; s < 4; ++s) {
      if (d.dirichlet[s]) continue;
      auto& seg = l.neumann[s];
      seg.resize(g.N);
      for (int k = 0; k < g.N; ++k) {
        Point p, r;
        if (s == kLeft || s == kRight) {
          const double x = s == kLeft ? g.box.x0 : g.box.x1;
          p = {x, g.y(k)};
          r = {x, g.y(k + 1)};
        } else {
          const double y = s == kBottom ? g.box.y0 : g.box.y1;
          p = {g.x(k), y};
          r = {g.x(k + 1), y};
        }
        seg[k] = segment_moments(load.g, p, r);
      }
    }
  }
  return l;
}

GridLoad indicator_body(const TruthGrid& g, const IRect& omega, double c) {
  GridLoad l;
  l.body.assign(g.num_tris(), {0.0, 0.0, 0.0});
  const double v = c * g.tri_area() / 3.0;
  for (int j = omega.j0; j < omega.j1; ++j)
    for (int i = omega.i0; i < omega.i1; ++i)
      for (int t = 0; t < 2; ++t) l.body[g.tri(i, j, t)] = {v, v, v};
  return l;
}

GridLoad indicator_preflux(const TruthGrid& g, const IRect& omega, const Vec2& c) {
  GridLoad l;
  l.pre.assign(g.num_tris(), Vec2::Zero());
  for (int j = omega.j0; j < omega.j1; ++j)
    for (int i = omega.i0; i < omega.i1; ++i)
      for (int t = 0; t < 2; ++t) l.pre[g.tri(i, j, t)] = c;
  return l;
}

GridLoad add(const GridLoad& a, const GridLoad& b, double sb) {
  GridLoad r = a;
  if (b.has_body()) {
    if (!r.has_body()) r.body.assign(b.body.size(), {0.0, 0.0, 0.0});
    for (size_t t = 0; t < b.body.size(); ++t)
      for (int k = 0; k < 3; ++k) r.body[t][k] += sb * b.body[t][k];
  }
  if (b.has_pre()) {
    if (!r.has_pre()) r.pre.assign(b.pre.size(), Vec2::Zero());
    for (size_t t = 0; t < b.pre.size(); ++t) r.pre[t] += sb * b.pre[t];
  }
  for (int s = 0; s < 4; ++s) {
    if (b.neumann[s].empty()) continue;
    if (r.neumann[s].empty()) r.neumann[s].assign(b.neumann[s].size(), {0.0, 0.0});
    for (size_t k = 0; k < b.neumann[s].size(); ++k)
      for (int e = 0; e < 2; ++e) r.neumann[s][k][e] += sb * b.neumann[s][k][e];
  }
  return r;
}

Vec2 grid_gradient(const TruthGrid& g, int t, const Vec& v) {
  const auto nd = g.tri_nodes(t);
  const auto gr = hat_gradients(t, g.h, g.h);
  return v[nd[0]] * gr[0] + v[nd[1]] * gr[1] + v[nd[2]] * gr[2];
}

namespace {

// Local node numbers (on the sub-grid of r) of triangle t of cell (i, j).
std::array<int, 3> local_tri(const SubgridIndex& ix, int i, int j, int t) {
  if (t == 0) return {ix.local(i, j), ix.local(i + 1, j), ix.local(i + 1, j + 1)};
  return {ix.local(i, j), ix.local(i + 1, j + 1), ix.local(i, j + 1)};
}

}  // namespace

Vec subgrid_load(const TruthGrid& g, const GridCoefficient& c, const GridLoad& l, const IRect& r) {
  const SubgridIndex ix{r};
  Vec b = Vec::Zero(ix.size());
  const double area = g.tri_area();
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      for (int t = 0; t < 2; ++t) {
        const int T = g.tri(i, j, t);
        const auto nd = local_tri(ix, i, j, t);
        if (l.has_body())
          for (int a = 0; a < 3; ++a) b[nd[a]] += l.body[T][a];
        if (l.has_pre() && (l.pre[T][0] != 0.0 || l.pre[T][1] != 0.0)) {
          const auto gr = hat_gradients(t, g.h, g.h);
          for (int a = 0; a < 3; ++a) b[nd[a]] += c.abar[T] * area * l.pre[T].dot(gr[a]);
        }
      }
    }
  }
  for (int s = 0; s < 4; ++s) {
    if (l.neumann[s].empty()) continue;
    const bool vertical = (s == kLeft || s == kRight);
    const int line = s == kLeft ? 0 : s == kRight ? g.N : s == kBottom ? 0 : g.N;
    if (vertical && (line < r.i0 || line > r.i1)) continue;
    if (!vertical && (line < r.j0 || line > r.j1)) continue;
    const int lo = vertical ? r.j0 : r.i0, hi = vertical ? r.j1 : r.i1;
    for (int k = lo; k < hi; ++k) {
      const int n0 = vertical ? ix.local(line, k) : ix.local(k, line);
      const int n1 = vertical ? ix.local(line, k + 1) : ix.local(k + 1, line);
      b[n0] += l.neumann[s][k][0];
      b[n1] += l.neumann[s][k][1];
    }
  }
  return b;
}

double apply(const TruthGrid& g, const GridCoefficient& c, const GridLoad& l, const Vec& v) {
  return subgrid_load(g, c, l, g.all()).dot(v);
}

SpMat subgrid_stiffness(const TruthGrid& g, const GridCoefficient& c, const IRect& r) {
  const SubgridIndex ix{r};
  static const double k0[3][3] = {{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}};
  static const double k1[3][3] = {{1, 0, -1}, {0, 1, -1}, {-1, -1, 2}};
  std::vector<Triplet> trip;
  trip.reserve(18 * r.nx() * r.ny());
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      for (int t = 0; t < 2; ++t) {
        const auto nd = local_tri(ix, i, j, t);
        const double w = 0.5 * c.abar[g.tri(i, j, t)];
        const auto& k = t == 0 ? k0 : k1;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            if (k[a][b] != 0) trip.emplace_back(nd[a], nd[b], w * k[a][b]);
      }
    }
  }
  SpMat K(ix.size(), ix.size());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SpMat subgrid_prolongation(const IRect& r, int s) {
  if (s < 1 || r.nx() % s != 0 || r.ny() % s != 0)
    throw std::invalid_argument("prolongation: coarsening does not divide the rectangle");
  const int nx = r.nx(), ny = r.ny(), cx = nx / s, cy = ny / s;
  auto cnode = [cx](int a, int b) { return b * (cx + 1) + a; };
  std::vector<Triplet> trip;
  trip.reserve(3 * (nx + 1) * (ny + 1));
  for (int b = 0; b <= ny; ++b) {
    for (int a = 0; a <= nx; ++a) {
      const int row = b * (nx + 1) + a;
      const int A = std::min(a / s, cx - 1), B = std::min(b / s, cy - 1);
      const double xi = double(a - A * s) / s, eta = double(b - B * s) / s;
      std::array<std::pair<int, double>, 3> w;
      if (xi >= eta)
        w = {{{cnode(A, B), 1 - xi}, {cnode(A + 1, B), xi - eta}, {cnode(A + 1, B + 1), eta}}};
      else
        w = {{{cnode(A, B), 1 - eta}, {cnode(A + 1, B + 1), xi}, {cnode(A, B + 1), eta - xi}}};
      for (auto [col, v] : w)
        if (v != 0.0) trip.emplace_back(row, col, v);
    }
  }
  SpMat P((nx + 1) * (ny + 1), (cx + 1) * (cy + 1));
  P.setFromTriplets(trip.begin(), trip.end());
  return P;
}

ReducedSolver::ReducedSolver(const SpMat& K, const std::vector<char>& fixed)
    : n_(static_cast<int>(K.rows())), red_(n_, -1) {
  int nr = 0;
  for (int v = 0; v < n_; ++v)
    if (!fixed[v]) red_[v] = nr++;
  std::vector<Triplet> kk, kc;
  kk.reserve(K.nonZeros());
  for (int col = 0; col < K.outerSize(); ++col) {
    for (SpMat::InnerIterator it(K, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (red_[row] < 0) continue;
      if (red_[col] >= 0)
        kk.emplace_back(red_[row], red_[col], it.value());
      else
        kc.emplace_back(red_[row], col, it.value());
    }
  }
  SpMat Kr(nr, nr);
  Kr.setFromTriplets(kk.begin(), kk.end());
  coupling_.resize(nr, n_);
  coupling_.setFromTriplets(kc.begin(), kc.end());
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  if (nr > 0) {
    ldlt_->compute(Kr);
    if (ldlt_->info() != Eigen::Success)
      throw SolverError("ldlt: factorization failed (matrix not SPD?)", -1.0);
  }
}

Vec ReducedSolver::solve(const Vec& b, const Vec& fixed_values) const {
  const int nr = static_cast<int>(coupling_.rows());
  Vec u = Vec::Zero(n_);
  const bool has_values = fixed_values.size() == n_;
  if (has_values)
    for (int v = 0; v < n_; ++v)
      if (red_[v] < 0) u[v] = fixed_values[v];
  if (nr == 0) return u;
  Vec br(nr);
  for (int v = 0; v < n_; ++v)
    if (red_[v] >= 0) br[red_[v]] = b[v];
  if (has_values) br -= coupling_ * u;
  const Vec ur = ldlt_->solve(br);
  for (int v = 0; v < n_; ++v)
    if (red_[v] >= 0) u[v] = ur[red_[v]];
  return u;
}

Vec solve_constrained(const SpMat& K, const Vec& b, const std::vector<char>& fixed,
                      const Vec& fixed_values, SolverKind kind) {
  if (kind == SolverKind::direct) return ReducedSolver(K, fixed).solve(b, fixed_values);
  const int n = static_cast<int>(K.rows());
  SparseSystem sys{K, b, {}};
  for (int v = 0; v < n; ++v)
    if (fixed[v]) sys.constraints.push_back({v, fixed_values.size() == n ? fixed_values[v] : 0.0, {}});
  SolveOptions opt;
  opt.kind = kind;
  return solve(sys, opt);
}

double grid_energy_sq(const TruthGrid& g, const GridCoefficient& c, const Vec& v, const IRect& r) {
  double s = 0.0;
  for (int j = r.j0; j < r.j1; ++j)
    for (int i = r.i0; i < r.i1; ++i)
      for (int t = 0; t < 2; ++t) {
        const int T = g.tri(i, j, t);
        s += c.abar[T] * g.tri_area() * grid_gradient(g, T, v).squaredNorm();
      }
  return s;
}

double grid_energy_sq(const TruthGrid& g, const GridCoefficient& c, const Vec& v) {
  return grid_energy_sq(g, c, v, g.all());
}

Vec grid_solve(const TruthGrid& g, const GridCoefficient& c, const Domain& dom, const GridLoad& l,
               const IRect& r0, SolverKind kind) {
  const IRect r = r0.empty() ? g.all() : r0;
  const SubgridIndex ix{r};
  const SpMat K = subgrid_stiffness(g, c, r);
  const Vec b = subgrid_load(g, c, l, r);
  std::vector<char> fixed(ix.size(), 0);
  auto dirichlet_line = [&](Side s, int line, int outer) {
    // A side of r is Dirichlet unless it lies on a Neumann side of the domain.
    return line != outer || dom.dirichlet[s];
  };
  const bool fl = dirichlet_line(kLeft, r.i0, 0), fr = dirichlet_line(kRight, r.i1, g.N);
  const bool fb = dirichlet_line(kBottom, r.j0, 0), ft = dirichlet_line(kTop, r.j1, g.N);
  for (int n = 0; n < ix.size(); ++n) {
    const int i = ix.gi(n), j = ix.gj(n);
    if ((i == r.i0 && fl) || (i == r.i1 && fr) || (j == r.j0 && fb) || (j == r.j1 && ft))
      fixed[n] = 1;
  }
  return solve_constrained(K, b, fixed, Vec(), kind);
}

}  // namespace msgoal
