#include "msgoal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace msgoal {

void Domain::validate() const {
  if (box.empty()) throw std::invalid_argument("domain: empty rectangle");
  if (!(dirichlet[0] || dirichlet[1] || dirichlet[2] || dirichlet[3]))
    throw std::invalid_argument("domain: Dirichlet boundary must have positive measure");
}

IRect IRect::intersect(const IRect& r) const {
  return {std::max(i0, r.i0), std::max(j0, r.j0), std::min(i1, r.i1), std::min(j1, r.j1)};
}

TruthGrid::TruthGrid(const Rect& b, int n) : box(b), N(n), h(b.width() / n) {
  if (n < 1) throw std::invalid_argument("truth grid: need at least one cell");
}

std::array<int, 3> TruthGrid::tri_nodes(int t) const {
  const int c = t / 2, i = c % N, j = c / N;
  if (t % 2 == 0) return {node(i, j), node(i + 1, j), node(i + 1, j + 1)};
  return {node(i, j), node(i + 1, j + 1), node(i, j + 1)};
}

std::array<Point, 3> TruthGrid::tri_points(int t) const {
  const int c = t / 2, i = c % N, j = c / N;
  if (t % 2 == 0) return {Point{x(i), y(j)}, Point{x(i + 1), y(j)}, Point{x(i + 1), y(j + 1)}};
  return {Point{x(i), y(j)}, Point{x(i + 1), y(j + 1)}, Point{x(i), y(j + 1)}};
}

IRect TruthGrid::cover(const Rect& r) const {
  const double tol = 1e-9;
  IRect c{static_cast<int>(std::floor((r.x0 - box.x0) / h + tol)),
          static_cast<int>(std::floor((r.y0 - box.y0) / h + tol)),
          static_cast<int>(std::ceil((r.x1 - box.x0) / h - tol)),
          static_cast<int>(std::ceil((r.y1 - box.y0) / h - tol))};
  return c.intersect(all());
}

IRect TruthGrid::snap(const Rect& r) const {
  IRect c{static_cast<int>(std::lround((r.x0 - box.x0) / h)),
          static_cast<int>(std::lround((r.y0 - box.y0) / h)),
          static_cast<int>(std::lround((r.x1 - box.x0) / h)),
          static_cast<int>(std::lround((r.y1 - box.y0) / h))};
  return c.intersect(all());
}

std::array<int, 3> FineMesh::tri_nodes(int t) const {
  const int c = t / 2, a = c % nx, b = c / nx;
  if (t % 2 == 0) return {node(a, b), node(a + 1, b), node(a + 1, b + 1)};
  return {node(a, b), node(a + 1, b + 1), node(a, b + 1)};
}

FineMesh build_fine_submesh(const Rect& rect, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fine mesh: h must be positive");
  FineMesh m;
  m.rect = rect;
  m.nx = std::max(1, static_cast<int>(std::lround(rect.width() / h)));
  m.ny = std::max(1, static_cast<int>(std::lround(rect.height() / h)));
  m.hx = rect.width() / m.nx;
  m.hy = rect.height() / m.ny;
  return m;
}

FineMesh aligned_submesh(const TruthGrid& g, const IRect& r, int s) {
  if (s < 1 || r.nx() % s != 0 || r.ny() % s != 0)
    throw std::invalid_argument("aligned submesh: coarsening does not divide the rectangle");
  FineMesh m;
  m.rect = g.rect(r);
  m.nx = r.nx() / s;
  m.ny = r.ny() / s;
  m.hx = s * g.h;
  m.hy = s * g.h;
  m.gi0 = r.i0;
  m.gj0 = r.j0;
  m.s = s;
  return m;
}

std::int64_t leaf_key(int level, int ix, int iy) {
  return (static_cast<std::int64_t>(level) << 56) | (static_cast<std::int64_t>(ix) << 28) |
         static_cast<std::int64_t>(iy);
}

int CoarseMesh::max_level() const {
  int l = 0;
  while ((m0 % (2 << l)) == 0) ++l;
  return l;
}

IRect CoarseMesh::cells(int level, int ix, int iy) const {
  const int m = cells_per_side(level);
  return {ix * m, iy * m, (ix + 1) * m, (iy + 1) * m};
}

IRect CoarseMesh::cells(const Leaf& l) const { return cells(l.level, l.ix, l.iy); }

IRect CoarseMesh::patch_cells(const Leaf& l) const {
  return cells(l).grow(l.p.width).intersect(grid.all());
}

void CoarseMesh::rebuild_index() {
  std::sort(leaves.begin(), leaves.end(), [this](const Leaf& a, const Leaf& b) {
    const IRect ra = cells(a), rb = cells(b);
    return ra.j0 != rb.j0 ? ra.j0 < rb.j0 : ra.i0 < rb.i0;
  });
  index_.clear();
  for (int k = 0; k < size(); ++k) {
    const Leaf& l = leaves[k];
    index_[leaf_key(l.level, l.ix, l.iy)] = k;
  }
}

int CoarseMesh::find(int level, int ix, int iy) const {
  auto it = index_.find(leaf_key(level, ix, iy));
  return it == index_.end() ? -1 : it->second;
}

int CoarseMesh::covering(int level, int ix, int iy) const {
  const int n = n_root << level;
  if (ix < 0 || iy < 0 || ix >= n || iy >= n) return -1;
  for (int l = level; l >= 0; --l) {
    const int k = find(l, ix >> (level - l), iy >> (level - l));
    if (k >= 0) return k;
  }
  return -1;
}

namespace {

// Collect the leaves inside cell (level, ix, iy) touching the given side of it.
void collect_touching(const CoarseMesh& m, int level, int ix, int iy, Side side,
                      std::vector<int>& out) {
  const int k = m.covering(level, ix, iy);
  if (k >= 0) {
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    return;
  }
  if ((m.m0 >> (level + 1)) < 1) return;
  const int cx = 2 * ix, cy = 2 * iy;
  switch (side) {
    case kLeft:
      collect_touching(m, level + 1, cx, cy, side, out);
      collect_touching(m, level + 1, cx, cy + 1, side, out);
      break;
    case kRight:
      collect_touching(m, level + 1, cx + 1, cy, side, out);
      collect_touching(m, level + 1, cx + 1, cy + 1, side, out);
      break;
    case kBottom:
      collect_touching(m, level + 1, cx, cy, side, out);
      collect_touching(m, level + 1, cx + 1, cy, side, out);
      break;
    case kTop:
      collect_touching(m, level + 1, cx, cy + 1, side, out);
      collect_touching(m, level + 1, cx + 1, cy + 1, side, out);
      break;
  }
}

Side opposite(Side s) {
  switch (s) {
    case kLeft: return kRight;
    case kRight: return kLeft;
    case kBottom: return kTop;
    default: return kBottom;
  }
}

}  // namespace

std::vector<int> CoarseMesh::neighbors(int k, Side s) const {
  const Leaf& l = leaves[k];
  int nx = l.ix, ny = l.iy;
  if (s == kLeft) --nx;
  if (s == kRight) ++nx;
  if (s == kBottom) --ny;
  if (s == kTop) ++ny;
  const int n = n_root << l.level;
  if (nx < 0 || ny < 0 || nx >= n || ny >= n) return {};
  std::vector<int> out;
  collect_touching(*this, l.level, nx, ny, opposite(s), out);
  return out;
}

std::vector<HangingNode> CoarseMesh::hanging_nodes() const {
  std::map<std::pair<int, int>, HangingNode> found;
  for (int k = 0; k < size(); ++k) {
    const IRect c = cells(leaves[k]);
    for (int si = 0; si < 4; ++si) {
      const Side s = static_cast<Side>(si);
      for (int nb : neighbors(k, s)) {
        const IRect cn = cells(leaves[nb]);
        if (cn.nx() >= c.nx()) continue;
        // Corners of the smaller neighbour strictly inside this side.
        const bool vertical = (s == kLeft || s == kRight);
        const int line = (s == kLeft) ? c.i0 : (s == kRight) ? c.i1 : (s == kBottom) ? c.j0 : c.j1;
        const int lo = vertical ? c.j0 : c.i0, hi = vertical ? c.j1 : c.i1;
        for (int t : {vertical ? cn.j0 : cn.i0, vertical ? cn.j1 : cn.i1}) {
          if (t <= lo || t >= hi) continue;
          HangingNode hn;
          hn.gi = vertical ? line : t;
          hn.gj = vertical ? t : line;
          hn.x = {grid.x(hn.gi), grid.y(hn.gj)};
          hn.big_leaf = k;
          if (vertical) {
            hn.masters = {Point{grid.x(line), grid.y(lo)}, Point{grid.x(line), grid.y(hi)}};
          } else {
            hn.masters = {Point{grid.x(lo), grid.y(line)}, Point{grid.x(hi), grid.y(line)}};
          }
          found[{hn.gi, hn.gj}] = hn;
        }
      }
    }
  }
  std::vector<HangingNode> out;
  out.reserve(found.size());
  for (auto& kv : found) out.push_back(kv.second);
  return out;
}

double CoarseMesh::total_area() const {
  double a = 0.0;
  for (const Leaf& l : leaves) a += rect(l).area();
  return a;
}

bool CoarseMesh::balanced() const {
  for (int k = 0; k < size(); ++k)
    for (int s = 0; s < 4; ++s)
      for (int nb : neighbors(k, static_cast<Side>(s)))
        if (std::abs(leaves[nb].level - leaves[k].level) > 1) return false;
  return true;
}

CoarseMesh build_uniform_coarse_mesh(const Domain& domain, int n_per_side, int cells_per_element,
                                     int initial_s) {
  domain.validate();
  if (n_per_side < 1) throw std::invalid_argument("coarse mesh: n_per_side must be >= 1");
  if (cells_per_element < 1) throw std::invalid_argument("coarse mesh: cells_per_element must be >= 1");
  const Rect& b = domain.box;
  if (std::abs(b.width() - b.height()) > 1e-12 * b.width())
    throw std::invalid_argument("coarse mesh: square elements need a square domain");
  if (initial_s < 1 || cells_per_element % initial_s != 0)
    throw std::invalid_argument("coarse mesh: fine cell must divide the element");
  CoarseMesh m;
  m.domain = domain;
  m.n_root = n_per_side;
  m.m0 = cells_per_element;
  m.grid = TruthGrid(b, n_per_side * cells_per_element);
  for (int iy = 0; iy < n_per_side; ++iy) {
    for (int ix = 0; ix < n_per_side; ++ix) {
      Leaf l;
      l.level = 0;
      l.ix = ix;
      l.iy = iy;
      l.p.s = initial_s;
      l.p.host_level = 0;
      l.p.host_ix = ix;
      l.p.host_iy = iy;
      l.p.host_s = initial_s;
      m.leaves.push_back(l);
    }
  }
  m.rebuild_index();
  return m;
}

int nearest_divisor(int m, int target) {
  int best = 1;
  for (int d = 1; d <= m; ++d) {
    if (m % d != 0) continue;
    if (std::abs(d - target) < std::abs(best - target)) best = d;
  }
  return best;
}

CoarseMesh refine_elements(const CoarseMesh& mesh, const std::vector<int>& marked) {
  CoarseMesh out = mesh;
  const int lmax = mesh.max_level();
  std::map<std::int64_t, Leaf> live;
  for (const Leaf& l : mesh.leaves) live[leaf_key(l.level, l.ix, l.iy)] = l;

  auto split = [&](const Leaf& l) {
    live.erase(leaf_key(l.level, l.ix, l.iy));
    const int cm = mesh.cells_per_side(l.level + 1);
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        Leaf c = l;
        c.level = l.level + 1;
        c.ix = 2 * l.ix + dx;
        c.iy = 2 * l.iy + dy;
        if (cm % c.p.host_s != 0 || cm % c.p.s != 0) {
          // Host fine mesh no longer aligned with the child: solve afresh.
          c.p.s = nearest_divisor(cm, c.p.s);
          c.p.width = c.p.s * ((c.p.width + c.p.s - 1) / c.p.s);
          c.p.host_level = c.level;
          c.p.host_ix = c.ix;
          c.p.host_iy = c.iy;
          c.p.host_s = c.p.s;
          c.p.host_width = c.p.width;
        }
        live[leaf_key(c.level, c.ix, c.iy)] = c;
      }
    }
  };

  for (int k : marked) {
    if (k < 0 || k >= mesh.size()) throw std::out_of_range("refine: leaf id out of range");
    const Leaf& l = mesh.leaves[k];
    if (l.level >= lmax) continue;
    if (live.count(leaf_key(l.level, l.ix, l.iy))) split(l);
  }

  // Restore 2:1 balance by cascading splits.
  bool changed = true;
  while (changed) {
    changed = false;
    out.leaves.clear();
    for (auto& kv : live) out.leaves.push_back(kv.second);
    out.rebuild_index();
    std::vector<Leaf> to_split;
    for (int k = 0; k < out.size(); ++k) {
      for (int s = 0; s < 4; ++s) {
        bool bad = false;
        for (int nb : out.neighbors(k, static_cast<Side>(s)))
          if (out.leaves[nb].level > out.leaves[k].level + 1) bad = true;
        if (bad) {
          to_split.push_back(out.leaves[k]);
          break;
        }
      }
    }
    for (const Leaf& l : to_split) {
      if (live.count(leaf_key(l.level, l.ix, l.iy))) {
        split(l);
        changed = true;
      }
    }
  }
  out.leaves.clear();
  for (auto& kv : live) out.leaves.push_back(kv.second);
  out.rebuild_index();
  return out;
}

int oversampling_width_cells(const CoarseMesh& mesh, const Leaf& leaf, int layers, double eps) {
  if (layers < 0) throw std::invalid_argument("oversampling: negative layer count");
  if (layers == 0) return 0;
  const double w = eps * layers * (layers + 1) / 2.0 / mesh.grid.h;
  const int s = leaf.p.s;
  return std::max(s, s * static_cast<int>(std::lround(w / s)));
}

Patch oversampling_patch(const CoarseMesh& mesh, int k, int layers, double eps) {
  const Leaf& l = mesh.leaves.at(k);
  const int w = oversampling_width_cells(mesh, l, layers, eps);
  Patch p;
  p.host = k;
  p.layers = layers;
  p.width = w * mesh.grid.h;
  p.cells = mesh.cells(l).grow(w).intersect(mesh.grid.all());
  p.rect = mesh.grid.rect(p.cells);
  return p;
}

}  // namespace msgoal
