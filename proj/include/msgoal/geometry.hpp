#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace msgoal {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool empty() const { return !(x1 > x0 && y1 > y0); }
  bool contains(Point p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
  bool contains(const Rect& r, double tol = 1e-12) const {
    return r.x0 >= x0 - tol && r.x1 <= x1 + tol && r.y0 >= y0 - tol && r.y1 <= y1 + tol;
  }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

enum Side : int { kLeft = 0, kRight = 1, kBottom = 2, kTop = 3 };

// Rectangle with one boundary condition type per side.
struct Domain {
  Rect box;
  std::array<bool, 4> dirichlet{true, true, true, true};

  bool is_dirichlet(Side s) const { return dirichlet[s]; }
  // Throws std::invalid_argument on an empty box or an empty Dirichlet part.
  void validate() const;
};

// Rectangle of truth-grid cells [i0, i1) x [j0, j1).
struct IRect {
  int i0 = 0, j0 = 0, i1 = 0, j1 = 0;

  int nx() const { return i1 - i0; }
  int ny() const { return j1 - j0; }
  bool empty() const { return i1 <= i0 || j1 <= j0; }
  bool contains(const IRect& r) const {
    return r.i0 >= i0 && r.i1 <= i1 && r.j0 >= j0 && r.j1 <= j1;
  }
  IRect intersect(const IRect& r) const;
  IRect grow(int w) const { return {i0 - w, j0 - w, i1 + w, j1 + w}; }
  bool operator==(const IRect& o) const {
    return i0 == o.i0 && j0 == o.j0 && i1 == o.i1 && j1 == o.j1;
  }
  bool operator!=(const IRect& o) const { return !(*this == o); }
};

// Uniform triangulation of the domain that all fine computations nest into.
// Cell (i, j) is split along its "/" diagonal: triangle 0 is the lower-right
// half (i,j),(i+1,j),(i+1,j+1); triangle 1 the upper-left half
// (i,j),(i+1,j+1),(i,j+1).
struct TruthGrid {
  Rect box;
  int N = 1;
  double h = 1.0;

  TruthGrid() = default;
  TruthGrid(const Rect& b, int n);

  int num_nodes() const { return (N + 1) * (N + 1); }
  int num_tris() const { return 2 * N * N; }
  int node(int i, int j) const { return j * (N + 1) + i; }
  int tri(int i, int j, int t) const { return 2 * (j * N + i) + t; }
  double x(int i) const { return box.x0 + i * h; }
  double y(int j) const { return box.y0 + j * h; }
  std::array<int, 3> tri_nodes(int t) const;
  std::array<Point, 3> tri_points(int t) const;
  double tri_area() const { return 0.5 * h * h; }
  IRect all() const { return {0, 0, N, N}; }
  Rect rect(const IRect& r) const { return {x(r.i0), y(r.j0), x(r.i1), y(r.j1)}; }
  // Smallest cell rectangle covering r (snapped outwards).
  IRect cover(const Rect& r) const;
  // Cell rectangle with nearest-node snapping of every side.
  IRect snap(const Rect& r) const;
};

// Structured P1 triangulation of a rectangle, same diagonal convention as
// the truth grid. Optionally aligned with the truth grid at coarsening s.
struct FineMesh {
  Rect rect;
  int nx = 1, ny = 1;
  double hx = 1.0, hy = 1.0;
  // Truth-grid alignment, s = 0 when the mesh is not aligned.
  int gi0 = 0, gj0 = 0, s = 0;

  int num_nodes() const { return (nx + 1) * (ny + 1); }
  int num_tris() const { return 2 * nx * ny; }
  int node(int a, int b) const { return b * (nx + 1) + a; }
  Point point(int a, int b) const { return {rect.x0 + a * hx, rect.y0 + b * hy}; }
  Point point(int n) const { return point(n % (nx + 1), n / (nx + 1)); }
  bool on_boundary(int n) const {
    const int a = n % (nx + 1), b = n / (nx + 1);
    return a == 0 || b == 0 || a == nx || b == ny;
  }
  std::array<int, 3> tri_nodes(int t) const;
};

// n = max(1, round(side / h)) subdivisions per side, h stored back exactly.
FineMesh build_fine_submesh(const Rect& rect, double h);
// Truth-grid aligned mesh over the cells of r with s grid cells per fine cell.
FineMesh aligned_submesh(const TruthGrid& g, const IRect& r, int s);

// Discretization state of one coarse element.
struct LeafParams {
  int rung = 0;    // position on the fine-mesh ladder
  int s = 1;       // truth-grid cells per fine cell, h_K = s * h_G
  int layers = 0;  // number of oversampling rings
  int width = 0;   // cumulative ring width in truth-grid cells
  // Element whose local solves generated the basis (the leaf or an ancestor).
  int host_level = 0, host_ix = 0, host_iy = 0;
  int host_s = 1, host_width = 0;
};

struct Leaf {
  int level = 0;
  int ix = 0, iy = 0;  // position among the 2^level-refined root cells
  LeafParams p;
};

struct HangingNode {
  Point x;
  int gi = 0, gj = 0;    // truth-grid node
  int big_leaf = -1;     // element whose edge carries the node
  std::array<Point, 2> masters;
};

class CoarseMesh {
 public:
  Domain domain;
  TruthGrid grid;
  int n_root = 1;  // root elements per side
  int m0 = 1;      // truth-grid cells per root element side
  std::vector<Leaf> leaves;

  int size() const { return static_cast<int>(leaves.size()); }
  int cells_per_side(int level) const { return m0 >> level; }
  int max_level() const;
  IRect cells(const Leaf& l) const;
  IRect cells(int level, int ix, int iy) const;
  Rect rect(const Leaf& l) const { return grid.rect(cells(l)); }
  double H(const Leaf& l) const { return rect(l).width(); }
  double h(const Leaf& l) const { return l.p.s * grid.h; }
  // Patch side length H_K + 2 w (before clipping).
  double d(const Leaf& l) const { return H(l) + 2.0 * l.p.width * grid.h; }
  IRect patch_cells(const Leaf& l) const;

  // Leaf index at exactly (level, ix, iy) or -1.
  int find(int level, int ix, int iy) const;
  // Leaf covering the cell (level, ix, iy), possibly coarser, or -1 if the
  // cell is subdivided further or lies outside the domain.
  int covering(int level, int ix, int iy) const;
  // Leaves across side s of leaf k (empty on the domain boundary).
  std::vector<int> neighbors(int k, Side s) const;
  // Element corners lying strictly inside a side of a larger neighbour.
  std::vector<HangingNode> hanging_nodes() const;
  double total_area() const;
  bool balanced() const;
  void rebuild_index();

 private:
  std::unordered_map<std::int64_t, int> index_;
};

std::int64_t leaf_key(int level, int ix, int iy);

// Rejects non-square domains and cell counts that do not divide evenly.
CoarseMesh build_uniform_coarse_mesh(const Domain& domain, int n_per_side,
                                     int cells_per_element, int initial_s = 1);

// Divisor of m closest to target, the smaller one on ties.
int nearest_divisor(int m, int target);

// Splits marked leaves into four children and restores 2:1 balance. Children
// inherit the parent's parameters (including its host).
CoarseMesh refine_elements(const CoarseMesh& mesh, const std::vector<int>& marked);

struct Patch {
  int host = -1;
  Rect rect;
  IRect cells;
  int layers = 0;
  double width = 0.0;  // enlargement per side before clipping
};

// Cumulative ring width eps * L (L + 1) / 2 snapped to a multiple of the
// element's fine cell, then clipped to the domain.
int oversampling_width_cells(const CoarseMesh& mesh, const Leaf& leaf, int layers, double eps);
Patch oversampling_patch(const CoarseMesh& mesh, int k, int layers, double eps);

}  // namespace msgoal
