#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "msgoal/coefficient.hpp"
#include "msgoal/geometry.hpp"

namespace msgoal {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Symmetric rule on triangles: barycentric points and weights summing to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;
};
const TriangleRule& rule_order2();  // 3 points
const TriangleRule& rule_order5();  // 7 points

// Mean of a over a triangle with the 7-point rule.
double triangle_mean(const ScalarFn& a, const std::array<Point, 3>& p);

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

// ---------------------------------------------------------------------------
// Generic structured meshes

// Per-triangle mean coefficient; flux fields are stored as A^{-1} p.
struct FluxField {
  std::vector<Vec2> g;  // flux on triangle t is A * g[t]
};

struct Constraint {
  int node = -1;
  double value = 0.0;                          // affine part
  std::vector<std::pair<int, double>> masters;  // empty for Dirichlet nodes
};

struct SparseSystem {
  SpMat A;
  Vec b;
  std::vector<Constraint> constraints;
};

struct BoundarySpec {
  std::array<bool, 4> dirichlet{true, true, true, true};
  ScalarFn value;  // Dirichlet data, zero when empty
};

std::vector<double> triangle_means(const FineMesh& mesh, const CoefficientField& A);

// P1 stiffness and load with 7-point quadrature; Dirichlet data as constraints.
SparseSystem assemble(const FineMesh& mesh, const CoefficientField& A, const LoadSpec& load,
                      const BoundarySpec& bc);

// direct: sparse LDL^T with AMD ordering; cg: diagonally preconditioned CG.
enum class SolverKind { direct, cg };

struct SolveOptions {
  SolverKind kind = SolverKind::direct;
  double tol = 1e-10;
  int max_iter = 20000;
};

// Eliminates constraints, solves, and expands back to all nodes. A system
// without constraints must satisfy the compatibility condition; it is then
// solved with a zero-mean gauge.
Vec solve(const SparseSystem& sys, const SolveOptions& opt = {});

Vec2 p1_gradient(const FineMesh& mesh, int t, const Vec& v);
double energy_norm(const FineMesh& mesh, const std::vector<double>& abar, const Vec& v);
double energy_norm(const FineMesh& mesh, const CoefficientField& A, const Vec& v);
FluxField flux_of(const FineMesh& mesh, const Vec& v);
double flux_energy_norm(const FineMesh& mesh, const std::vector<double>& abar, const FluxField& p);
double broken_energy_norm(const std::vector<double>& element_squares);

// ---------------------------------------------------------------------------
// Truth grid kernels

struct GridCoefficient {
  std::vector<double> abar;  // mean of a over each truth triangle
};
GridCoefficient grid_coefficient(const TruthGrid& g, const CoefficientField& A);

// Linear functional on the truth-grid P1 space:
//   v -> sum_T body_T . v_T + int_T abar g_T . grad v + Neumann terms.
// Used for both primal loads and quantity-of-interest extractors.
struct GridLoad {
  std::vector<std::array<double, 3>> body;  // per triangle, empty when absent
  std::vector<Vec2> pre;                    // per triangle, pre-flux abar * pre
  std::array<std::vector<std::array<double, 2>>, 4> neumann;  // per side segment

  bool has_body() const { return !body.empty(); }
  bool has_pre() const { return !pre.empty(); }
  bool has_neumann() const;
};

GridLoad grid_load(const TruthGrid& g, const Domain& d, const LoadSpec& load);
// Body term c * 1_omega for a grid-aligned cell rectangle.
GridLoad indicator_body(const TruthGrid& g, const IRect& omega, double c);
// Pre-flux c * e_dir * 1_omega (flux form: abar * c * e_dir).
GridLoad indicator_preflux(const TruthGrid& g, const IRect& omega, const Vec2& c);
GridLoad add(const GridLoad& a, const GridLoad& b, double sb = 1.0);

Vec2 grid_gradient(const TruthGrid& g, int t, const Vec& v);
// Nodal vector of the functional restricted to the triangles of r, indexed
// on the sub-grid of r.
Vec subgrid_load(const TruthGrid& g, const GridCoefficient& c, const GridLoad& l, const IRect& r);
double apply(const TruthGrid& g, const GridCoefficient& c, const GridLoad& l, const Vec& v);
SpMat subgrid_stiffness(const TruthGrid& g, const GridCoefficient& c, const IRect& r);
// Interpolation from the aligned coarse mesh (s cells per fine cell) of r to
// the sub-grid of r.
SpMat subgrid_prolongation(const IRect& r, int s);

struct SubgridIndex {
  IRect r;
  int nx() const { return r.nx() + 1; }
  int size() const { return (r.nx() + 1) * (r.ny() + 1); }
  int local(int gi, int gj) const { return (gj - r.j0) * (r.nx() + 1) + (gi - r.i0); }
  int gi(int n) const { return r.i0 + n % (r.nx() + 1); }
  int gj(int n) const { return r.j0 + n / (r.nx() + 1); }
};

// LDL^T factorization of K restricted to the free nodes, reusable for many
// right-hand sides and prescribed values.
class ReducedSolver {
 public:
  ReducedSolver() = default;
  ReducedSolver(const SpMat& K, const std::vector<char>& fixed);
  Vec solve(const Vec& b, const Vec& fixed_values = Vec()) const;
  int size() const { return n_; }

 private:
  int n_ = 0;
  std::vector<int> red_;
  SpMat coupling_;  // free rows x all columns, fixed columns only
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

// Solves K u = b with u prescribed on the flagged nodes (values read from
// `fixed_values`, zero when empty).
Vec solve_constrained(const SpMat& K, const Vec& b, const std::vector<char>& fixed,
                      const Vec& fixed_values, SolverKind kind);

double grid_energy_sq(const TruthGrid& g, const GridCoefficient& c, const Vec& v);
double grid_energy_sq(const TruthGrid& g, const GridCoefficient& c, const Vec& v, const IRect& r);
// Global P1 solve on the truth grid with homogeneous Dirichlet data on the
// Dirichlet sides of `dom` and of the sub-rectangle `r` (whole grid when empty).
Vec grid_solve(const TruthGrid& g, const GridCoefficient& c, const Domain& dom, const GridLoad& l,
               const IRect& r, SolverKind kind = SolverKind::direct);

}  // namespace msgoal
