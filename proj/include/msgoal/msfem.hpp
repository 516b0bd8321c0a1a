#pragma once

#include <Eigen/SparseLU>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "msgoal/fem_core.hpp"
#include "msgoal/geometry.hpp"

namespace msgoal {

// Fine-scale description shared by every computation of a run.
struct Medium {
  TruthGrid grid;
  Domain domain;
  GridCoefficient coef;
  double eps = 0.0;
};

Medium make_medium(const CoarseMesh& mesh, const CoefficientField& A, double eps);

// Values of a global grid field on the sub-grid of r, and the converse scatter.
Vec restrict_grid(const TruthGrid& g, const Vec& v, const IRect& r);
Vec restrict_sub(const IRect& from, const Vec& v, const IRect& to);
// Squared energy of a field given on the sub-grid of r.
double local_energy_sq(const Medium& med, const IRect& r, const Vec& v);

// 1D Lagrange basis on k+1 equispaced nodes of [0, 1].
double lagrange_1d(int k, int a, double t);
// Q_k Lagrange shape a + (k+1) b on rectangle r, evaluated at (x, y).
double lagrange_q(int k, int a, int b, const Rect& r, double x, double y);

// Local solves on the (possibly oversampled) patch of a host element, on the
// aligned mesh with s grid cells per fine cell. Values are nodal on that mesh.
struct HostSolution {
  IRect host;
  IRect patch;
  int s = 1;
  std::array<Vec, 4> corner;  // data: bilinear corner functions of the host
  Vec w1, w2;                 // harmonic coordinates (data x, y)
};

HostSolution solve_host(const Medium& med, const IRect& host, int s, int width);

// Harmonic coordinates of an element or patch restricted to the cells of
// `on`, returned as truth-grid nodal values on the sub-grid of `on`.
struct HarmonicMap {
  IRect cells;
  Vec w1, w2;
};
HarmonicMap compute_harmonic_coordinates(const Medium& med, const IRect& cells, int s, int width = 0,
                                         const IRect& on = IRect{});

enum class Formulation { galerkin, petrov_galerkin };
enum class BasisKind { multiscale, standard };

// Shape functions of one leaf, stored as truth-grid nodal values on the leaf
// sub-grid. psi0 are the Lagrange shapes (the Petrov-Galerkin test space).
struct LocalShapes {
  IRect cells;
  int s = 1, k = 1;
  std::vector<Vec> psi, psi0;
  Eigen::MatrixXd K;    // int A grad psi_b . grad psi_a
  Eigen::MatrixXd Kpg;  // int A grad psi_b . grad psi0_a
};

// Offline cache persisting across adaptive iterations.
class BasisCache {
 public:
  std::shared_ptr<const HostSolution> host(const Medium& med, const IRect& host, int s, int width);
  std::shared_ptr<const LocalShapes> shapes(const Medium& med, const CoarseMesh& mesh, const Leaf& leaf,
                                            int k, BasisKind kind);
  int host_solves() const { return host_solves_; }
  long long fine_dofs_solved() const { return fine_dofs_; }
  void clear();

 private:
  using HostKey = std::tuple<int, int, int, int, int, int>;
  using ShapeKey = std::tuple<int, int, int, int, int, int, int, int, int, int, int, int>;
  std::map<HostKey, std::shared_ptr<const HostSolution>> hosts_;
  std::map<ShapeKey, std::shared_ptr<const LocalShapes>> shapes_;
  int host_solves_ = 0;
  long long fine_dofs_ = 0;
};

// Global Q_k Lagrange numbering of the coarse mesh. "Extended" DOFs include the
// nodes on the Dirichlet boundary (value zero) so that the Lagrange functions
// form a partition of unity.
struct DofMap {
  int k = 1;
  int n_ext = 0;
  std::vector<Point> node;          // per extended DOF
  std::vector<char> dirichlet;      // per extended DOF
  std::vector<int> free_index;      // extended -> free, -1 on Dirichlet DOFs
  int n_free = 0;
  std::vector<SpMat> T;             // per leaf: extended x local shapes
  std::vector<std::vector<int>> support;  // per extended DOF: leaves
  int hanging = 0;
};

DofMap build_dofs(const CoarseMesh& mesh, int k);

struct SpaceOptions {
  int k = 1;
  Formulation form = Formulation::galerkin;
  BasisKind basis = BasisKind::multiscale;
};

class MsFemSpace {
 public:
  const CoarseMesh* mesh = nullptr;
  SpaceOptions opt;
  DofMap dofs;
  std::vector<std::shared_ptr<const LocalShapes>> shapes;  // per leaf
  bool conforming = true;

  int size() const { return dofs.n_free; }
  // Shapes used as test functions for the formulation.
  const std::vector<Vec>& test(int leaf) const {
    return opt.form == Formulation::galerkin ? shapes[leaf]->psi : shapes[leaf]->psi0;
  }
  // Factorized coarse system (built lazily, reused by every solve).
  const SpMat& matrix() const;
  Vec solve_free(const Vec& rhs) const;

 private:
  mutable SpMat B_;
  mutable std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  mutable std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

MsFemSpace build_space(const Medium& med, const CoarseMesh& mesh, const SpaceOptions& opt,
                       BasisCache& cache);

struct MsFemSolution {
  Vec coeff;               // extended DOF values
  std::vector<Vec> local;  // per leaf: truth-grid nodal values on the leaf sub-grid
};

// Element load moments l(test_a) for every leaf.
std::vector<Vec> element_loads(const Medium& med, const MsFemSpace& space, const GridLoad& load,
                               bool test_functions = true);
MsFemSolution solve_msfem(const Medium& med, const MsFemSpace& space, const GridLoad& load);
MsFemSolution expand(const MsFemSpace& space, const Vec& coeff_ext);

// Residual l(v) - B(u, v) of the discrete system against every free test function.
Vec discrete_residual(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                      const GridLoad& load);

// Average over the leaves sharing a truth-grid node, zero on the Dirichlet
// boundary. Returns a global truth-grid field.
Vec conforming_recovery(const Medium& med, const MsFemSpace& space, const MsFemSolution& u);
// Global field of a conforming solution (leaves agree on shared nodes).
Vec to_grid(const Medium& med, const MsFemSpace& space, const MsFemSolution& u);

// Squared energy of (v - u_K) on each leaf.
std::vector<double> broken_difference_sq(const Medium& med, const MsFemSpace& space,
                                         const MsFemSolution& u, const Vec& v);
// Squared energy of u_K on each leaf.
std::vector<double> broken_energy_sq(const Medium& med, const MsFemSpace& space, const MsFemSolution& u);
// Functional applied element-wise to the local fields.
std::vector<double> broken_apply(const Medium& med, const MsFemSpace& space, const GridLoad& l,
                                 const MsFemSolution& u);
// Per-leaf values l_K(v) for a global grid field v.
std::vector<double> split_apply(const Medium& med, const MsFemSpace& space, const GridLoad& l,
                                const Vec& v);

// Largest jump of the local fields across shared truth-grid nodes.
double max_interface_jump(const Medium& med, const MsFemSpace& space, const MsFemSolution& u);

}  // namespace msgoal
