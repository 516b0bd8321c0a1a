#pragma once

#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "msgoal/msfem.hpp"

namespace msgoal {

// Elementary coarse edge: the smaller of the two element sides it lies on.
// Tractions are oriented with the reference normal +x (vertical edges) or
// +y (horizontal edges); the element on the minus side sees them with sign +1.
struct CoarseEdge {
  enum Kind { interior, dirichlet, neumann };
  bool vertical = true;
  int line = 0, lo = 0, hi = 0;  // truth-grid indices
  int minus = -1, plus = -1;     // adjacent leaves, -1 outside the domain
  Kind kind = interior;
  std::vector<int> dofs;         // extended DOFs with a nonzero Lagrange trace
  Eigen::MatrixXd tau;           // (hi - lo + 1) x dofs: traces at the edge nodes

  int nodes() const { return hi - lo + 1; }
  double length(double h) const { return (hi - lo) * h; }
};

struct EdgeSet {
  std::vector<CoarseEdge> edges;
  std::vector<std::vector<std::pair<int, int>>> of_leaf;  // (edge, sign)
};

EdgeSet build_edges(const Medium& med, const MsFemSpace& space);

// Element-wise equilibrated flux: on every truth triangle, flux = abar * g.
struct EquilibratedFlux {
  std::vector<Vec2> g;
  std::vector<Vec> tractions;         // per edge: moments against the edge hats
  std::vector<double> equilibrium;    // per leaf: l_K(1) + int_{dK} traction
  int fallback_vertices = 0;          // vertex systems solved in the least-squares sense
  double max_vertex_residual = 0.0;
};

// Per-leaf factorizations of the local Neumann problems, reused across calls.
class LocalSolverCache {
 public:
  const ReducedSolver& get(const Medium& med, const IRect& cells, const std::array<bool, 4>& dirichlet);
  const SpMat& stiffness(const Medium& med, const IRect& cells);
  void clear() {
    solvers_.clear();
    stiffness_.clear();
  }

 private:
  std::map<std::tuple<int, int, int, int, int>, std::shared_ptr<ReducedSolver>> solvers_;
  std::map<std::tuple<int, int, int, int>, std::shared_ptr<SpMat>> stiffness_;
};

EquilibratedFlux equilibrate(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                             const GridLoad& load, LocalSolverCache& cache);

// Traction moments mbar built from averaged one-sided fluxes of u.
Vec averaged_traction(const Medium& med, const CoarseEdge& e, const MsFemSpace& space,
                      const MsFemSolution& u, const GridLoad& load);

// Flux of a truth-grid P1 field, in the same representation.
std::vector<Vec2> grid_flux(const TruthGrid& g, const Vec& v);

// Squared CRE |||abar g - abar grad v|||_F^2 per leaf.
std::vector<double> cre_sq(const Medium& med, const MsFemSpace& space, const std::vector<Vec2>& g,
                           const Vec& v);
double cre(const Medium& med, const std::vector<Vec2>& g, const Vec& v);
// Squared flux norm over the whole grid.
double flux_norm_sq(const Medium& med, const std::vector<Vec2>& g);

struct EnergyBound {
  double cre = 0.0;           // E_CRE(u_hat, p_hat)
  double nonconformity = 0.0;  // |||u_hat - u_H|||_H
  double bound = 0.0;
};
EnergyBound energy_error_bound(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                               const Vec& u_hat, const EquilibratedFlux& p);

struct PragerSynge {
  double lhs = 0.0;       // E_CRE^2
  double rhs = 0.0;       // |||q - p|||^2 + |||u - u_hat|||^2
  double cre = 0.0;       // E_CRE
  double twice_mid = 0.0;  // 2 |||q - (p + A grad u_hat) / 2|||
};
PragerSynge prager_synge(const Medium& med, const Vec& u_hat, const std::vector<Vec2>& p,
                         const Vec& u_ref);

// Weak equilibrium defect max_v |int p.grad v - l(v)| over the truth-grid hats
// that vanish on the Dirichlet boundary.
double weak_equilibrium_defect(const Medium& med, const std::vector<Vec2>& p, const GridLoad& load);

}  // namespace msgoal
