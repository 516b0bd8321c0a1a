#pragma once

#include <string>
#include <vector>

#include "msgoal/equilibration.hpp"

namespace msgoal {

enum class QoiKind { avg_u, avg_flux_e1 };

QoiKind qoi_kind_from_string(const std::string& s);
std::string to_string(QoiKind k);

// Q(v) = extractor(v); omega is the extraction window in truth-grid cells.
struct QuantityOfInterest {
  QoiKind kind = QoiKind::avg_u;
  IRect omega;
  GridLoad extractor;
};

// Throws std::invalid_argument when omega is not aligned with the truth grid.
QuantityOfInterest qoi_preset(const TruthGrid& g, QoiKind kind, const Rect& omega);

double evaluate(const Medium& med, const QuantityOfInterest& q, const Vec& v);
// Element-wise values on a broken field.
std::vector<double> evaluate_split(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q,
                                   const MsFemSolution& u);

// Fine solution of the adjoint problem on a box around omega with homogeneous
// Dirichlet data, stored on the sub-grid of `domain`.
struct Handbook {
  IRect domain;
  Vec u;
  std::string key;
  bool from_cache = false;
};

// omega enlarged `factor` times per side about its centre, clipped to the grid.
IRect handbook_domain(const TruthGrid& g, const IRect& omega, double factor = 10.0);
// Reads / writes <cache_dir>/handbook-<key>.bin when cache_dir is not empty.
Handbook precompute_handbook(const Medium& med, const QuantityOfInterest& q, const std::string& cache_dir = "",
                             double factor = 10.0);
// Cache directory from MSGOAL_CACHE, empty when unset.
std::string default_cache_dir();

// Partition-of-unity cutoff: sum of the root-mesh Q1 hats of the nodes of a
// union of root elements (the ones covering omega plus `rings` layers).
struct PumRegion {
  IRect omega1;    // truth-grid cells of the union
  IRect support;   // bounding box of the cutoff support
  Vec chi;         // truth-grid nodal values
};
PumRegion build_pum_region(const CoarseMesh& mesh, const IRect& omega, int rings = 0);

// Adjoint approximation u_plus = z + u_res with z = I(u_hand chi) (z = 0 when
// not enriched). `load` is the functional the MsFEM part solves for.
struct AdjointSolution {
  MsFemSolution res;
  Vec z;
  GridLoad load;
  bool enriched = false;
};

AdjointSolution solve_adjoint(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q);
AdjointSolution solve_adjoint_residual(const Medium& med, const MsFemSpace& space, const QuantityOfInterest& q,
                                       const Handbook& hb, const PumRegion& pum);
// q.extractor - B(z, .), expressed with a pre-flux.
GridLoad residual_adjoint_load(const Medium& med, const QuantityOfInterest& q, const Vec& z);

// Kinematically and statically admissible pair built from an MsFEM solution.
struct AdmissiblePair {
  Vec u_hat;
  EquilibratedFlux flux;
  std::vector<double> cre_k;  // squared element contributions
  double cre = 0.0;
  double nonconformity = 0.0;
};
AdmissiblePair admissible_pair(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                               const GridLoad& load, LocalSolverCache& cache);

// R(v) = l(v) - B(u_hat, v).
double residual_functional(const Medium& med, const GridLoad& load, const Vec& u_hat, const Vec& v);

struct GoalReport {
  double q_h = 0.0;        // Q(u_H)
  double delta_q = 0.0;    // Q(u_hat - u_H)
  double c_bar = 0.0;
  double e = 0.0;          // primal CRE
  double e_adj = 0.0;      // CRE of the (residual) adjoint pair
  double eta = 0.0;
  int theta = 1;
  double basic = 0.0;      // bound from the global Cauchy-Schwarz estimate
  double residual_term = 0.0;  // R(u_hat_plus)
  double corrected = 0.0;  // Q(u_H) + delta_q + c_bar
  std::vector<double> eta_k;
  double energy_bound = 0.0;
};

GoalReport goal_estimate(const Medium& med, const MsFemSpace& space, const MsFemSolution& u,
                         const AdmissiblePair& primal, const GridLoad& load, const QuantityOfInterest& q,
                         const AdjointSolution& adj, const AdmissiblePair& adjoint);

// Full primal + adjoint analysis on one space.
struct GoalAnalysis {
  MsFemSolution u;
  AdmissiblePair primal;
  AdjointSolution adjoint;
  AdmissiblePair adjoint_pair;
  GoalReport report;
};
GoalAnalysis analyze(const Medium& med, const MsFemSpace& space, const GridLoad& load, const QuantityOfInterest& q,
                     const Handbook* hb, const PumRegion* pum, LocalSolverCache& cache);

// Dual weighted residual R(u_plus) + delta_q with the adjoint computed on the
// uniformly refined mesh with order k + 1. Diagnostic only.
double dwr_indicator(const Medium& med, const MsFemSpace& space, const GridLoad& load, const QuantityOfInterest& q,
                     const Vec& u_hat, double delta_q, BasisCache& cache);

}  // namespace msgoal
