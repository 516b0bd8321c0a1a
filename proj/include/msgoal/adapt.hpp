#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "msgoal/problem.hpp"

namespace msgoal {

enum class Source { macro, over, micro };
std::string to_string(Source s);

// Error-source split of the estimate. Per-element values are absolute; marking
// normalizes them by |K|.
struct SourceIndicators {
  double macro = 0.0, over = 0.0, micro = 0.0;
  std::vector<double> macro_k, over_k, micro_k;

  double global(Source s) const;
  const std::vector<double>& map(Source s) const;
};

// Leaves whose value / |K| is at least gamma times the largest such value.
std::vector<int> mark(const std::vector<double>& values, const std::vector<double>& areas, double gamma);
std::vector<double> leaf_areas(const CoarseMesh& mesh);

// Probe budget per iteration, doubled when the marked leaves yield nothing.
inline constexpr int kMaxProbes = 8;
struct Evaluation;
// Leaves that some source can still change, by decreasing contribution / |K|.
std::vector<int> probe_candidates(const Evaluation& base, const Problem& p);

// Oversampling stops after this many rings (thickness eps, 2 eps, 3 eps).
inline constexpr int kMaxLayers = 3;

// Whether a parameter update of the given kind can still change the leaf.
bool can_update(const CoarseMesh& mesh, int leaf, Source s, const Problem& p);
// Applies one update to the marked leaves that are not saturated; `applied`
// receives those leaves (indices in the input mesh).
CoarseMesh update_parameters(const CoarseMesh& mesh, Source s, const std::vector<int>& marked, const Problem& p,
                             std::vector<int>* applied = nullptr);

// Fine nodes carried by the distinct local solves of the discretization.
long long fine_dofs(const CoarseMesh& mesh);

struct AdaptOptions {
  AdaptMode mode = AdaptMode::goal;
  double tol = 0.01;
  double gamma = 0.5;
  int max_iter = 25;
  bool enrich = true;
  bool oracle = true;
  std::string cache_dir;
};
AdaptOptions adapt_options(const RunConfig& c, const std::string& cache_dir);

// Estimate on one discretization. In goal mode the element values are the
// goal-oriented contributions; in global mode the squared energy-bound
// contributions.
struct Evaluation {
  std::shared_ptr<const CoarseMesh> mesh;
  std::shared_ptr<const MsFemSpace> space;
  MsFemSolution u;
  AdmissiblePair primal;
  AdjointSolution adjoint;
  AdmissiblePair adjoint_pair;
  GoalReport report;
  bool has_adjoint = false;
  std::vector<double> eta_k;
  double eta = 0.0;
  double rel = 0.0;  // eta over |Q(u_H)|, or the energy bound over |||u_hat|||
};

struct IterationRecord {
  int k = 0;
  double eta = 0.0, rel = 0.0;
  double macro = 0.0, over = 0.0, micro = 0.0;
  int leaves = 0;
  int coarse_dofs = 0;
  long long fine_dofs = 0;
  std::string source;
  int marked = 0;
  double q_h = 0.0, corrected = 0.0, delta_q = 0.0, c_bar = 0.0;
  double e = 0.0, e_adj = 0.0, basic = 0.0, energy_bound = 0.0;
  double q_ref = 0.0, error = 0.0, effectivity = 0.0;  // NaN without an oracle
  double max_equilibrium = 0.0;
  int host_solves = 0;
  double seconds = 0.0;
};

struct AdaptState {
  int iteration = 0;
  CoarseMesh mesh;
  std::vector<int> marked_loc, marked_glob;
  std::vector<IterationRecord> history;
  bool converged = false;
  // Artifacts of the last evaluated discretization.
  std::vector<double> eta_k;
  SourceIndicators indicators;
};

// Shared data of one experiment: medium, quantity of interest, handbook,
// oracle and the caches reused across iterations.
class Experiment {
 public:
  Experiment(Problem p, AdaptOptions o);

  const Problem& problem() const { return p_; }
  const AdaptOptions& options() const { return o_; }
  const Medium& medium() const { return med_; }
  const QuantityOfInterest& qoi() const { return q_; }
  const GridLoad& load() const { return load_; }
  const Handbook* handbook() const { return hb_ ? hb_.get() : nullptr; }
  // Oracle value of the quantity of interest, NaN when disabled.
  double q_ref() const { return q_ref_; }
  const Vec* reference() const { return o_.oracle ? &u_ref_ : nullptr; }
  BasisCache& basis_cache() { return basis_; }

  Evaluation evaluate(const CoarseMesh& mesh);
  // Probes each candidate leaf alone with one micro and one over update;
  // macro takes the remainder of the leaf contribution. Unprobed candidates
  // get the probed gain per unit of contribution.
  SourceIndicators source_indicators(const Evaluation& base);

 private:
  Problem p_;
  AdaptOptions o_;
  Medium med_;
  GridLoad load_;
  QuantityOfInterest q_;
  std::unique_ptr<Handbook> hb_;
  Vec u_ref_;
  double q_ref_;
  BasisCache basis_;
  LocalSolverCache local_;
};

using IterationObserver = std::function<void(const IterationRecord&, const Evaluation&)>;

// Greedy loop: evaluate, stop below the tolerance, otherwise split the
// estimate by source, mark and update the dominant one.
AdaptState run_adaptive(Experiment& ex, const IterationObserver& observe = {});
// Same loop driven by the energy-norm bound.
AdaptState run_global_adaptive(Experiment& ex, const IterationObserver& observe = {});

}  // namespace msgoal
