#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgoal/goal.hpp"
#include "msgoal/io.hpp"

namespace msgoal {

// Everything that defines one experiment apart from the adaptive settings.
struct Problem {
  std::string name;
  std::string qoi_name;
  Domain domain;
  CoefficientField A;
  double eps = 0.0;
  LoadSpec load;
  int n_root = 1;
  int cells_per_element = 1;  // truth-grid cells per root element side
  // Fine-mesh ladder: rung 0 is h_K = H_K, rung r >= 1 targets ladder[r - 1].
  std::vector<double> ladder;
  int initial_rung = 1;
  QoiKind qoi = QoiKind::avg_u;
  Rect omega;
  int pum_rings = 0;
  // Children of a split element keep composing the parent's local solutions
  // instead of solving their own.
  bool reuse_parent_basis = false;
};

// Truth-grid cells per fine cell of a leaf on a given rung, snapped to a
// divisor of the leaf side.
int rung_s(const CoarseMesh& mesh, const Leaf& leaf, const std::vector<double>& ladder, int rung);
int max_rung(const std::vector<double>& ladder);

CoarseMesh initial_mesh(const Problem& p);

enum class AdaptMode { goal, global, none };
AdaptMode adapt_mode_from_string(const std::string& s);
std::string to_string(AdaptMode m);

struct RunConfig {
  std::string preset = "defect_sin";  // defect_sin | defect_exp | flow | custom
  std::string qoi = "Q1";             // Q1 | Q2 for defect presets, Q for flow, custom
  double tol = 0.01;                  // relative to |Q(u_H)| (energy norm for global runs)
  double gamma = 0.5;
  int max_iter = 25;
  AdaptMode mode = AdaptMode::goal;
  bool enrich = true;
  bool oracle = true;
  double eps = 0.0;            // 0 keeps the preset value
  int n = 0;                   // initial elements per side, 0 keeps the preset
  std::string h_rule;          // "eps/3", "H/10" ..., empty keeps the preset
  std::uint64_t seed = 1;
  std::string output = "out";
  // Staircase channel of the flow medium: steps,y0,y1,thickness,value.
  std::string channel = "20,0.35,0.65,0.05,10000";
  // custom preset only
  std::string coefficient = "constant:1";
  std::string load = "constant:1";
  std::string qoi_kind = "avg_u";
  Rect domain{0, 0, 1, 1};
  Rect omega{0.4, 0.4, 0.6, 0.6};
  int cells_per_element = 40;
  int pum_rings = 0;
};

RunConfig run_config_from(const KeyValues& kv);
KeyValues to_key_values(const RunConfig& c);
// Rejects unknown presets, tolerances outside (0, 1) and inconsistent sizes.
void validate(const RunConfig& c);
Problem build_problem(const RunConfig& c);
// Preset with its default configuration.
Problem make_problem(const std::string& preset, const std::string& qoi = "");

// Truth-grid solve of the full problem, cached under <dir>/oracle-<key>.bin.
struct Oracle {
  Vec u;
  std::string key;
  bool from_cache = false;
};
Oracle oracle_solution(const Medium& med, const GridLoad& load, const std::string& cache_dir = "");

}  // namespace msgoal
