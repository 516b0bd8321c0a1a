#include "msgoal/problem.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace msgoal {

namespace {

constexpr double kDefectEps = 1.0 / 20.0;
constexpr int kDefectGrid = 720;
constexpr double kFlowEps = 0.05;
constexpr int kFlowGrid = 400;

Rect parse_rect(const std::string& s) {
  std::stringstream ss(s);
  Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  if (!(ss >> r.x0 >> c1 >> r.y0 >> c2 >> r.x1 >> c3 >> r.y1) || c1 != ',' || c2 != ',' || c3 != ',')
    throw std::invalid_argument("expected x0,y0,x1,y1 but got '" + s + "'");
  return r;
}

std::string rect_string(const Rect& r) {
  return fmt(r.x0) + "," + fmt(r.y0) + "," + fmt(r.x1) + "," + fmt(r.y1);
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected a boolean but got '" + s + "'");
}

double parse_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) throw std::invalid_argument(key + ": expected a number but got '" + s + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& s) {
  const double v = parse_double(key, s);
  if (v != std::floor(v)) throw std::invalid_argument(key + ": expected an integer but got '" + s + "'");
  return static_cast<int>(v);
}

// "eps/3", "H/10", "H" or an absolute length.
double parse_h_rule(const std::string& rule, double eps, double H) {
  auto frac = [&](const std::string& base, double unit) -> std::optional<double> {
    if (rule == base) return unit;
    if (rule.rfind(base + "/", 0) == 0) return unit / parse_double("h", rule.substr(base.size() + 1));
    return std::nullopt;
  };
  if (auto v = frac("eps", eps)) return *v;
  if (auto v = frac("H", H)) return *v;
  return parse_double("h", rule);
}

// "constant:v" or a named preset.
LoadSpec parse_load(const std::string& s) {
  if (s.rfind("constant:", 0) == 0) return constant_load(parse_double("load", s.substr(9)));
  return load_preset(load_preset_from_string(s));
}

// "steps,y0,y1,thickness,value" of the staircase channel.
std::vector<RectValue> parse_channel(const std::string& s, double snap) {
  std::stringstream ss(s);
  int steps = 0;
  double y0 = 0, y1 = 0, t = 0, v = 0;
  char c[4] = {};
  if (!(ss >> steps >> c[0] >> y0 >> c[1] >> y1 >> c[2] >> t >> c[3] >> v) || c[0] != ',' || c[1] != ',' ||
      c[2] != ',' || c[3] != ',' || steps < 1 || t <= 0.0 || v <= 0.0)
    throw std::invalid_argument("channel: expected steps,y0,y1,thickness,value but got '" + s + "'");
  return staircase_channel(steps, y0, y1, t, v, snap);
}

CoefficientField parse_coefficient(const std::string& s, const std::string& channel, double eps, const Rect& box,
                                   double snap, std::uint64_t seed) {
  if (s.rfind("constant:", 0) == 0) {
    const double v = parse_double("coefficient", s.substr(9));
    return CoefficientField("constant", [v](double, double) { return v; }, v, v, 0.0, box, seed);
  }
  if (s == "periodic_defect") return periodic_defect_field(eps, box, seed);
  if (s == "channel_flow") return channel_flow_field(parse_channel(channel, snap), box, seed);
  throw std::invalid_argument("unknown coefficient '" + s + "'");
}

}  // namespace

int max_rung(const std::vector<double>& ladder) { return static_cast<int>(ladder.size()); }

int rung_s(const CoarseMesh& mesh, const Leaf& leaf, const std::vector<double>& ladder, int rung) {
  const int cells = mesh.cells_per_side(leaf.level);
  if (rung <= 0) return cells;
  if (rung > max_rung(ladder)) throw std::out_of_range("rung beyond the ladder");
  const int target = std::max(1, static_cast<int>(std::lround(ladder[rung - 1] / mesh.grid.h)));
  return nearest_divisor(cells, target);
}

CoarseMesh initial_mesh(const Problem& p) {
  CoarseMesh probe = build_uniform_coarse_mesh(p.domain, p.n_root, p.cells_per_element, 1);
  const int s = rung_s(probe, probe.leaves.front(), p.ladder, p.initial_rung);
  CoarseMesh m = build_uniform_coarse_mesh(p.domain, p.n_root, p.cells_per_element, s);
  for (Leaf& l : m.leaves) l.p.rung = p.initial_rung;
  return m;
}

AdaptMode adapt_mode_from_string(const std::string& s) {
  if (s == "goal") return AdaptMode::goal;
  if (s == "global") return AdaptMode::global;
  if (s == "none") return AdaptMode::none;
  throw std::invalid_argument("unknown adaptivity mode '" + s + "'");
}

std::string to_string(AdaptMode m) {
  switch (m) {
    case AdaptMode::goal: return "goal";
    case AdaptMode::global: return "global";
    case AdaptMode::none: return "none";
  }
  return "";
}

RunConfig run_config_from(const KeyValues& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "preset") c.preset = v;
    else if (k == "qoi") c.qoi = v;
    else if (k == "tol") c.tol = parse_double(k, v);
    else if (k == "gamma") c.gamma = parse_double(k, v);
    else if (k == "max_iter") c.max_iter = parse_int(k, v);
    else if (k == "mode") c.mode = adapt_mode_from_string(v);
    else if (k == "enrich") c.enrich = parse_bool(v);
    else if (k == "oracle") c.oracle = parse_bool(v);
    else if (k == "eps") c.eps = parse_double(k, v);
    else if (k == "n") c.n = parse_int(k, v);
    else if (k == "h") c.h_rule = v;
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(parse_int(k, v));
    else if (k == "output") c.output = v;
    else if (k == "coefficient") c.coefficient = v;
    else if (k == "load") c.load = v;
    else if (k == "qoi_kind") c.qoi_kind = v;
    else if (k == "domain") c.domain = parse_rect(v);
    else if (k == "omega") c.omega = parse_rect(v);
    else if (k == "cells_per_element") c.cells_per_element = parse_int(k, v);
    else if (k == "pum_rings") c.pum_rings = parse_int(k, v);
    else if (k == "channel") c.channel = v;
    else throw std::invalid_argument("unknown config key '" + k + "'");
  }
  validate(c);
  return c;
}

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv;
  kv["preset"] = c.preset;
  kv["qoi"] = c.qoi;
  kv["tol"] = fmt(c.tol);
  kv["gamma"] = fmt(c.gamma);
  kv["max_iter"] = std::to_string(c.max_iter);
  kv["mode"] = to_string(c.mode);
  kv["enrich"] = c.enrich ? "true" : "false";
  kv["oracle"] = c.oracle ? "true" : "false";
  kv["eps"] = fmt(c.eps);
  kv["n"] = std::to_string(c.n);
  if (!c.h_rule.empty()) kv["h"] = c.h_rule;
  kv["seed"] = std::to_string(c.seed);
  kv["output"] = c.output;
  if (c.preset == "flow" || (c.preset == "custom" && c.coefficient == "channel_flow")) kv["channel"] = c.channel;
  if (c.preset == "custom") {
    kv["coefficient"] = c.coefficient;
    kv["load"] = c.load;
    kv["qoi_kind"] = c.qoi_kind;
    kv["domain"] = rect_string(c.domain);
    kv["omega"] = rect_string(c.omega);
    kv["cells_per_element"] = std::to_string(c.cells_per_element);
    kv["pum_rings"] = std::to_string(c.pum_rings);
  }
  return kv;
}

void validate(const RunConfig& c) {
  if (c.preset != "defect_sin" && c.preset != "defect_exp" && c.preset != "flow" && c.preset != "custom")
    throw std::invalid_argument("unknown preset '" + c.preset + "'");
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw std::invalid_argument("tol must lie in (0, 1)");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (c.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (c.eps < 0.0) throw std::invalid_argument("eps must be positive");
  if (c.n < 0) throw std::invalid_argument("n must be positive");
  if (c.preset == "defect_sin" || c.preset == "defect_exp") {
    if (c.qoi != "Q1" && c.qoi != "Q2") throw std::invalid_argument("defect presets take qoi Q1 or Q2");
  } else if (c.preset == "flow") {
    if (c.qoi != "Q" && c.qoi != "Q1") throw std::invalid_argument("the flow preset has a single qoi Q");
  } else {
    if (c.cells_per_element < 1) throw std::invalid_argument("cells_per_element must be >= 1");
    if (c.domain.empty() || c.omega.empty() || !c.domain.contains(c.omega))
      throw std::invalid_argument("omega must be a nonempty rectangle inside the domain");
  }
}

Problem build_problem(const RunConfig& c) {
  validate(c);
  Problem p;
  p.name = c.preset;
  p.qoi_name = c.qoi;
  int grid_n = 0;
  double H = 0.0;
  if (c.preset == "defect_sin" || c.preset == "defect_exp") {
    p.domain.box = {-1, -1, 1, 1};
    p.eps = c.eps > 0 ? c.eps : kDefectEps;
    p.n_root = c.n > 0 ? c.n : 9;
    grid_n = kDefectGrid;
    p.A = periodic_defect_field(p.eps, p.domain.box, c.seed);
    p.load = load_preset(c.preset == "defect_sin" ? LoadPreset::sinusoidal : LoadPreset::exponential);
    p.qoi = c.preset == "defect_sin" ? QoiKind::avg_flux_e1 : QoiKind::avg_u;
    // Windows of 4 eps x 4 eps: centred on the defect, or inside the element
    // (6, 6) of the 9 x 9 mesh, away from it.
    const double a = 2.0 * p.eps;
    if (c.qoi == "Q1") {
      p.omega = {-a, -a, a, a};
    } else {
      const double x0 = 1.0 / 3.0 + 4.0 / 360.0;
      p.omega = {x0, x0, x0 + 2 * a, x0 + 2 * a};
    }
    H = p.domain.box.width() / p.n_root;
    p.ladder = {c.h_rule.empty() ? p.eps / 3.0 : parse_h_rule(c.h_rule, p.eps, H), p.eps / 5.0, p.eps / 20.0};
  } else if (c.preset == "flow") {
    p.domain.box = {0, 0, 1, 1};
    p.eps = c.eps > 0 ? c.eps : kFlowEps;
    p.n_root = c.n > 0 ? c.n : 10;
    grid_n = kFlowGrid;
    p.A = channel_flow_field(parse_channel(c.channel, 1.0 / kFlowGrid), p.domain.box, c.seed);
    p.load = load_preset(LoadPreset::inflow_outflow);
    p.qoi = QoiKind::avg_u;
    p.omega = {0.8, 0.1, 0.9, 0.2};
    p.pum_rings = 1;
    H = p.domain.box.width() / p.n_root;
    p.ladder = {c.h_rule.empty() ? H / 10.0 : parse_h_rule(c.h_rule, p.eps, H), p.eps / 20.0};
  } else {
    p.domain.box = c.domain;
    p.eps = c.eps > 0 ? c.eps : 0.05;
    p.n_root = c.n > 0 ? c.n : 4;
    grid_n = p.n_root * c.cells_per_element;
    H = p.domain.box.width() / p.n_root;
    p.A = parse_coefficient(c.coefficient, c.channel, p.eps, p.domain.box, p.domain.box.width() / grid_n, c.seed);
    p.load = parse_load(c.load);
    p.qoi = qoi_kind_from_string(c.qoi_kind);
    p.omega = c.omega;
    p.pum_rings = c.pum_rings;
    p.ladder = {c.h_rule.empty() ? H : parse_h_rule(c.h_rule, p.eps, H), p.eps / 5.0, p.eps / 20.0};
  }
  if (grid_n % p.n_root != 0)
    throw std::invalid_argument("n = " + std::to_string(p.n_root) + " does not divide the truth grid size " +
                                std::to_string(grid_n));
  p.cells_per_element = grid_n / p.n_root;
  // Drop rungs that do not refine the previous one.
  std::vector<double> lad;
  for (double h : p.ladder)
    if (lad.empty() || h < lad.back() * (1 - 1e-12)) lad.push_back(h);
  p.ladder = lad;
  p.initial_rung = 1;
  if (c.h_rule == "H") p.initial_rung = 0;
  return p;
}

Problem make_problem(const std::string& preset, const std::string& qoi) {
  RunConfig c;
  c.preset = preset;
  c.qoi = qoi.empty() ? (preset == "flow" ? "Q" : "Q1") : qoi;
  return build_problem(c);
}

Oracle oracle_solution(const Medium& med, const GridLoad& load, const std::string& cache_dir) {
  const TruthGrid& g = med.grid;
  Oracle o;
  Hasher f;
  f.value(g.N);
  f.value(g.box);
  f.value(med.domain.dirichlet);
  f.bytes(med.coef.abar.data(), sizeof(double) * med.coef.abar.size());
  f.vec(subgrid_load(g, med.coef, load, g.all()));
  o.key = f.hex();
  std::string file;
  if (!cache_dir.empty()) {
    file = (std::filesystem::path(cache_dir) / ("oracle-" + o.key + ".bin")).string();
    if (auto v = read_vector(file, g.num_nodes())) {
      o.u = std::move(*v);
      o.from_cache = true;
      return o;
    }
  }
  o.u = grid_solve(g, med.coef, med.domain, load, IRect{});
  if (!cache_dir.empty()) write_vector(file, o.u);
  return o;
}

}  // namespace msgoal
