#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msgoal/geometry.hpp"

namespace msgoal {

using ScalarFn = std::function<double(double, double)>;

// Isotropic diffusion field A(x) = a(x) I with ellipticity bounds.
class CoefficientField {
 public:
  CoefficientField() = default;
  // Samples the bounds on `box` and throws std::domain_error on violation.
  CoefficientField(std::string name, ScalarFn a, double alpha, double beta, double eps,
                   const Rect& box, std::uint64_t seed = 1);

  double operator()(double x, double y) const { return a_(x, y); }
  Eigen::Matrix2d tensor(double x, double y) const {
    return a_(x, y) * Eigen::Matrix2d::Identity();
  }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double eps() const { return eps_; }
  const std::string& name() const { return name_; }
  const ScalarFn& fn() const { return a_; }

 private:
  std::string name_;
  ScalarFn a_;
  double alpha_ = 1.0, beta_ = 1.0, eps_ = 0.0;
};

// Samples n quasi-random points (Halton, random shift) and returns the
// number of points outside [alpha - tol, beta + tol].
int ellipticity_violations(const ScalarFn& a, double alpha, double beta, const Rect& box, int n,
                           std::uint64_t seed, double tol = 1e-9);

CoefficientField constant_field(double value, const Rect& box);
// a_per(x/eps) + b(x/eps) with a_per = 3 + cos 2pi x + cos 2pi y and
// b = 5 exp(-|x|^2).
CoefficientField periodic_defect_field(double eps, const Rect& box, std::uint64_t seed = 1);
// 3 + cos(2 pi x / eps) + cos(2 pi y / eps).
CoefficientField handbook_demo_field(double eps, const Rect& box);

struct RectValue {
  Rect r;
  double value = 1.0;
};

// Piecewise-constant field: background value outside the union of rectangles.
CoefficientField piecewise_rect_field(const std::vector<RectValue>& parts, double background,
                                      const Rect& box, const std::string& name = "rects",
                                      std::uint64_t seed = 1);
// Diagonal staircase of `steps` rectangles of height `thickness` centred on
// y = y0 + (y1 - y0) x, snapped to multiples of `snap` when positive.
std::vector<RectValue> staircase_channel(int steps, double y0, double y1, double thickness,
                                         double value, double snap);
CoefficientField channel_flow_field(const std::vector<RectValue>& channel, const Rect& box,
                                    std::uint64_t seed = 1);
CoefficientField channel_flow_field(const Rect& box, double snap, std::uint64_t seed = 1);

struct LoadSpec {
  std::string name;
  ScalarFn f;
  ScalarFn g;  // Neumann flux density, only read on Neumann sides
};

enum class LoadPreset { sinusoidal, exponential, inflow_outflow };

LoadSpec load_preset(LoadPreset p);
LoadPreset load_preset_from_string(const std::string& s);
LoadSpec constant_load(double f);

}  // namespace msgoal
