#include "msgoal/coefficient.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace msgoal {

namespace {

double halton(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

int ellipticity_violations(const ScalarFn& a, double alpha, double beta, const Rect& box, int n,
                           std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sx = u(rng), sy = u(rng);
  int bad = 0;
  for (int i = 1; i <= n; ++i) {
    const double tx = std::fmod(halton(i, 2) + sx, 1.0);
    const double ty = std::fmod(halton(i, 3) + sy, 1.0);
    const double v = a(box.x0 + tx * box.width(), box.y0 + ty * box.height());
    if (!(v >= alpha - tol && v <= beta + tol)) ++bad;
  }
  return bad;
}

CoefficientField::CoefficientField(std::string name, ScalarFn a, double alpha, double beta,
                                   double eps, const Rect& box, std::uint64_t seed)
    : name_(std::move(name)), a_(std::move(a)), alpha_(alpha), beta_(beta), eps_(eps) {
  if (!(alpha_ > 0.0) || beta_ < alpha_)
    throw std::invalid_argument("coefficient: need 0 < alpha <= beta");
  const int bad = ellipticity_violations(a_, alpha_, beta_, box, 100000, seed);
  if (bad > 0)
    throw std::domain_error("coefficient '" + name_ + "' violates its ellipticity bounds at " +
                            std::to_string(bad) + " samples");
}

CoefficientField constant_field(double value, const Rect& box) {
  return CoefficientField("constant", [value](double, double) { return value; }, value, value,
                          0.0, box);
}

CoefficientField periodic_defect_field(double eps, const Rect& box, std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("defect field: eps must be positive");
  auto a = [eps](double x, double y) {
    const double X = x / eps, Y = y / eps;
    return 3.0 + std::cos(2.0 * kPi * X) + std::cos(2.0 * kPi * Y) +
           5.0 * std::exp(-(X * X + Y * Y));
  };
  return CoefficientField("periodic_defect", a, 1.0, 10.0, eps, box, seed);
}

CoefficientField handbook_demo_field(double eps, const Rect& box) {
  if (!(eps > 0.0)) throw std::invalid_argument("handbook field: eps must be positive");
  auto a = [eps](double x, double y) {
    return 3.0 + std::cos(2.0 * kPi * x / eps) + std::cos(2.0 * kPi * y / eps);
  };
  return CoefficientField("handbook_demo", a, 1.0, 5.0, eps, box);
}

CoefficientField piecewise_rect_field(const std::vector<RectValue>& parts, double background,
                                      const Rect& box, const std::string& name, std::uint64_t seed) {
  double lo = background, hi = background;
  for (const auto& p : parts) {
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  auto a = [parts, background](double x, double y) {
    for (const auto& p : parts)
      if (x >= p.r.x0 && x <= p.r.x1 && y >= p.r.y0 && y <= p.r.y1) return p.value;
    return background;
  };
  return CoefficientField(name, a, lo, hi, 0.0, box, seed);
}

std::vector<RectValue> staircase_channel(int steps, double y0, double y1, double thickness,
                                         double value, double snap) {
  auto snp = [snap](double v) { return snap > 0.0 ? snap * std::round(v / snap) : v; };
  std::vector<RectValue> out;
  const double w = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double xm = (k + 0.5) * w;
    const double yc = y0 + (y1 - y0) * xm;
    out.push_back({Rect{snp(k * w), snp(yc - 0.5 * thickness), snp((k + 1) * w),
                        snp(yc + 0.5 * thickness)},
                   value});
  }
  return out;
}

CoefficientField channel_flow_field(const std::vector<RectValue>& channel, const Rect& box,
                                    std::uint64_t seed) {
  return piecewise_rect_field(channel, 1.0, box, "channel_flow", seed);
}

CoefficientField channel_flow_field(const Rect& box, double snap, std::uint64_t seed) {
  return channel_flow_field(staircase_channel(20, 0.35, 0.65, 0.05, 1e4, snap), box, seed);
}

LoadSpec load_preset(LoadPreset p) {
  LoadSpec l;
  l.g = [](double, double) { return 0.0; };
  switch (p) {
    case LoadPreset::sinusoidal:
      l.name = "sinusoidal";
      l.f = [](double x, double y) { return std::sin(kPi * x) * std::cos(kPi * y); };
      break;
    case LoadPreset::exponential:
      l.name = "exponential";
      l.f = [](double x, double y) { return std::exp(-(x * x + y * y)); };
      break;
    case LoadPreset::inflow_outflow:
      l.name = "inflow_outflow";
      l.f = [](double x, double y) {
        if (x >= 0.1 && x <= 0.2 && y >= 0.8 && y <= 0.9) return 1.0;
        if (x >= 0.8 && x <= 0.9 && y >= 0.1 && y <= 0.2) return -1.0;
        return 0.0;
      };
      break;
  }
  return l;
}

LoadPreset load_preset_from_string(const std::string& s) {
  if (s == "sinusoidal") return LoadPreset::sinusoidal;
  if (s == "exponential") return LoadPreset::exponential;
  if (s == "inflow_outflow") return LoadPreset::inflow_outflow;
  throw std::invalid_argument("unknown load preset: " + s);
}

LoadSpec constant_load(double f) {
  LoadSpec l;
  l.name = "constant";
  l.f = [f](double, double) { return f; };
  l.g = [](double, double) { return 0.0; };
  return l;
}

}  // namespace msgoal
