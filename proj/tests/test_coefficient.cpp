#include <cmath>

#include "doctest.h"
#include "msgoal/coefficient.hpp"
#include "msgoal/fem_core.hpp"

using namespace msgoal;

TEST_SUITE("coefficient") {
  const Rect unit{0, 0, 1, 1};
  const Rect big{-1, -1, 1, 1};

  TEST_CASE("periodic defect field values") {
    const double eps = 1.0 / 20;
    auto a = periodic_defect_field(eps, big);
    CHECK(a(0, 0) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(a(eps / 2, 0) == doctest::Approx(3.0 + 5.0 * std::exp(-0.25)).epsilon(1e-14));
    CHECK(a(eps / 2, 0) == doctest::Approx(6.894).epsilon(1e-4));
    // Far from the defect only the periodic part remains.
    const double x = 7 * eps, y = 0.3 * eps;
    const double aper = 3 + std::cos(2 * M_PI * x / eps) + std::cos(2 * M_PI * y / eps);
    CHECK(std::abs(a(x, y) - aper) < 1e-12);
    CHECK(a.alpha() == 1.0);
    CHECK(a.beta() == 10.0);
    CHECK_THROWS(periodic_defect_field(0.0, big));
  }

  TEST_CASE("handbook demo field") {
    const double eps = 0.1;
    auto a = handbook_demo_field(eps, unit);
    CHECK(a(0, 0) == doctest::Approx(5.0));
    CHECK(a(eps / 2, eps / 2) == doctest::Approx(1.0));
    // Mean over one period by a fine midpoint rule.
    const int n = 200;
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += a((i + 0.5) * eps / n, (j + 0.5) * eps / n);
    CHECK(s / (n * n) == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("channel flow field") {
    auto a = channel_flow_field(unit, 0.0025);
    CHECK(a(0.9, 0.1) == 1.0);
    CHECK(a(0.5, 0.5) == 1e4);
    CHECK(a(0.025, 0.3575) == 1e4);
    CHECK(a.alpha() == 1.0);
    CHECK(a.beta() == 1e4);
  }

  TEST_CASE("load presets") {
    auto s = load_preset(LoadPreset::sinusoidal);
    CHECK(s.f(0.5, 0) == doctest::Approx(1.0));
    auto io = load_preset_from_string("inflow_outflow");
    CHECK(load_preset(io).f(0.15, 0.85) == 1.0);
    CHECK(load_preset(io).f(0.85, 0.15) == -1.0);
    CHECK(load_preset(io).f(0.5, 0.5) == 0.0);
    auto e = load_preset(LoadPreset::exponential);
    CHECK(e.f(0, 0) == 1.0);
    CHECK(s.g(0.3, 0.2) == 0.0);
    CHECK_THROWS(load_preset_from_string("nope"));
  }

  TEST_CASE("ellipticity sampling rejects bad bounds") {
    auto bad = [](double x, double) { return x - 0.5; };
    CHECK_THROWS_AS(CoefficientField("bad", bad, 1.0, 2.0, 0.0, unit), std::domain_error);
    CHECK(ellipticity_violations(periodic_defect_field(0.05, big).fn(), 1.0, 10.0, big, 100000, 3) == 0);
    CHECK(ellipticity_violations(handbook_demo_field(0.1, unit).fn(), 1.0, 5.0, unit, 100000, 3) == 0);
  }

  TEST_CASE("property: tensor is symmetric and isotropic") {
    auto a = periodic_defect_field(0.05, big);
    for (int k = 0; k < 100; ++k) {
      const double x = -1 + 0.0197 * k, y = 0.9 - 0.0183 * k;
      auto t = a.tensor(x, y);
      CHECK(t(0, 1) == t(1, 0));
      CHECK(t(0, 0) == t(1, 1));
    }
  }
}
