#include <algorithm>
#include <random>

#include "doctest.h"
#include "msgoal/adapt.hpp"

using namespace msgoal;

namespace {

// Small oscillating problem: 4 x 4 root elements of 24 truth cells.
RunConfig small_config() {
  RunConfig c;
  c.preset = "custom";
  c.qoi = "Qc";
  c.coefficient = "periodic_defect";
  c.load = "sinusoidal";
  c.eps = 0.125;
  c.n = 4;
  c.cells_per_element = 24;
  c.domain = {0, 0, 1, 1};
  c.omega = {0.25, 0.25, 0.5, 0.5};
  c.max_iter = 4;
  c.oracle = false;
  return c;
}

// Leaf of `before` that contains leaf l of `after`.
const Leaf& ancestor(const CoarseMesh& before, const CoarseMesh& after, const Leaf& l) {
  const IRect c = after.cells(l);
  for (const Leaf& b : before.leaves) {
    const IRect bc = before.cells(b);
    if (bc.i0 <= c.i0 && c.i1 <= bc.i1 && bc.j0 <= c.j0 && c.j1 <= bc.j1) return b;
  }
  throw std::logic_error("no ancestor");
}

}  // namespace

TEST_SUITE("adapt") {
  TEST_CASE("marking examples") {
    const std::vector<double> area(4, 0.25);
    CHECK(mark({1, 3, 2, 3}, area, 1.0) == std::vector<int>{1, 3});
    CHECK(mark({1, 3, 2, 0}, area, 0.0) == std::vector<int>{0, 1, 2, 3});
    CHECK(mark({2, 2, 2, 2}, area, 0.5) == std::vector<int>{0, 1, 2, 3});
    // Normalization by |K|: a small leaf with a small value can dominate.
    CHECK(mark({1.0, 0.3}, {1.0, 0.1}, 1.0) == std::vector<int>{1});
    CHECK_THROWS_AS(mark({1.0}, {1.0, 1.0}, 0.5), std::invalid_argument);
  }

  TEST_CASE("marking monotonicity") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(30), a(30);
      for (int k = 0; k < 30; ++k) {
        v[k] = u(rng);
        a[k] = 0.1 + u(rng);
      }
      std::vector<int> prev = mark(v, a, 0.0);
      for (double g = 0.05; g <= 1.0; g += 0.05) {
        const auto m = mark(v, a, g);
        CHECK(std::includes(prev.begin(), prev.end(), m.begin(), m.end()));
        CHECK_FALSE(m.empty());
        prev = m;
      }
    }
  }

  TEST_CASE("update examples") {
    RunConfig c = small_config();
    c.h_rule = "H";
    const Problem p = build_problem(c);
    const CoarseMesh m = initial_mesh(p);
    const Leaf& l0 = m.leaves[0];
    CHECK(m.h(l0) == doctest::Approx(m.H(l0)));

    std::vector<int> applied;
    // Oversampling is not performed while h = H.
    const CoarseMesh o = update_parameters(m, Source::over, {0}, p, &applied);
    CHECK(applied.empty());
    CHECK(o.leaves[0].p.layers == 0);
    CHECK_FALSE(can_update(m, 0, Source::over, p));

    const CoarseMesh mi = update_parameters(m, Source::micro, {0}, p, &applied);
    CHECK(applied == std::vector<int>{0});
    CHECK(mi.h(mi.leaves[0]) < m.h(l0));
    // First rung below H: eps/5, snapped to a divisor of the element side.
    CHECK(mi.h(mi.leaves[0]) == doctest::Approx(p.eps / 5).epsilon(0.25));
    CHECK(mi.leaves[1].p.s == l0.p.s);

    const CoarseMesh ov = update_parameters(mi, Source::over, {0}, p, &applied);
    CHECK(applied == std::vector<int>{0});
    CHECK(ov.leaves[0].p.layers == 1);
    CHECK(ov.d(ov.leaves[0]) > ov.H(ov.leaves[0]));

    const CoarseMesh ma = update_parameters(m, Source::macro, {5}, p, &applied);
    CHECK(ma.size() == m.size() + 3);
    int children = 0;
    for (const Leaf& l : ma.leaves)
      if (l.level == 1) {
        ++children;
        CHECK(ma.H(l) == doctest::Approx(m.H(m.leaves[5]) / 2));
      }
    CHECK(children == 4);
  }

  TEST_CASE("saturation") {
    const Problem p = build_problem(small_config());
    CoarseMesh m = initial_mesh(p);
    std::vector<int> applied;
    for (int i = 0; i < 10; ++i) m = update_parameters(m, Source::micro, {0}, p, &applied);
    CHECK(applied.empty());
    CHECK_FALSE(can_update(m, 0, Source::micro, p));
    CHECK(m.leaves[0].p.s == 1);
    for (int i = 0; i < 10; ++i) m = update_parameters(m, Source::over, {0}, p, &applied);
    CHECK(m.leaves[0].p.layers == kMaxLayers);
    CHECK_FALSE(can_update(m, 0, Source::over, p));
  }

  TEST_CASE("parameter ladders are monotone") {
    const Problem p = build_problem(small_config());
    std::mt19937 rng(3);
    CoarseMesh m = initial_mesh(p);
    for (int step = 0; step < 12; ++step) {
      const Source s = static_cast<Source>(rng() % 3);
      std::vector<int> marked;
      for (int k = 0; k < m.size(); ++k)
        if (rng() % 4 == 0) marked.push_back(k);
      const CoarseMesh next = update_parameters(m, s, marked, p);
      for (const Leaf& l : next.leaves) {
        const Leaf& a = ancestor(m, next, l);
        CHECK(next.H(l) <= m.H(a) + 1e-14);
        CHECK(next.h(l) <= m.h(a) + 1e-14);
        CHECK(l.p.layers >= a.p.layers);
        CHECK(l.p.rung >= a.p.rung);
      }
      m = next;
    }
  }

  TEST_CASE("fine dof count") {
    const Problem p = build_problem(small_config());
    const CoarseMesh m = initial_mesh(p);
    const int per = m.cells_per_side(0) / m.leaves[0].p.s + 1;
    CHECK(fine_dofs(m) == static_cast<long long>(m.size()) * per * per);
  }

  TEST_CASE("per-leaf probes") {
    RunConfig c = small_config();
    Experiment ex(build_problem(c), adapt_options(c, ""));
    const Evaluation ev = ex.evaluate(initial_mesh(ex.problem()));
    const SourceIndicators si = ex.source_indicators(ev);
    const auto cand = probe_candidates(ev, ex.problem());
    std::vector<char> is_cand(ev.mesh->size(), 0);
    for (int k : cand) is_cand[k] = 1;
    int nonzero = 0;
    for (int k = 0; k < ev.mesh->size(); ++k) {
      CHECK(si.macro_k[k] >= 0.0);
      CHECK(si.over_k[k] >= 0.0);
      CHECK(si.micro_k[k] >= 0.0);
      CHECK(si.macro_k[k] <= ev.eta_k[k] + 1e-15);
      const bool any = si.macro_k[k] + si.over_k[k] + si.micro_k[k] > 0.0;
      if (any) ++nonzero;
      // Only leaves some source can still change get a value.
      if (!is_cand[k]) CHECK_FALSE(any);
    }
    CHECK(nonzero >= 1);
    CHECK(si.global(Source::macro) + si.global(Source::micro) + si.global(Source::over) > 0.0);
  }

  TEST_CASE("adaptive loop is deterministic") {
    RunConfig c = small_config();
    c.tol = 1e-6;
    c.max_iter = 3;
    auto history = [&] {
      Experiment ex(build_problem(c), adapt_options(c, ""));
      return run_adaptive(ex).history;
    };
    const auto a = history();
    const auto b = history();
    REQUIRE(a.size() == 3);
    REQUIRE(b.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].eta == b[i].eta);
      CHECK(a[i].macro == b[i].macro);
      CHECK(a[i].source == b[i].source);
      CHECK(a[i].leaves == b[i].leaves);
      CHECK(a[i].fine_dofs == b[i].fine_dofs);
    }
    CHECK(a.back().source == "cap");
    CHECK(a.front().source != "cap");
  }

  TEST_CASE("constant medium terminates at once") {
    for (AdaptMode mode : {AdaptMode::goal, AdaptMode::global}) {
      RunConfig c = small_config();
      c.coefficient = "constant:3";
      c.load = "constant:0";
      c.mode = mode;
      Experiment ex(build_problem(c), adapt_options(c, ""));
      const AdaptState st = mode == AdaptMode::goal ? run_adaptive(ex) : run_global_adaptive(ex);
      REQUIRE(st.history.size() == 1);
      CHECK(st.converged);
      CHECK(st.history[0].eta <= 1e-12);
      CHECK(st.history[0].source == "none");
    }
  }

  TEST_CASE("mode none gives a single estimate") {
    RunConfig c = small_config();
    c.mode = AdaptMode::none;
    Experiment ex(build_problem(c), adapt_options(c, ""));
    const AdaptState st = run_adaptive(ex);
    REQUIRE(st.history.size() == 1);
    CHECK(st.history[0].eta > 0.0);
    CHECK_THROWS_AS(run_global_adaptive(ex), std::invalid_argument);
  }
}
