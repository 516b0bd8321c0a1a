#include <cmath>
#include <random>

#include "doctest.h"
#include "msgoal/fem_core.hpp"

using namespace msgoal;

namespace {

// Hand assembly of a P1 stiffness on one triangle from vertex coordinates.
Eigen::Matrix3d hand_stiffness(const std::array<Point, 3>& p) {
  Eigen::Matrix<double, 3, 2> g;
  const double area2 = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
  for (int i = 0; i < 3; ++i) {
    const Point& a = p[(i + 1) % 3];
    const Point& b = p[(i + 2) % 3];
    g(i, 0) = (a.y - b.y) / area2;
    g(i, 1) = (b.x - a.x) / area2;
  }
  return 0.5 * std::abs(area2) * g * g.transpose();
}

double dense(const SpMat& A, int i, int j) { return A.coeff(i, j); }

CoefficientField unit_coef(double v = 1.0) { return constant_field(v, {0, 0, 1, 1}); }

}  // namespace

TEST_SUITE("fem_core") {
  TEST_CASE("P1 Laplacian stencil on two triangles") {
    auto mesh = build_fine_submesh({0, 0, 1, 1}, 1.0);
    auto sys = assemble(mesh, unit_coef(), constant_load(0.0), BoundarySpec{});
    Eigen::Matrix4d ref = Eigen::Matrix4d::Zero();
    for (int t = 0; t < 2; ++t) {
      const auto nd = mesh.tri_nodes(t);
      const auto k = hand_stiffness({mesh.point(nd[0]), mesh.point(nd[1]), mesh.point(nd[2])});
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) ref(nd[a], nd[b]) += k(a, b);
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(dense(sys.A, i, j) == doctest::Approx(ref(i, j)).epsilon(1e-15));
    CHECK(dense(sys.A, 0, 0) == doctest::Approx(1.0));
    CHECK(dense(sys.A, 0, 1) == doctest::Approx(-0.5));
    CHECK(dense(sys.A, 0, 3) == doctest::Approx(0.0));
    CHECK(sys.constraints.size() == 4);
  }

  TEST_CASE("pure Neumann problems") {
    auto mesh = build_fine_submesh({0, 0, 1, 1}, 0.25);
    BoundarySpec bc;
    bc.dirichlet = {false, false, false, false};
    auto bad = assemble(mesh, unit_coef(), constant_load(1.0), bc);
    CHECK_THROWS_AS(solve(bad), std::runtime_error);
    LoadSpec ok;
    ok.f = [](double x, double) { return std::cos(M_PI * x); };
    auto good = assemble(mesh, unit_coef(), ok, bc);
    Vec u = solve(good);
    CHECK(std::abs(u.mean()) < 1e-12);
    CHECK((good.A * u - good.b).norm() < 1e-10);
  }

  TEST_CASE("defect field system is SPD") {
    const double eps = 0.05;
    auto A = periodic_defect_field(eps, {-1, -1, 1, 1});
    auto mesh = build_fine_submesh({-0.2, -0.2, 0.2, 0.2}, eps / 20);
    auto sys = assemble(mesh, A, load_preset(LoadPreset::sinusoidal), BoundarySpec{});
    Vec u = solve(sys);
    CHECK(u.allFinite());
    CHECK(u.norm() > 0);
  }

  TEST_CASE("small exact solve") {
    // [2 -1; -1 2] u = [1 1] plus one Dirichlet node.
    SparseSystem w;
    w.A.resize(3, 3);
    std::vector<Triplet> t3{{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}, {2, 2, 1}};
    w.A.setFromTriplets(t3.begin(), t3.end());
    w.b = Vec(3);
    w.b << 1, 1, 0;
    w.constraints.push_back({2, 0.0, {}});
    for (auto kind : {SolverKind::direct, SolverKind::cg}) {
      SolveOptions o;
      o.kind = kind;
      Vec u = solve(w, o);
      CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("hanging constraints are eliminated exactly") {
    // 1D chain 0-1-2 with node 1 slaved to the mean of its neighbours.
    SparseSystem s;
    s.A.resize(3, 3);
    std::vector<Triplet> t{{0, 0, 1}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}, {1, 2, -1}, {2, 1, -1}, {2, 2, 1}};
    s.A.setFromTriplets(t.begin(), t.end());
    s.b = Vec::Zero(3);
    s.constraints.push_back({0, 0.0, {}});
    s.constraints.push_back({2, 1.0, {}});
    s.constraints.push_back({1, 0.0, {{0, 0.5}, {2, 0.5}}});
    Vec u = solve(s);
    CHECK(u[1] == doctest::Approx(0.5));
  }

  TEST_CASE("random SPD system by conjugate gradients") {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(100, 100);
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) M(i, j) = nd(rng);
    Eigen::MatrixXd S = M * M.transpose() + 100 * Eigen::MatrixXd::Identity(100, 100);
    SparseSystem sys;
    sys.A = S.sparseView();
    sys.A.conservativeResize(101, 101);
    sys.A.coeffRef(100, 100) = 1.0;
    sys.b = Vec::Zero(101);
    for (int i = 0; i < 100; ++i) sys.b[i] = nd(rng);
    sys.constraints.push_back({100, 0.0, {}});
    SolveOptions o;
    o.kind = SolverKind::cg;
    Vec u = solve(sys, o);
    const double res = (S * u.head(100) - sys.b.head(100)).norm() / sys.b.head(100).norm();
    CHECK(res <= 1e-10);

    o.max_iter = 1;
    CHECK_THROWS_AS(solve(sys, o), SolverError);
  }

  TEST_CASE("energy norms") {
    auto mesh = build_fine_submesh({0, 0, 1, 1}, 0.125);
    const auto abar = triangle_means(mesh, unit_coef());
    Vec c = Vec::Constant(mesh.num_nodes(), 3.0);
    CHECK(energy_norm(mesh, abar, c) == 0.0);
    Vec x(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) x[n] = mesh.point(n).x;
    CHECK(energy_norm(mesh, abar, x) == doctest::Approx(1.0).epsilon(1e-14));

    FluxField zero;
    zero.g.assign(mesh.num_tris(), Vec2::Zero());
    CHECK(flux_energy_norm(mesh, abar, zero) == 0.0);

    auto A = handbook_demo_field(0.25, {0, 0, 1, 1});
    const auto ab = triangle_means(mesh, A);
    Vec v(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) v[n] = std::sin(3 * mesh.point(n).x) * mesh.point(n).y;
    CHECK(flux_energy_norm(mesh, ab, flux_of(mesh, v)) == doctest::Approx(energy_norm(mesh, ab, v)).epsilon(1e-14));

    const double e = energy_norm(mesh, ab, v);
    CHECK(broken_energy_norm({e * e}) == doctest::Approx(e));
    CHECK(broken_energy_norm({0.0, 4.0, 0.0}) == doctest::Approx(2.0));
  }

  TEST_CASE("property: Galerkin orthogonality") {
    auto A = handbook_demo_field(0.2, {0, 0, 1, 1});
    auto mesh = build_fine_submesh({0, 0, 1, 1}, 1.0 / 40);
    auto sys = assemble(mesh, A, load_preset(LoadPreset::sinusoidal), BoundarySpec{});
    Vec u = solve(sys);
    Vec r = sys.A * u - sys.b;
    double worst = 0.0;
    for (int n = 0; n < mesh.num_nodes(); ++n)
      if (!mesh.on_boundary(n)) worst = std::max(worst, std::abs(r[n]));
    CHECK(worst <= 1e-9 * sys.b.norm());
  }

  TEST_CASE("property: affine forms are integrated exactly") {
    auto mesh = build_fine_submesh({0, 0, 1, 1}, 1.0 / 7);
    auto sys = assemble(mesh, unit_coef(2.5), constant_load(0.0), BoundarySpec{});
    Vec u(mesh.num_nodes()), v(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
      const Point p = mesh.point(n);
      u[n] = 1 + 2 * p.x - 3 * p.y;
      v[n] = -0.5 * p.x + 4 * p.y;
    }
    const double exact = 2.5 * (2 * -0.5 + -3 * 4);
    CHECK(std::abs(u.dot(sys.A * v) - exact) <= 1e-14 * 40);
  }

  TEST_CASE("property: O(h) energy convergence on a smooth solution") {
    auto uex = [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
    auto grad = [](double x, double y) {
      return Vec2(M_PI * std::cos(M_PI * x) * std::sin(M_PI * y),
                  M_PI * std::sin(M_PI * x) * std::cos(M_PI * y));
    };
    LoadSpec l;
    l.f = [&](double x, double y) { return 2 * M_PI * M_PI * uex(x, y); };
    std::vector<double> err, hs;
    for (int n : {8, 16, 32, 64}) {
      auto mesh = build_fine_submesh({0, 0, 1, 1}, 1.0 / n);
      auto sys = assemble(mesh, unit_coef(), l, BoundarySpec{});
      Vec u = solve(sys);
      const auto& q = rule_order5();
      double e2 = 0;
      for (int t = 0; t < mesh.num_tris(); ++t) {
        const auto nd = mesh.tri_nodes(t);
        const Vec2 gh = p1_gradient(mesh, t, u);
        for (size_t k = 0; k < q.w.size(); ++k) {
          double x = 0, y = 0;
          for (int a = 0; a < 3; ++a) {
            x += q.bary[k][a] * mesh.point(nd[a]).x;
            y += q.bary[k][a] * mesh.point(nd[a]).y;
          }
          e2 += q.w[k] * 0.5 * mesh.hx * mesh.hy * (grad(x, y) - gh).squaredNorm();
        }
      }
      err.push_back(std::sqrt(e2));
      hs.push_back(1.0 / n);
    }
    for (size_t i = 1; i + 1 < err.size(); ++i) {
      const double slope = std::log(err[i] / err[i + 1]) / std::log(hs[i] / hs[i + 1]);
      CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
    }
  }

  TEST_CASE("truth grid kernels agree with generic assembly") {
    const Rect box{0, 0, 1, 1};
    TruthGrid g(box, 24);
    auto A = handbook_demo_field(0.25, box);
    auto gc = grid_coefficient(g, A);
    const IRect r{6, 3, 18, 21};
    auto mesh = aligned_submesh(g, r, 1);
    auto sys = assemble(mesh, A, constant_load(0.0), BoundarySpec{});
    SpMat K = subgrid_stiffness(g, gc, r);
    CHECK((SpMat(K - sys.A)).norm() < 1e-12 * sys.A.norm());

    // Nested coarse space: P^T K P equals direct assembly at coarsening 3.
    auto cmesh = aligned_submesh(g, r, 3);
    auto ccoef = unit_coef();
    GridCoefficient one{std::vector<double>(g.num_tris(), 1.0)};
    SpMat P = subgrid_prolongation(r, 3);
    SpMat Kc = SpMat(P.transpose() * subgrid_stiffness(g, one, r) * P);
    auto csys = assemble(cmesh, ccoef, constant_load(0.0), BoundarySpec{});
    CHECK((SpMat(Kc - csys.A)).norm() < 1e-12 * csys.A.norm());
    // Prolongation reproduces affine functions and partitions unity.
    Vec ones = Vec::Ones(P.cols());
    CHECK(((P * ones).array() - 1.0).abs().maxCoeff() < 1e-14);

    // Global solve on the grid matches the generic solver.
    Domain d;
    d.box = box;
    auto load = load_preset(LoadPreset::sinusoidal);
    Vec ug = grid_solve(g, gc, d, grid_load(g, d, load), IRect{});
    auto fmesh = aligned_submesh(g, g.all(), 1);
    Vec uf = solve(assemble(fmesh, A, load, BoundarySpec{}));
    CHECK((ug - uf).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(std::sqrt(grid_energy_sq(g, gc, ug)) ==
          doctest::Approx(energy_norm(fmesh, A, uf)).epsilon(1e-12));

    // The functional of a load applied to v equals b . v.
    const GridLoad gl = grid_load(g, d, load);
    CHECK(apply(g, gc, gl, uf) == doctest::Approx(assemble(fmesh, A, load, BoundarySpec{}).b.dot(uf)));
  }

  TEST_CASE("indicator functionals") {
    const Rect box{0, 0, 1, 1};
    TruthGrid g(box, 10);
    GridCoefficient gc{std::vector<double>(g.num_tris(), 2.0)};
    const IRect om{2, 2, 6, 5};
    Vec x(g.num_nodes()), one = Vec::Ones(g.num_nodes());
    for (int j = 0; j <= g.N; ++j)
      for (int i = 0; i <= g.N; ++i) x[g.node(i, j)] = g.x(i);
    // Mean of 1 over omega is 1; pre-flux e1 of x integrates abar over omega.
    const double area = g.rect(om).area();
    CHECK(apply(g, gc, indicator_body(g, om, 1.0 / area), one) == doctest::Approx(1.0));
    CHECK(apply(g, gc, indicator_preflux(g, om, Vec2(1.0 / area, 0)), x) == doctest::Approx(2.0));
    auto sum = add(indicator_body(g, om, 1.0 / area), indicator_preflux(g, om, Vec2(1.0 / area, 0)), -1.0);
    CHECK(apply(g, gc, sum, x) == doctest::Approx(g.rect(om).center().x - 2.0));
  }
}
