#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "msgoal/problem.hpp"

using namespace msgoal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "msgoal_test_io";
  fs::create_directories(d);
  return d / name;
}

std::vector<std::string> lines(const fs::path& p, int n) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (static_cast<int>(out.size()) < n && std::getline(in, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("fixed 17 digit floats") {
    CHECK(fmt(0.1) == "0.10000000000000001");
    CHECK(fmt(1.0) == "1");
    CHECK(fmt(std::nan("")) == "nan");
    for (double x : {1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0}) CHECK(std::stod(fmt(x)) == x);
  }

  TEST_CASE("csv round trip") {
    CsvTable t({"a", "b"});
    t.add({"1", fmt(0.1)});
    t.add({"x", "y"});
    CHECK_THROWS_AS(t.add({"only one"}), std::invalid_argument);
    const auto p = scratch("t.csv");
    t.write(p.string());
    const auto rows = read_csv(p.string());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b"});
    CHECK(std::stod(rows[1][1]) == 0.1);
    std::ostringstream s;
    t.write(s);
    CHECK(s.str() == "a,b\n1,0.10000000000000001\nx,y\n");
  }

  TEST_CASE("binary vectors") {
    const auto p = scratch("v.bin");
    Vec v(4);
    v << 1.0, -2.0, 1.0 / 3.0, 1e-300;
    write_vector(p.string(), v);
    const auto r = read_vector(p.string(), 4);
    REQUIRE(r.has_value());
    CHECK((*r - v).norm() == 0.0);
    CHECK_FALSE(read_vector(p.string(), 5).has_value());
    CHECK_FALSE(read_vector(scratch("missing.bin").string(), 4).has_value());
  }

  TEST_CASE("hash keys") {
    Hasher a, b, c;
    a.value(1.5);
    b.value(1.5);
    c.value(1.5000000000000002);
    CHECK(a.hex() == b.hex());
    CHECK(a.hex() != c.hex());
    CHECK(a.hex().size() == 16);
  }

  TEST_CASE("config parsing") {
    const auto kv = parse_config("# comment\n tol = 0.05  # trailing\n\npreset=flow\n");
    CHECK(kv.at("tol") == "0.05");
    CHECK(kv.at("preset") == "flow");
    CHECK_THROWS_AS(parse_config("no equals sign"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(" = 3"), std::invalid_argument);
  }

  TEST_CASE("run config round trip") {
    RunConfig c;
    c.preset = "custom";
    c.qoi = "Qc";
    c.tol = 0.03;
    c.gamma = 0.7;
    c.mode = AdaptMode::global;
    c.h_rule = "eps/5";
    c.coefficient = "channel_flow";
    c.channel = "10,0.3,0.7,0.1,100";
    c.omega = {0.25, 0.5, 0.5, 0.75};
    c.cells_per_element = 12;
    const auto p = scratch("c.cfg");
    write_config(p.string(), to_key_values(c));
    const RunConfig d = run_config_from(read_config(p.string()));
    CHECK(to_key_values(d) == to_key_values(c));
    CHECK(d.mode == AdaptMode::global);
    CHECK(d.omega.x0 == 0.25);
  }

  TEST_CASE("invalid configs are rejected") {
    auto bad = [](KeyValues kv) { CHECK_THROWS_AS(run_config_from(kv), std::invalid_argument); };
    bad({{"tol", "1.5"}});
    bad({{"tol", "0"}});
    bad({{"gamma", "-0.1"}});
    bad({{"max_iter", "0"}});
    bad({{"preset", "nope"}});
    bad({{"qoi", "Q3"}});
    bad({{"mode", "fast"}});
    bad({{"colour", "blue"}});
    bad({{"tol", "abc"}});
    bad({{"n", "2.5"}});
    bad({{"preset", "custom"}, {"omega", "0,0,2,2"}});
    RunConfig c;
    c.n = 7;  // does not divide the truth grid
    CHECK_THROWS_AS(build_problem(c), std::invalid_argument);
    c = RunConfig{};
    c.preset = "flow";
    c.qoi = "Q";
    c.channel = "3,0.2";
    CHECK_THROWS_AS(build_problem(c), std::invalid_argument);
  }

  TEST_CASE("preset defaults") {
    const Problem d = make_problem("defect_sin");
    CHECK(d.eps == doctest::Approx(0.05));
    CHECK(d.n_root == 9);
    CHECK(d.omega.width() == doctest::Approx(4 * d.eps));
    const CoarseMesh m = initial_mesh(d);
    CHECK(m.size() == 81);
    // h = eps/3 snapped to the truth grid.
    CHECK(m.h(m.leaves[0]) == doctest::Approx(d.eps / 3).epsilon(0.1));
    const Problem f = make_problem("flow");
    const CoarseMesh mf = initial_mesh(f);
    CHECK(mf.size() == 100);
    CHECK(mf.h(mf.leaves[0]) == doctest::Approx(0.01));
  }

  TEST_CASE("vtk headers") {
    const Problem p = make_problem("custom");
    const CoarseMesh m = initial_mesh(p);
    const auto mp = scratch("m.vtk");
    write_mesh_vtk(mp.string(), m, p.eps, {{"x", std::vector<double>(m.size(), 1.0)}});
    const auto l = lines(mp, 6);
    CHECK(l[0] == "# vtk DataFile Version 3.0");
    CHECK(l[2] == "ASCII");
    CHECK(l[3] == "DATASET UNSTRUCTURED_GRID");
    CHECK(l[4] == "POINTS " + std::to_string(4 * m.size()) + " double");
    CHECK_THROWS_AS(write_mesh_vtk(mp.string(), m, p.eps, {{"x", {1.0}}}), std::invalid_argument);

    const Medium med = make_medium(m, p.A, p.eps);
    const Vec u = Vec::Ones(med.grid.num_nodes());
    const int N = med.grid.N;
    const auto gp = scratch("g.vtk");
    write_grid_vtk(gp.string(), med.grid, GridFields{{{"u", &u}}, {}}, N / 4);
    const auto lg = lines(gp, 5);
    CHECK(lg[4] == "POINTS 25 double");
    CHECK_THROWS_AS(write_grid_vtk(gp.string(), med.grid, {}, N + 1), std::invalid_argument);
  }
}
