#include <doctest.h>

#include <cmath>

#include "mfglab/errors.hpp"
#include "mfglab/grid.hpp"

using namespace mfglab;

TEST_CASE("grid spacing and node coordinates") {
  GridSpec g = GridSpec::uniform_1d(-4.0, 4.0, 401, 0.02, 3.0, 301);
  CHECK(g.dx(0) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(g.size() == 401);
  CHECK(g.node(0)[0] == -4.0);
  CHECK(g.node(400)[0] == 4.0);
  CHECK(std::abs(g.node(200)[0]) < 1e-15);
  CHECK(g.on_boundary(0));
  CHECK(g.on_boundary(400));
  CHECK_FALSE(g.on_boundary(200));
}

TEST_CASE("invalid grids are rejected") {
  GridSpec g = GridSpec::uniform_1d(0.0, 1.0, 11, 0.1, 1.0, 11);
  GridSpec bad = g;
  bad.hi[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = g;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = g;
  bad.nodes[0] = 2;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = g;
  bad.v_max = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = g;
  bad.dim = 3;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("flat index is x-major and lexicographic") {
  GridSpec g = GridSpec::uniform_2d({0.0, 0.0}, {1.0, 2.0}, {5, 9}, 0.25, 1.0, 5);
  CHECK(g.size() == 45);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    Point a = g.node(i);
    Point b = g.node(i + 1);
    CHECK((a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])));
    auto mi = g.multi_index(i);
    CHECK(g.flat_index(mi[0], mi[1]) == i);
  }
}

TEST_CASE("stencil snaps lattice points and interpolates linear functions exactly") {
  GridSpec g = GridSpec::uniform_1d(-1.0, 1.0, 21, 0.1, 1.0, 11);
  Stencil s = g.stencil(g.node(7));
  CHECK(s.count == 1);
  CHECK(s.node[0] == 7);
  CHECK(s.weight[0] == 1.0);

  std::vector<double> lin(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) lin[i] = 3.0 * g.node(i)[0] - 0.5;
  for (double x : {-0.97, -0.333, 0.0, 0.051, 0.999}) {
    CHECK(g.interpolate(lin, {x, 0.0}) == doctest::Approx(3.0 * x - 0.5).epsilon(1e-13));
  }
  // Clamped outside the box.
  CHECK(g.interpolate(lin, {5.0, 0.0}) == doctest::Approx(2.5));

  GridSpec g2 = GridSpec::uniform_2d({0.0, 0.0}, {1.0, 1.0}, {11, 11}, 0.1, 1.0, 5);
  std::vector<double> bil(g2.size());
  for (std::size_t i = 0; i < g2.size(); ++i) {
    Point p = g2.node(i);
    bil[i] = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
  }
  for (Point p : {Point{0.13, 0.77}, Point{0.5, 0.5}, Point{0.999, 0.001}}) {
    CHECK(g2.interpolate(bil, p) == doctest::Approx(1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]).epsilon(1e-13));
  }
}

TEST_CASE("velocity lattice is symmetric and contains zero") {
  GridSpec g = GridSpec::uniform_1d(-1.0, 1.0, 21, 0.1, 3.0, 301);
  auto v = g.velocity_grid();
  REQUIRE(v.size() == 301);
  CHECK(v[150][0] == 0.0);
  CHECK(v.front()[0] == -3.0);
  CHECK(v.back()[0] == 3.0);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i][0] == doctest::Approx(-v[v.size() - 1 - i][0]));

  GridSpec g2 = GridSpec::uniform_2d({0.0, 0.0}, {1.0, 1.0}, {5, 5}, 0.25, 1.0, 5);
  CHECK(g2.velocity_grid().size() == 25);
}

TEST_CASE("time grid") {
  TimeGrid tg = TimeGrid::make(1.0, 0.02);
  CHECK(tg.steps == 50);
  CHECK(tg.time(50) == 1.0);
  CHECK(TimeGrid::make(0.0, 0.1).steps == 0);
  CHECK_THROWS_AS(TimeGrid::make(-1.0, 0.1), InvalidArgument);
}

TEST_CASE("nearest node and containment") {
  GridSpec g = GridSpec::uniform_1d(-4.0, 4.0, 401, 0.02, 3.0, 301);
  CHECK(g.nearest_node({0.0101, 0.0}) == 201);
  CHECK(g.contains({4.0, 0.0}));
  CHECK_FALSE(g.contains({4.01, 0.0}));
  Box K0{1, {-1.0, 0.0}, {1.0, 0.0}};
  CHECK(K0.strictly_inside(g.box()));
  CHECK_FALSE(g.box().strictly_inside(g.box()));
}
