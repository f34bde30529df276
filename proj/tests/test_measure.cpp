#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "mfglab/errors.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/network_simplex.hpp"

using namespace mfglab;

namespace {

GridSpec line() { return GridSpec::uniform_1d(-2.0, 2.0, 81, 0.05, 1.0, 11); }

GridMeasure random_on(const GridSpec& g, std::mt19937_64& rng, int atoms) {
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::vector<double> weights(g.size(), 0.0);
  double total = 0.0;
  for (int a = 0; a < atoms; ++a) {
    double x = w(rng);
    weights[pick(rng)] += x;
    total += x;
  }
  for (double& x : weights) x /= total;
  return GridMeasure(g, weights);
}

GridMeasure from_atoms(const GridSpec& g, const std::vector<std::size_t>& nodes, const std::vector<double>& weights) {
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t k = 0; k < nodes.size(); ++k) w[nodes[k]] += weights[k];
  return GridMeasure(g, w);
}

}  // namespace

TEST_CASE("measure invariants are enforced") {
  GridSpec g = line();
  std::vector<double> w(g.size(), 0.0);
  w[3] = 0.5;
  CHECK_THROWS_AS(GridMeasure(g, w), InvalidArgument);
  w[4] = 0.5;
  CHECK_NOTHROW(GridMeasure(g, w));
  w[4] = 0.6;
  w[5] = -0.1;
  CHECK_THROWS_AS(GridMeasure(g, w), InvalidArgument);
  CHECK_THROWS_AS(GridMeasure(g, std::vector<double>(3, 1.0 / 3.0)), InvalidArgument);
}

TEST_CASE("support, radius and mean") {
  GridSpec g = line();
  GridMeasure m = GridMeasure::mix(GridMeasure::dirac_at(g, {-1.0, 0.0}), GridMeasure::dirac_at(g, {0.5, 0.0}), 0.25);
  CHECK(m.support().size() == 2);
  CHECK(m.support_radius() == doctest::Approx(1.0));
  CHECK(m.mean()[0] == doctest::Approx(0.75 * -1.0 + 0.25 * 0.5));
  GridMeasure u = GridMeasure::uniform_on(g, Box{1, {-1.0, 0.0}, {1.0, 0.0}});
  CHECK(u.support().size() == 41);
  CHECK(u.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("wasserstein1 on Dirac and two-point examples") {
  GridSpec g = GridSpec::uniform_1d(-1.0, 3.0, 81, 0.05, 1.0, 11);
  GridMeasure d0 = GridMeasure::dirac_at(g, {0.0, 0.0});
  GridMeasure d15 = GridMeasure::dirac_at(g, {1.5, 0.0});
  GridMeasure d1 = GridMeasure::dirac_at(g, {1.0, 0.0});
  CHECK(wasserstein1(d0, d15) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(wasserstein1(GridMeasure::mix(d0, d1, 0.5), d0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(wasserstein1(d15, d15) == 0.0);
}

TEST_CASE("wasserstein1 in 2-D matches frozen transport oracle values") {
  GridSpec g = GridSpec::uniform_2d({0.0, 0.0}, {1.0, 1.0}, {5, 5}, 0.25, 1.0, 5);
  GridMeasure a0 = from_atoms(g, {23, 15, 20, 18, 13, 19},
                              {0.12953150781244838, 0.11901330074659347, 0.1089442550122218, 0.19024830311955027,
                               0.2156696477434672, 0.23659298556571887});
  GridMeasure b0 = from_atoms(g, {20, 0, 24, 11, 18},
                              {0.27541012913385016, 0.21929388184301057, 0.1721289936087526, 0.2736007678889322,
                               0.059566227525454506});
  CHECK(wasserstein1(a0, b0) == doctest::Approx(0.486497413650822).epsilon(1e-10));

  GridMeasure a1 = from_atoms(g, {14, 1, 3, 2, 16, 18},
                              {0.1444173570193476, 0.006881451766691051, 0.11226074327812183, 0.4037794935822627,
                               0.11704786378621888, 0.21561309056735792});
  GridMeasure b1 = from_atoms(g, {17, 19, 9, 15, 21},
                              {0.001748097841277934, 0.3885673784369263, 0.07230733267942616, 0.12527033869573997,
                               0.4121068523466297});
  CHECK(wasserstein1(a1, b1) == doctest::Approx(0.585736189052534).epsilon(1e-10));
}

TEST_CASE("wasserstein1 metric axioms on random triples") {
  std::mt19937_64 rng(7);
  GridSpec g1 = line();
  GridSpec g2 = GridSpec::uniform_2d({-1.0, -1.0}, {1.0, 1.0}, {9, 9}, 0.25, 1.0, 5);
  for (const GridSpec& g : {g1, g2}) {
    for (int trial = 0; trial < 20; ++trial) {
      GridMeasure a = random_on(g, rng, 6);
      GridMeasure b = random_on(g, rng, 5);
      GridMeasure c = random_on(g, rng, 7);
      const double ab = wasserstein1(a, b);
      CHECK(ab == wasserstein1(b, a));
      CHECK(ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-9);
      CHECK(wasserstein1(a, a) == 0.0);
      if (a.weights() != b.weights()) CHECK(ab > 0.0);
    }
  }
}

TEST_CASE("2-D transport agrees with the 1-D formula on a degenerate strip") {
  std::mt19937_64 rng(11);
  GridSpec strip = GridSpec::uniform_2d({0.0, 0.0}, {2.0, 0.5}, {21, 3}, 0.1, 1.0, 5);
  GridSpec g1 = GridSpec::uniform_1d(0.0, 2.0, 21, 0.1, 1.0, 5);
  for (int trial = 0; trial < 10; ++trial) {
    GridMeasure a1 = random_on(g1, rng, 5);
    GridMeasure b1 = random_on(g1, rng, 4);
    std::vector<double> wa(strip.size(), 0.0);
    std::vector<double> wb(strip.size(), 0.0);
    for (std::size_t i = 0; i < g1.size(); ++i) {
      wa[strip.flat_index(static_cast<int>(i), 1)] = a1[i];
      wb[strip.flat_index(static_cast<int>(i), 1)] = b1[i];
    }
    CHECK(wasserstein1(GridMeasure(strip, wa), GridMeasure(strip, wb)) ==
          doctest::Approx(wasserstein1(a1, b1)).epsilon(1e-12));
  }
}

TEST_CASE("network simplex solves small transportation problems") {
  // Brute force over the one free parameter of a 2x2 problem.
  std::vector<double> s{0.3, 0.7};
  std::vector<double> d{0.6, 0.4};
  auto cost = [](std::size_t i, std::size_t j) {
    static const double c[2][2] = {{1.0, 4.0}, {2.0, 1.5}};
    return c[i][j];
  };
  double best = 1e300;
  for (int k = 0; k <= 3000; ++k) {
    double x = 0.3 * k / 3000.0;  // flow 0 -> 0
    double val = x * 1.0 + (0.3 - x) * 4.0 + (0.6 - x) * 2.0 + (0.4 - (0.3 - x)) * 1.5;
    best = std::min(best, val);
  }
  TransportSolution sol = solve_transport(s, d, cost);
  CHECK(sol.cost == doctest::Approx(best).epsilon(1e-12));
  double shipped = 0.0;
  for (const auto& e : sol.plan) {
    CHECK(e.flow >= 0.0);
    shipped += e.flow;
  }
  CHECK(shipped == doctest::Approx(1.0));
  CHECK_THROWS_AS(solve_transport({0.5}, {0.4}, cost), InvalidArgument);
}

TEST_CASE("2-D supports beyond the cap are refused") {
  GridSpec g = GridSpec::uniform_2d({0.0, 0.0}, {1.0, 1.0}, {70, 70}, 0.1, 1.0, 5);
  GridMeasure a = GridMeasure::uniform_on(g, g.box());
  GridMeasure b = GridMeasure::dirac(g, 0);
  CHECK_THROWS_AS(wasserstein1(a, b), SupportTooLarge);
}

TEST_CASE("duality gap examples") {
  GridSpec g = GridSpec::uniform_1d(-1.0, 2.0, 61, 0.05, 1.0, 11);
  GridMeasure d0 = GridMeasure::dirac_at(g, {0.0, 0.0});
  GridMeasure d1 = GridMeasure::dirac_at(g, {1.0, 0.0});
  std::vector<double> identity(g.size());
  std::vector<double> zero(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) identity[i] = -g.node(i)[0];
  CHECK(std::abs(duality_gap_check(d0, d1, identity)) < 1e-12);
  CHECK(duality_gap_check(d0, d1, zero) == doctest::Approx(1.0));
  std::vector<double> steep(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) steep[i] = 2.0 * g.node(i)[0];
  CHECK_THROWS_AS(duality_gap_check(d0, d1, steep), NotLipschitz);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    GridMeasure a = random_on(g, rng, 5);
    GridMeasure b = random_on(g, rng, 8);
    std::vector<double> w = kantorovich_potential_1d(a, b);
    const double gap = duality_gap_check(a, b, w);
    CHECK(gap >= -1e-9);
    CHECK(gap <= 1e-9);
  }
}

TEST_CASE("pushforward deposition") {
  GridSpec g = line();
  const double dx = g.dx(0);
  std::mt19937_64 rng(5);
  GridMeasure m = GridMeasure::mix(random_on(g, rng, 6), GridMeasure::dirac_at(g, {0.0, 0.0}), 0.3);

  SUBCASE("identity") {
    GridMeasure out = pushforward(m, [&](std::size_t i) { return g.node(i); });
    CHECK(out.weights() == m.weights());
  }
  SUBCASE("one-cell shift") {
    GridMeasure d = GridMeasure::dirac_at(g, {0.3, 0.0});
    GridMeasure out = pushforward(d, [&](std::size_t i) { return g.node(i) + Vec{dx, 0.0}; });
    CHECK(out[g.nearest_node({0.3 + dx, 0.0})] == 1.0);
  }
  SUBCASE("half-cell shift splits mass and keeps the mean") {
    GridMeasure d = GridMeasure::dirac_at(g, {0.0, 0.0});
    GridMeasure out = pushforward(d, [&](std::size_t i) { return g.node(i) + Vec{0.5 * dx, 0.0}; });
    const std::size_t c = g.nearest_node({0.0, 0.0});
    CHECK(out[c] == doctest::Approx(0.5));
    CHECK(out[c + 1] == doctest::Approx(0.5));
    CHECK(out.mean()[0] == doctest::Approx(0.5 * dx));
  }
  SUBCASE("random maps conserve mass and move at most the largest displacement") {
    std::uniform_real_distribution<double> shift(-0.3, 0.3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> disp(g.size());
      double largest = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.node(i)[0];
        disp[i] = std::clamp(x + shift(rng), -2.0, 2.0) - x;
        if (m[i] > 0.0) largest = std::max(largest, std::abs(disp[i]));
      }
      GridMeasure out = pushforward(m, [&](std::size_t i) { return g.node(i) + Vec{disp[i], 0.0}; });
      CHECK(std::abs(out.total_mass() - 1.0) <= 1e-14);
      for (double w : out.weights()) CHECK(w >= 0.0);
      CHECK(wasserstein1(out, m) <= largest + 1e-12);
      // Change of variables for the piecewise-linear interpolant of g(x) = x^2.
      std::vector<double> sq(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) sq[i] = g.node(i)[0] * g.node(i)[0];
      double lhs = out.integrate(sq);
      double rhs = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) rhs += m[i] * g.interpolate(sq, g.node(i) + Vec{disp[i], 0.0});
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  SUBCASE("escaping images are reported") {
    GridMeasure d = GridMeasure::dirac_at(g, {1.9, 0.0});
    CHECK_THROWS_AS(pushforward(d, [&](std::size_t i) { return g.node(i) + Vec{0.5, 0.0}; }), EscapedBox);
  }
}

TEST_CASE("d1 convergence matches convergence of test integrals for mollified sequences") {
  GridSpec g = GridSpec::uniform_1d(-2.0, 2.0, 401, 0.01, 1.0, 11);
  GridMeasure target = GridMeasure::dirac_at(g, {0.2, 0.0});
  std::vector<std::function<double(const Point&)>> dictionary;
  for (int k = 1; k <= 10; ++k) {
    dictionary.push_back([k](const Point& x) { return std::sin(k * x[0]); });
    dictionary.push_back([k](const Point& x) { return std::exp(-k * x[0] * x[0]); });
  }
  double previous_d1 = 1e300;
  double previous_gap = 1e300;
  for (double width : {0.4, 0.2, 0.1, 0.05, 0.025}) {
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = (g.node(i)[0] - 0.2) / width;
      w[i] = std::exp(-z * z);
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    GridMeasure mk(g, w);
    const double d1 = wasserstein1(mk, target);
    double gap = 0.0;
    for (const auto& test : dictionary) gap = std::max(gap, std::abs(mk.integrate(test) - target.integrate(test)));
    CHECK(d1 < previous_d1);
    CHECK(gap < previous_gap);
    previous_d1 = d1;
    previous_gap = gap;
  }
  CHECK(previous_d1 < 0.02);
  CHECK(previous_gap < 0.02);
}

TEST_CASE("measure CSV round trip") {
  std::mt19937_64 rng(9);
  for (const GridSpec& g : {line(), GridSpec::uniform_2d({0.0, 0.0}, {1.0, 1.0}, {5, 5}, 0.25, 1.0, 5)}) {
    GridMeasure m = random_on(g, rng, 4);
    std::stringstream ss;
    write_measure_csv(ss, m);
    GridMeasure back = read_measure_csv(ss, g);
    CHECK(back.weights() == m.weights());
  }
  std::stringstream bad("node,x,weight\n");
  CHECK_THROWS_AS(read_measure_csv(bad, line()), IoError);
}

TEST_CASE("measure paths validate their shape") {
  GridSpec g = line();
  MeasurePath p;
  p.times = {0.0, 0.1};
  p.measures = {GridMeasure::dirac(g, 0)};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.measures.push_back(GridMeasure::dirac(g, 1));
  CHECK_NOTHROW(p.validate());
  p.times = {0.1, 0.0};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
