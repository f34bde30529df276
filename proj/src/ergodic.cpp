#include "mfglab/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfglab/errors.hpp"
#include "mfglab/hjb.hpp"

namespace mfglab {

namespace {

void require_reversible(const LagrangianModel& L) {
  if (!L.reversible()) throw NotReversible("critical value formula needs a reversible Lagrangian");
}

}  // namespace

double critical_value(const GridMeasure& m, const LagrangianModel& L, const Coupling& F) {
  require_reversible(L);
  const GridSpec& g = m.grid();
  std::vector<double> cost = zero_velocity_cost(L, F, m);
  double interior = std::numeric_limits<double>::infinity();
  double boundary = std::numeric_limits<double>::infinity();
  std::size_t boundary_arg = 0;
  for (std::size_t i = 0; i < cost.size(); ++i) {
    if (!g.on_boundary(i)) {
      interior = std::min(interior, cost[i]);
    } else if (cost[i] < boundary) {
      boundary = cost[i];
      boundary_arg = i;
    }
  }
  if (boundary < interior - 1e-10) {
    std::ostringstream err;
    err << "min of L(x,0) + F(x,m) attained on the box boundary at node " << boundary_arg;
    throw MinOnBoundary(boundary_arg, err.str());
  }
  return -std::min(interior, boundary);
}

std::size_t mather_point(const GridMeasure& m, const LagrangianModel& L, const Coupling& F) {
  require_reversible(L);
  const GridSpec& g = m.grid();
  std::vector<double> cost = zero_velocity_cost(L, F, m);
  double global = std::numeric_limits<double>::infinity();
  std::size_t global_arg = 0;
  for (std::size_t i = 0; i < cost.size(); ++i) {
    if (cost[i] < global) {
      global = cost[i];
      global_arg = i;
    }
  }
  std::vector<std::size_t> argmin = k0_argmin_set(F, L, m);
  if (g.on_boundary(global_arg) && global < cost[argmin.front()] - 1e-10) {
    std::ostringstream err;
    err << "min of L_m(., 0) attained on the box boundary at node " << global_arg;
    throw MinOnBoundary(global_arg, err.str());
  }
  return argmin.front();
}

WeakKamResult weak_kam_solution(double lambda, const GridMeasure& m_bar, std::size_t anchor,
                                const LagrangianModel& L, const Coupling& F, double tol, double initial_horizon,
                                double horizon_cap) {
  const GridSpec& g = m_bar.grid();
  if (!(initial_horizon > 0.0)) throw InvalidArgument("initial horizon must be positive");
  std::vector<double> running = F.field(m_bar);
  for (double& r : running) r += lambda;

  SemiLagrangianStepper stepper(L, g, g.dt);
  std::vector<double> u(g.size(), 0.0);
  std::vector<double> next;
  std::vector<Vec> feedback;
  long done = 0;
  auto advance_to = [&](double horizon) {
    const long target = std::max(1L, std::lround(horizon / g.dt));
    for (; done < target; ++done) {
      stepper.step(u, running, next, feedback);
      std::size_t hit = stepper.boundary_hit(feedback);
      if (hit < g.size()) {
        std::ostringstream err;
        err << "weak KAM solve: optimal velocity reached v_max at node " << hit;
        throw MinimizerOnBoundary(-static_cast<double>(done + 1) * g.dt, hit, err.str());
      }
      u.swap(next);
    }
  };
  auto normalized = [&]() {
    std::vector<double> out = u;
    const double base = u[anchor];
    for (double& x : out) x -= base;
    return out;
  };

  double horizon = initial_horizon;
  advance_to(horizon);
  std::vector<double> previous = normalized();
  for (;;) {
    horizon *= 2.0;
    if (horizon > horizon_cap) {
      std::ostringstream err;
      err << "weak KAM candidate did not stabilize by horizon " << horizon_cap;
      throw NoStabilization(horizon_cap, std::numeric_limits<double>::quiet_NaN(), err.str());
    }
    advance_to(horizon);
    std::vector<double> current = normalized();
    double inc = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) inc = std::max(inc, std::abs(current[i] - previous[i]));
    if (inc <= tol) return {std::move(current), std::move(feedback), horizon, inc};
    previous = std::move(current);
  }
}

std::vector<SpaceTest> default_space_dictionary() {
  std::vector<SpaceTest> out;
  out.push_back({[](const Point& x) { return x[0]; }, [](const Point&) { return Vec{1.0, 0.0}; }});
  out.push_back({[](const Point& x) { return x[1]; }, [](const Point&) { return Vec{0.0, 1.0}; }});
  out.push_back({[](const Point& x) { return std::sin(x[0] + 0.3); },
                 [](const Point& x) { return Vec{std::cos(x[0] + 0.3), 0.0}; }});
  for (double c : {-0.7, 0.4}) {
    out.push_back({[c](const Point& x) {
                     Vec d{x[0] - c, x[1]};
                     return std::exp(-dot(d, d));
                   },
                   [c](const Point& x) {
                     Vec d{x[0] - c, x[1]};
                     return (-2.0 * std::exp(-dot(d, d))) * d;
                   }});
  }
  return out;
}

double verify_second_equation(const std::vector<double>& u_bar, const GridMeasure& m_bar, const LagrangianModel& L,
                              const std::vector<SpaceTest>& tests) {
  const GridSpec& g = m_bar.grid();
  const std::vector<Vec> du = gradient(g, u_bar, nullptr);
  std::vector<std::pair<std::size_t, Vec>> drift;
  for (std::size_t i : m_bar.support()) {
    LegendreResult lr = legendre_transform(L, g.node(i), du[i], g);
    drift.emplace_back(i, -1.0 * lr.maximizer);
  }
  double worst = 0.0;
  for (const SpaceTest& test : tests) {
    double acc = 0.0;
    for (const auto& [i, v] : drift) acc += m_bar[i] * dot(test.grad(g.node(i)), v);
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

double max_effective_hamiltonian(const std::vector<double>& u_bar, const GridMeasure& m_bar,
                                 const LagrangianModel& L, const std::vector<double>& coupling_bar) {
  const GridSpec& g = m_bar.grid();
  const std::vector<Vec> du = gradient(g, u_bar, nullptr);
  double out = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.on_boundary(i)) continue;
    LegendreResult lr = legendre_transform(L, g.node(i), du[i], g);
    out = std::max(out, lr.H - coupling_bar[i]);
  }
  return out;
}

ErgodicSolution solve_ergodic(const LagrangianModel& L, const Coupling& F, const GridSpec& grid,
                              const ErgodicParams& params) {
  require_reversible(L);
  grid.validate();
  check_F4_gap(F, L, grid, probe_family(grid, F.K0()));

  GridMeasure m = params.start ? *params.start : GridMeasure::uniform_on(grid, F.K0());
  std::vector<std::size_t> visited;
  std::optional<std::size_t> fixed;
  bool restarted = false;
  for (int it = 0; it < params.max_iters && !fixed; ++it) {
    const std::size_t x = mather_point(m, L, F);
    auto seen = std::find(visited.begin(), visited.end(), x);
    if (seen == visited.end()) {
      visited.push_back(x);
      m = GridMeasure::dirac(grid, x);
      continue;
    }
    if (seen + 1 == visited.end()) {
      visited.push_back(x);
      fixed = x;
      break;
    }
    const auto period = static_cast<std::size_t>(visited.end() - seen);
    // A cycle of Diracs: restart from a common minimizer if one exists.
    std::vector<GridMeasure> probes = probe_family(grid, F.K0());
    for (auto c = seen; c != visited.end(); ++c) probes.push_back(GridMeasure::dirac(grid, *c));
    F5Result f5 = check_F5(F, L, probes);
    std::ostringstream err;
    err << "Dirac iteration cycles with period " << period;
    if (!f5.holds || restarted) throw CycleDetected(period, err.str());
    restarted = true;
    visited.push_back(x);
    m = GridMeasure::dirac(grid, *f5.witness);
    const std::size_t y = mather_point(m, L, F);
    visited.push_back(y);
    if (y != *f5.witness) throw CycleDetected(period, err.str() + "; F5 witness is not stationary");
    fixed = y;
  }
  if (!fixed) throw Error("Dirac iteration did not settle within max_iters");

  ErgodicSolution sol(GridMeasure::dirac(grid, *fixed));
  sol.mather_node = *fixed;
  sol.iterate_nodes = visited;
  sol.iterations = static_cast<int>(visited.size());
  sol.restarted_from_f5 = restarted;
  sol.lambda = critical_value(sol.m_bar, L, F);
  sol.coupling_bar = F.field(sol.m_bar);
  WeakKamResult wk =
      weak_kam_solution(sol.lambda, sol.m_bar, sol.mather_node, L, F, params.tol, params.initial_horizon,
                        params.horizon_cap);
  sol.u_bar = std::move(wk.u);
  sol.feedback = std::move(wk.feedback);
  sol.horizon = wk.horizon;
  sol.stabilization_increment = wk.increment;
  sol.second_equation_residual = verify_second_equation(sol.u_bar, sol.m_bar, L, default_space_dictionary());
  return sol;
}

std::pair<double, double> lambda_lipschitz_check(const GridMeasure& m1, const GridMeasure& m2,
                                                 const LagrangianModel& L, const Coupling& F) {
  const double lhs = std::abs(critical_value(m1, L, F) - critical_value(m2, L, F));
  const double rhs = F.lip2() * wasserstein1(m1, m2);
  return {lhs, rhs};
}

double energy_estimate(const MFGSolution& sol, const ErgodicSolution& ergodic, double R) {
  return energy_estimate(sol, ergodic.coupling_bar, ergodic.m_bar, R);
}

}  // namespace mfglab
