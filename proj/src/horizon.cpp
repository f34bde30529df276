#include "mfglab/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

void check_horizon_assumptions(const LagrangianModel& L, const Coupling& F, const GridMeasure& m0,
                               const TerminalDatum& uf) {
  const GridSpec& g = m0.grid();

  std::vector<SampleXV> samples;
  const std::size_t stride = std::max<std::size_t>(1, g.size() / 25);
  for (std::size_t i = 0; i < g.size(); i += stride) {
    for (double frac : {-0.5, 0.0, 0.5}) {
      Vec v{frac * g.v_max, g.dim == 2 ? -frac * g.v_max : 0.0};
      samples.push_back({g.node(i), v});
    }
  }
  TonelliReport tonelli = check_strict_tonelli(L, samples, g.dim);
  if (!tonelli.pass) {
    const TonelliViolation& v = tonelli.violations.front();
    std::ostringstream err;
    err << "strict Tonelli check failed: condition " << v.condition << " at sample " << v.sample << " (margin "
        << v.margin << ")";
    throw AssumptionFailure(err.str());
  }

  check_F4_gap(F, L, g, probe_family(g, F.K0()));

  for (std::size_t i : m0.support()) {
    if (!F.K0().contains(g.node(i))) throw AssumptionFailure("initial measure is not supported in K0");
  }
  try {
    uf.validate(g);
  } catch (const InvalidArgument& e) {
    throw AssumptionFailure(std::string("terminal datum: ") + e.what());
  }
}

namespace {

std::vector<std::vector<double>> coupling_along(const Coupling& F, const MeasurePath& path) {
  std::vector<std::vector<double>> out;
  out.reserve(path.size());
  for (const GridMeasure& m : path.measures) out.push_back(F.field(m));
  return out;
}

}  // namespace

MFGSolution solve_finite_horizon(const LagrangianModel& L, const Coupling& F, const GridMeasure& m0,
                                 const TerminalDatum& uf, double T, const HorizonParams& params) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
  if (params.fixed_theta && (*params.fixed_theta <= 0.0 || *params.fixed_theta > 1.0)) {
    throw InvalidArgument("fixed averaging weight must lie in (0, 1]");
  }
  if (params.check_assumptions) check_horizon_assumptions(L, F, m0, uf);

  GridSpec grid = m0.grid();
  const TimeGrid tg = TimeGrid::make(T, grid.dt);

  MFGSolution sol;
  if (params.initial_guess) {
    sol.m_path = *params.initial_guess;
    sol.m_path.validate();
    if (static_cast<int>(sol.m_path.size()) != tg.steps + 1) {
      throw InvalidArgument("initial guess does not match the time grid");
    }
    sol.m_path.measures[0] = m0;
  } else {
    sol.m_path.times.resize(tg.steps + 1);
    for (int k = 0; k <= tg.steps; ++k) sol.m_path.times[k] = tg.time(k);
    sol.m_path.measures.assign(tg.steps + 1, m0);
  }

  for (int iter = 0; iter < params.max_iters; ++iter) {
    sol.running = coupling_along(F, sol.m_path);
    sol.running.pop_back();

    for (int attempt = 0;; ++attempt) {
      try {
        sol.u = solve_backward(L, sol.running, uf, grid, T);
        break;
      } catch (const MinimizerOnBoundary&) {
        if (attempt >= params.vmax_retries) throw;
        grid.v_max *= 2.0;
        grid.v_nodes = 2 * (grid.v_nodes - 1) + 1;
      }
    }
    sol.bundle = trace_optimal_flow(sol.u, m0);
    const MeasurePath response = measure_path(sol.bundle, m0);

    const double theta = params.fixed_theta ? *params.fixed_theta : 1.0 / (iter + 1);
    double residual = 0.0;
    MeasurePath next;
    next.times = sol.m_path.times;
    next.measures.reserve(next.times.size());
    next.measures.push_back(m0);
    for (std::size_t k = 1; k < next.times.size(); ++k) {
      next.measures.push_back(GridMeasure::mix(sol.m_path.measures[k], response.measures[k], theta));
      residual = std::max(residual, wasserstein1(next.measures[k], sol.m_path.measures[k]));
    }
    sol.m_path = std::move(next);
    sol.residual_history.push_back(residual);
    sol.iterations = iter + 1;
    if (residual <= params.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.coupling_path = coupling_along(F, sol.m_path);
  HorizonDiagnostics& d = sol.diagnostics;
  d.v_max_used = grid.v_max;
  d.support_radius.reserve(sol.m_path.size());
  for (const GridMeasure& m : sol.m_path.measures) {
    d.max_mass_drift = std::max(d.max_mass_drift, std::abs(m.total_mass() - 1.0));
    d.support_radius.push_back(m.support_radius());
    d.max_support_radius = std::max(d.max_support_radius, d.support_radius.back());
  }
  return sol;
}

std::vector<SpaceTimeTest> default_kfp_dictionary() {
  std::vector<SpaceTimeTest> out;
  constexpr double kWidth = 0.75;
  for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (double omega : {0.5, 1.0}) {
      SpaceTimeTest test;
      test.psi = [c, omega](double t, const Point& x) {
        Vec d{x[0] - c, x[1]};
        return std::cos(omega * t) * std::exp(-dot(d, d) / (kWidth * kWidth));
      };
      test.grad = [c, omega](double t, const Point& x) {
        Vec d{x[0] - c, x[1]};
        double s = std::cos(omega * t) * std::exp(-dot(d, d) / (kWidth * kWidth)) * (-2.0 / (kWidth * kWidth));
        return s * d;
      };
      out.push_back(std::move(test));
    }
  }
  return out;
}

double kfp_residual(const ValueField& u, const MeasurePath& path, const std::vector<SpaceTimeTest>& tests) {
  const GridSpec& g = u.grid;
  if (path.size() != u.times.size()) throw InvalidArgument("measure path and value field use different times");
  const int steps = u.steps();
  const double dt = u.dt();
  double worst = 0.0;
  for (const SpaceTimeTest& test : tests) {
    std::vector<double> psi_now(g.size());
    std::vector<double> psi_next(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) psi_now[i] = test.psi(path.times[0], g.node(i));
    const double start = path.measures[0].integrate(psi_now);
    double flux = 0.0;
    for (int k = 0; k < steps; ++k) {
      const GridMeasure& m = path.measures[k];
      for (std::size_t i = 0; i < g.size(); ++i) psi_next[i] = test.psi(path.times[k + 1], g.node(i));
      double time_part = 0.0;
      double transport_part = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (m[i] == 0.0) continue;
        time_part += (psi_next[i] - psi_now[i]) * m[i];
        transport_part += dot(test.grad(path.times[k], g.node(i)), u.feedback[k][i]) * m[i];
      }
      flux += time_part + dt * transport_part;
      std::swap(psi_now, psi_next);
    }
    const double end = path.measures[steps].integrate(psi_now);
    worst = std::max(worst, std::abs(end - start - flux));
  }
  return worst;
}

double kfp_residual(const MFGSolution& sol, const std::vector<SpaceTimeTest>& tests) {
  return kfp_residual(sol.u, sol.m_path, tests);
}

std::vector<double> energy_integrand(const MFGSolution& sol, const std::vector<double>& coupling_bar,
                                     const GridMeasure& m_bar, double R) {
  const GridSpec& g = m_bar.grid();
  std::vector<double> out;
  out.reserve(sol.m_path.size());
  for (std::size_t k = 0; k < sol.m_path.size(); ++k) {
    const GridMeasure& m = sol.m_path.measures[k];
    const std::vector<double>& Fk = sol.coupling_path[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double dm = m[i] - m_bar[i];
      if (dm == 0.0 || norm(g.node(i)) > R) continue;
      acc += (Fk[i] - coupling_bar[i]) * dm;
    }
    out.push_back(acc);
  }
  return out;
}

double energy_estimate(const MFGSolution& sol, const std::vector<double>& coupling_bar, const GridMeasure& m_bar,
                       double R) {
  const std::vector<double> integrand = energy_integrand(sol, coupling_bar, m_bar, R);
  const double dt = sol.u.dt();
  double out = 0.0;
  for (std::size_t k = 0; k + 1 < integrand.size(); ++k) out += dt * integrand[k];
  return out;
}

}  // namespace mfglab
