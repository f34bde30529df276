#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mfglab/hjb.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"
#include "mfglab/transport.hpp"

namespace mfglab {

struct HorizonParams {
  double tol = 1e-4;
  int max_iters = 200;
  // Fictitious-play weight 1/(k+1) unless a fixed weight is configured.
  std::optional<double> fixed_theta;
  bool check_assumptions = true;
  // Each MinimizerOnBoundary doubles v_max (keeping dv) up to this many times.
  int vmax_retries = 3;
  // Starting guess for the measure path; defaults to m0 at every time.
  std::optional<MeasurePath> initial_guess;
};

struct HorizonDiagnostics {
  double max_mass_drift = 0.0;
  std::vector<double> support_radius;  // per time
  double max_support_radius = 0.0;
  double v_max_used = 0.0;
};

struct MFGSolution {
  ValueField u;
  MeasurePath m_path;
  TrajectoryBundle bundle;  // best response traced in the last iteration
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  // F(., m_path(t)) at every path time, and the coupling term u was solved against.
  std::vector<std::vector<double>> coupling_path;
  std::vector<std::vector<double>> running;
  HorizonDiagnostics diagnostics;
};

// Strict Tonelli (on grid samples), F4 (on the probe family), supp m0 in K0,
// and the terminal datum bounds. Throws AssumptionFailure on the first miss.
void check_horizon_assumptions(const LagrangianModel& L, const Coupling& F, const GridMeasure& m0,
                               const TerminalDatum& uf);

// Fictitious-play fixed point of the backward HJ / forward transport system
// on [0, T]. NoConvergence is reported through `converged == false`.
MFGSolution solve_finite_horizon(const LagrangianModel& L, const Coupling& F, const GridMeasure& m0,
                                 const TerminalDatum& uf, double T, const HorizonParams& params = {});

// Smooth space-time test function with its spatial gradient.
struct SpaceTimeTest {
  std::function<double(double, const Point&)> psi;
  std::function<Vec(double, const Point&)> grad;
};

std::vector<SpaceTimeTest> default_kfp_dictionary();

// Discrete weak form of the continuity equation with the stored feedback:
// |int psi(T) dm(T) - int psi(0) dm(0)
//   - sum_k [int (psi(t_{k+1}) - psi(t_k)) dm_k + dt int <D psi(t_k), v*_k> dm_k]|,
// maximized over the dictionary.
double kfp_residual(const ValueField& u, const MeasurePath& path, const std::vector<SpaceTimeTest>& tests);
double kfp_residual(const MFGSolution& sol, const std::vector<SpaceTimeTest>& tests);

// Per grid time: int_{B_R} (F(x, m(t)) - F(x, m_bar)) d(m(t) - m_bar).
std::vector<double> energy_integrand(const MFGSolution& sol, const std::vector<double>& coupling_bar,
                                     const GridMeasure& m_bar, double R);
// Left-point time integral of energy_integrand over [0, T].
double energy_estimate(const MFGSolution& sol, const std::vector<double>& coupling_bar, const GridMeasure& m_bar,
                       double R);

}  // namespace mfglab
