#pragma once

#include <optional>
#include <random>
#include <vector>

#include "mfglab/ergodic.hpp"
#include "mfglab/horizon.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"

namespace mfglab {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log residuals
};

// Least-squares line through (log T, log e).
RateFit rate_fit(const std::vector<double>& T, const std::vector<double>& errors);

// Long-time convergence errors of a ladder of finite-horizon runs.
struct ConvergenceReport {
  std::vector<double> T_list;
  std::vector<double> e_u;
  std::vector<double> e_F;
  double R = 0.0;
  int dim = 1;
  double measured_R1 = 0.0;
  // Bound constants max_T e(T) T^{1/(n+2)}.
  double C_hat_u = 0.0;
  double C_hat_F = 0.0;
  std::optional<RateFit> fit_u;
  std::optional<RateFit> fit_F;

  double exponent() const { return 1.0 / (dim + 2); }
};

// Largest support radius over every measure of every run.
double measured_attainable_radius(const std::vector<const MFGSolution*>& runs);

ConvergenceReport convergence_metrics(const std::vector<const MFGSolution*>& runs, const ErgodicSolution& ergodic,
                                      double R);

// Indices of the ladder entries with e > factor * floor.
std::vector<std::size_t> above_floor(const std::vector<double>& errors, double floor, double factor = 10.0);

struct InterpolationBound {
  double lhs = 0.0;  // ||f||_inf
  double rhs = 0.0;  // c(n, D) ||f||_2^{2/(n+2)}
};

// c(n, D) of the sup-norm / L2 interpolation inequality for Lipschitz f.
double interpolation_constant(int n, double D);

// ||f||_2 of the piecewise (multi)linear interpolant, exact.
double l2_norm_interpolant(const GridSpec& grid, const std::vector<double>& f);
// Largest |df| / dx over axis edges.
double discrete_lipschitz(const GridSpec& grid, const std::vector<double>& f);

InterpolationBound interpolation_bound(const GridSpec& grid, const std::vector<double>& f, double D);

struct MonotonicityResult {
  double pairing = 0.0;
  double l2_term = 0.0;
  std::optional<double> C_F;
};

MonotonicityResult monotonicity_check(const Coupling& F, const GridMeasure& m1, const GridMeasure& m2);

struct UniquenessReport {
  double max_coupling_diff = 0.0;
  double max_lambda_diff = 0.0;
};

// Random probability measure on `count` distinct nodes of `grid` inside `box`.
GridMeasure random_measure(const GridSpec& grid, const Box& box, std::size_t count, std::mt19937_64& rng);

struct MonotonicitySweep {
  std::size_t pairs = 0;
  double min_pairing = 0.0;
  std::optional<double> min_C_F;
};

// monotonicity_check over `pairs` seeded random pairs supported in K0.
MonotonicitySweep monotonicity_sweep(const Coupling& F, const GridSpec& grid, std::size_t pairs, std::uint64_t seed);

UniquenessReport critical_value_uniqueness_probe(const std::vector<ErgodicSolution>& solutions);

}  // namespace mfglab
