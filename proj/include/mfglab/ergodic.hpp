#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mfglab/grid.hpp"
#include "mfglab/horizon.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"

namespace mfglab {

struct ErgodicParams {
  int max_iters = 50;
  // Sup-norm increment between horizon doublings that counts as stable.
  double tol = 1e-6;
  double initial_horizon = 1.0;
  double horizon_cap = 4096.0;
  // Starting measure of the Dirac iteration; uniform on K0 by default.
  std::optional<GridMeasure> start;
};

// Stationary triple (lambda_bar, u_bar, m_bar) with its residuals.
struct ErgodicSolution {
  explicit ErgodicSolution(GridMeasure m) : m_bar(std::move(m)) {}

  double lambda = 0.0;
  std::vector<double> u_bar;
  GridMeasure m_bar;
  std::size_t mather_node = 0;
  std::vector<std::size_t> iterate_nodes;  // Mather node of every iterate
  int iterations = 0;
  bool restarted_from_f5 = false;
  std::vector<double> coupling_bar;  // F(., m_bar)
  std::vector<Vec> feedback;         // frozen-problem feedback at the final horizon
  double horizon = 0.0;
  double stabilization_increment = 0.0;
  double second_equation_residual = 0.0;
};

// -min_x [L(x,0) + F(x,m)] for reversible L.
double critical_value(const GridMeasure& m, const LagrangianModel& L, const Coupling& F);

// Smallest K0 node attaining min L_m(., 0) within 1e-10.
std::size_t mather_point(const GridMeasure& m, const LagrangianModel& L, const Coupling& F);

struct WeakKamResult {
  std::vector<double> u;
  std::vector<Vec> feedback;
  double horizon = 0.0;
  double increment = 0.0;
};

// Long-time limit of the lambda-corrected backward solve with zero terminal
// datum, normalized to vanish at `anchor`.
WeakKamResult weak_kam_solution(double lambda, const GridMeasure& m_bar, std::size_t anchor,
                                const LagrangianModel& L, const Coupling& F, double tol = 1e-6,
                                double initial_horizon = 1.0, double horizon_cap = 4096.0);

ErgodicSolution solve_ergodic(const LagrangianModel& L, const Coupling& F, const GridSpec& grid,
                              const ErgodicParams& params = {});

// Time-independent test function with gradient.
struct SpaceTest {
  std::function<double(const Point&)> f;
  std::function<Vec(const Point&)> grad;
};

std::vector<SpaceTest> default_space_dictionary();

// max over tests of |int <Df, v_bar> dm_bar| with v_bar = -D_pH(x, Du_bar).
double verify_second_equation(const std::vector<double>& u_bar, const GridMeasure& m_bar, const LagrangianModel& L,
                              const std::vector<SpaceTest>& tests);

// max over interior nodes of H(x, Du_bar) - F(x, m_bar), central differences.
double max_effective_hamiltonian(const std::vector<double>& u_bar, const GridMeasure& m_bar,
                                 const LagrangianModel& L, const std::vector<double>& coupling_bar);

// (|lambda(m1) - lambda(m2)|, Lip2(F) d1(m1, m2)).
std::pair<double, double> lambda_lipschitz_check(const GridMeasure& m1, const GridMeasure& m2,
                                                 const LagrangianModel& L, const Coupling& F);

double energy_estimate(const MFGSolution& sol, const ErgodicSolution& ergodic, double R);

}  // namespace mfglab
