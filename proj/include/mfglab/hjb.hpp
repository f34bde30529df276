#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "mfglab/grid.hpp"
#include "mfglab/model.hpp"

namespace mfglab {

struct TerminalDatum {
  std::function<double(const Point&)> eval;
  double lip = 0.0;  // declared Lipschitz constant
  double c0 = 0.0;   // eval >= -c0

  static TerminalDatum zero() { return {[](const Point&) { return 0.0; }, 0.0, 0.0}; }
  // Throws InvalidArgument if the grid samples break the declared bounds.
  void validate(const GridSpec& grid) const;
  std::vector<double> sample(const GridSpec& grid) const;
};

// Time-indexed grid function with the discrete optimal feedback of the
// semi-Lagrangian minimization at every non-terminal time.
struct ValueField {
  GridSpec grid;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [time index][node]
  std::vector<std::vector<Vec>> feedback;   // [time index][node], size times.size() - 1

  int steps() const { return static_cast<int>(times.size()) - 1; }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : grid.dt; }
};

struct HjbOptions {
  // Raise MinimizerOnBoundary when an optimal velocity hits +-v_max.
  bool check_velocity_bound = true;
};

// One backward step of the scheme. Pure in its inputs; reused by the
// long-horizon weak KAM construction.
class SemiLagrangianStepper {
 public:
  SemiLagrangianStepper(const LagrangianModel& L, const GridSpec& grid, double dt);

  // u_out(x) = min_v dt (L(x,v) + F(x)) + I[u_next](x + dt v).
  void step(const std::vector<double>& u_next, const std::vector<double>& running, std::vector<double>& u_out,
            std::vector<Vec>& v_out) const;
  // Index of the first node whose minimizer sits on the velocity bound, or
  // grid.size() when none does.
  std::size_t boundary_hit(const std::vector<Vec>& v) const;

  const GridSpec& grid() const { return grid_; }
  double dt() const { return dt_; }

 private:
  GridSpec grid_;
  double dt_;
  std::vector<Vec> velocities_;
  std::vector<double> lagrangian_;  // [node * nv + velocity]
};

// Backward dynamic programming on [0, T] for -u_t + H(x, Du) = F(x, m(t)),
// u(T) = uf. `running[k]` is the coupling term at time index k (k < steps).
ValueField solve_backward(const LagrangianModel& L, const std::vector<std::vector<double>>& running,
                          const TerminalDatum& uf, const GridSpec& grid, double T, const HjbOptions& opts = {});
// Same with a time-independent coupling term.
ValueField solve_backward_frozen(const LagrangianModel& L, const std::vector<double>& running,
                                 const TerminalDatum& uf, const GridSpec& grid, double T, const HjbOptions& opts = {});

// inf_y |x - y|^2 / (2 (T - t)) + uf(y) over grid nodes y, polished by a
// parabolic fit around the discrete minimizer.
double hopf_lax_oracle(const TerminalDatum& uf, double t, const Point& x, double T, const GridSpec& grid);

// Discrete gradient at time index k: upwind along the stored feedback,
// central where the feedback vanishes, one-sided at the box boundary.
std::vector<Vec> gradient(const ValueField& u, int k);
// Same rule for a single grid function with an optional feedback field.
std::vector<Vec> gradient(const GridSpec& grid, const std::vector<double>& u, const std::vector<Vec>* feedback);

// max over times and grid edges inside the closed ball B_R of |du| / dx.
double lipschitz_estimate(const ValueField& u, double R);
double lipschitz_estimate(const GridSpec& grid, const std::vector<double>& u, double R);

void write_value_field_csv(std::ostream& os, const ValueField& u);

}  // namespace mfglab
