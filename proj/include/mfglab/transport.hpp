#pragma once

#include <iosfwd>
#include <vector>

#include "mfglab/grid.hpp"
#include "mfglab/hjb.hpp"
#include "mfglab/measure.hpp"

namespace mfglab {

// One discrete optimal curve per support node of the initial measure.
struct TrajectoryBundle {
  GridSpec grid;
  std::vector<double> times;
  std::vector<std::size_t> start_nodes;
  std::vector<std::vector<Point>> positions;  // [curve][time index], times.size() samples
  std::vector<std::vector<Vec>> velocities;   // [curve][time index], times.size() - 1 samples

  std::size_t curves() const { return start_nodes.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : grid.dt; }
};

// Forward Euler along the stored feedback, interpolated multilinearly.
TrajectoryBundle trace_optimal_flow(const ValueField& u, const GridMeasure& m0);

// m(s) = xi(s, .) # m0 at every time of the bundle.
MeasurePath measure_path(const TrajectoryBundle& bundle, const GridMeasure& m0);

struct OccupationReport {
  std::vector<double> per_curve;
  double max = 0.0;
};

// Time each curve spends outside the closed ball B_R.
OccupationReport occupation_time_outside(const TrajectoryBundle& bundle, double R);

// max over curves of sum dt |v|^2 over samples with t_k in [t, t + window).
double energy_on_window(const TrajectoryBundle& bundle, double t, double window);

// sup over curves and times of |xi(s)|.
double max_excursion(const TrajectoryBundle& bundle);
// max over curves and samples of |v|.
double max_speed(const TrajectoryBundle& bundle);

// Per curve: sum dt (L(xi, v) + F(xi, t)) + uf(xi(T)) - u(0, xi(0)).
// `running[k]` is the coupling term on the grid at time index k.
std::vector<double> calibration_defect(const TrajectoryBundle& bundle, const ValueField& u,
                                       const LagrangianModel& L,
                                       const std::vector<std::vector<double>>& running, const TerminalDatum& uf);

void write_trajectories_csv(std::ostream& os, const TrajectoryBundle& bundle);

}  // namespace mfglab
