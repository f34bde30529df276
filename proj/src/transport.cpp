#include "mfglab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

namespace {

Vec interpolate_feedback(const GridSpec& g, const std::vector<Vec>& fb, const Point& p) {
  const Stencil st = g.stencil(p);
  Vec out{0.0, 0.0};
  for (int k = 0; k < st.count; ++k) out = out + st.weight[k] * fb[st.node[k]];
  return out;
}

}  // namespace

TrajectoryBundle trace_optimal_flow(const ValueField& u, const GridMeasure& m0) {
  const GridSpec& g = u.grid;
  if (!g.same_space(m0.grid())) throw InvalidArgument("value field and initial measure use different grids");
  TrajectoryBundle out;
  out.grid = g;
  out.times = u.times;
  out.start_nodes = m0.support();
  const int steps = u.steps();
  const double dt = u.dt();
  out.positions.resize(out.start_nodes.size());
  out.velocities.resize(out.start_nodes.size());
  for (std::size_t c = 0; c < out.start_nodes.size(); ++c) {
    auto& pos = out.positions[c];
    auto& vel = out.velocities[c];
    pos.resize(steps + 1);
    vel.resize(steps);
    pos[0] = g.node(out.start_nodes[c]);
    for (int k = 0; k < steps; ++k) {
      vel[k] = interpolate_feedback(g, u.feedback[k], pos[k]);
      pos[k + 1] = pos[k] + dt * vel[k];
      if (!g.contains(pos[k + 1])) {
        std::ostringstream err;
        err << "optimal curve from node " << out.start_nodes[c] << " left the box at t = " << u.times[k + 1];
        throw EscapedBox(out.start_nodes[c], err.str());
      }
    }
  }
  return out;
}

MeasurePath measure_path(const TrajectoryBundle& bundle, const GridMeasure& m0) {
  const GridSpec& g = bundle.grid;
  if (bundle.start_nodes != m0.support()) throw InvalidArgument("bundle was not traced from this measure");
  std::vector<std::size_t> curve_of(g.size(), 0);
  for (std::size_t c = 0; c < bundle.start_nodes.size(); ++c) curve_of[bundle.start_nodes[c]] = c;

  MeasurePath path;
  path.times = bundle.times;
  path.measures.reserve(bundle.times.size());
  path.measures.push_back(m0);
  for (std::size_t k = 1; k < bundle.times.size(); ++k) {
    path.measures.push_back(
        pushforward(m0, [&](std::size_t node) { return bundle.positions[curve_of[node]][k]; }));
  }
  return path;
}

OccupationReport occupation_time_outside(const TrajectoryBundle& bundle, double R) {
  OccupationReport out;
  const double dt = bundle.dt();
  out.per_curve.reserve(bundle.curves());
  for (const auto& pos : bundle.positions) {
    std::size_t count = 0;
    for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
      if (norm(pos[k]) > R) ++count;
    }
    double t = dt * static_cast<double>(count);
    out.per_curve.push_back(t);
    out.max = std::max(out.max, t);
  }
  return out;
}

double energy_on_window(const TrajectoryBundle& bundle, double t, double window) {
  const double T = bundle.times.back();
  if (!(window > 0.0) || t > T || t + window < 0.0) throw InvalidArgument("energy window misses [0, T]");
  const double dt = bundle.dt();
  const double eps = 1e-9 * dt;
  double out = 0.0;
  for (const auto& vel : bundle.velocities) {
    double e = 0.0;
    for (std::size_t k = 0; k < vel.size(); ++k) {
      const double tk = bundle.times[k];
      if (tk >= t - eps && tk < t + window - eps) e += dt * dot(vel[k], vel[k]);
    }
    out = std::max(out, e);
  }
  return out;
}

double max_excursion(const TrajectoryBundle& bundle) {
  double out = 0.0;
  for (const auto& pos : bundle.positions) {
    for (const Point& p : pos) out = std::max(out, norm(p));
  }
  return out;
}

double max_speed(const TrajectoryBundle& bundle) {
  double out = 0.0;
  for (const auto& vel : bundle.velocities) {
    for (const Vec& v : vel) out = std::max(out, norm(v));
  }
  return out;
}

std::vector<double> calibration_defect(const TrajectoryBundle& bundle, const ValueField& u,
                                       const LagrangianModel& L,
                                       const std::vector<std::vector<double>>& running, const TerminalDatum& uf) {
  const GridSpec& g = bundle.grid;
  const double dt = bundle.dt();
  std::vector<double> out;
  out.reserve(bundle.curves());
  for (std::size_t c = 0; c < bundle.curves(); ++c) {
    const auto& pos = bundle.positions[c];
    const auto& vel = bundle.velocities[c];
    double action = 0.0;
    for (std::size_t k = 0; k < vel.size(); ++k) {
      action += dt * (L(pos[k], vel[k]) + g.interpolate(running[k], pos[k]));
    }
    action += uf.eval(pos.back());
    out.push_back(action - g.interpolate(u.values[0], pos[0]));
  }
  return out;
}

void write_trajectories_csv(std::ostream& os, const TrajectoryBundle& bundle) {
  const bool two = bundle.grid.dim == 2;
  os << (two ? "curve_id,t,x,y,vx,vy\n" : "curve_id,t,x,v\n");
  char buf[160];
  for (std::size_t c = 0; c < bundle.curves(); ++c) {
    const auto& pos = bundle.positions[c];
    const auto& vel = bundle.velocities[c];
    for (std::size_t k = 0; k < pos.size(); ++k) {
      // The last sample carries the final step's velocity.
      const Vec v = vel.empty() ? Vec{0.0, 0.0} : vel[std::min(k, vel.size() - 1)];
      if (two) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", c, bundle.times[k], pos[k][0],
                      pos[k][1], v[0], v[1]);
      } else {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", c, bundle.times[k], pos[k][0], v[0]);
      }
      os << buf;
    }
  }
}

}  // namespace mfglab
