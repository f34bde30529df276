#include "mfglab/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

void TerminalDatum::validate(const GridSpec& grid) const {
  std::vector<double> u = sample(grid);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) throw InvalidArgument("terminal datum is not finite on the grid");
    if (u[i] < -c0 - 1e-12) throw InvalidArgument("terminal datum violates the lower bound -c0");
  }
  double lip_seen = lipschitz_estimate(grid, u, std::numeric_limits<double>::infinity());
  if (lip_seen > lip * (1.0 + 1e-9) + 1e-12) {
    std::ostringstream err;
    err << "terminal datum has discrete Lipschitz constant " << lip_seen << " above declared " << lip;
    throw InvalidArgument(err.str());
  }
}

std::vector<double> TerminalDatum::sample(const GridSpec& grid) const {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = eval(grid.node(i));
  return out;
}

SemiLagrangianStepper::SemiLagrangianStepper(const LagrangianModel& L, const GridSpec& grid, double dt)
    : grid_(grid), dt_(dt), velocities_(grid.velocity_grid()) {
  grid_.validate();
  const std::size_t nv = velocities_.size();
  lagrangian_.resize(grid_.size() * nv);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const Point x = grid_.node(i);
    for (std::size_t j = 0; j < nv; ++j) lagrangian_[i * nv + j] = L(x, velocities_[j]);
  }
}

void SemiLagrangianStepper::step(const std::vector<double>& u_next, const std::vector<double>& running,
                                 std::vector<double>& u_out, std::vector<Vec>& v_out) const {
  const std::size_t n = grid_.size();
  const std::size_t nv = velocities_.size();
  u_out.assign(n, 0.0);
  v_out.assign(n, Vec{0.0, 0.0});

  if (grid_.dim == 1) {
    const double lo = grid_.lo[0];
    const double inv_dx = 1.0 / grid_.dx(0);
    const int last = grid_.nodes[0] - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid_.node(i)[0];
      const double* lrow = &lagrangian_[i * nv];
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < nv; ++j) {
        double s = (x + dt_ * velocities_[j][0] - lo) * inv_dx;
        s = std::clamp(s, 0.0, static_cast<double>(last));
        int c = static_cast<int>(s);
        double interp;
        if (c >= last) {
          interp = u_next[last];
        } else {
          double w = s - c;
          interp = (1.0 - w) * u_next[c] + w * u_next[c + 1];
        }
        double val = dt_ * (lrow[j] + running[i]) + interp;
        if (val < best) {
          best = val;
          arg = j;
        }
      }
      u_out[i] = best;
      v_out[i] = velocities_[arg];
    }
    return;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Point x = grid_.node(i);
    const double* lrow = &lagrangian_[i * nv];
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < nv; ++j) {
      double val = dt_ * (lrow[j] + running[i]) + grid_.interpolate(u_next, x + dt_ * velocities_[j]);
      if (val < best) {
        best = val;
        arg = j;
      }
    }
    u_out[i] = best;
    v_out[i] = velocities_[arg];
  }
}

std::size_t SemiLagrangianStepper::boundary_hit(const std::vector<Vec>& v) const {
  const double bound = grid_.v_max * (1.0 - 1e-12);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i][0]) >= bound || std::abs(v[i][1]) >= bound) return i;
  }
  return v.size();
}

namespace {

ValueField solve_impl(const LagrangianModel& L, const std::function<const std::vector<double>&(int)>& running,
                      const TerminalDatum& uf, const GridSpec& grid, double T, const HjbOptions& opts) {
  grid.validate();
  const TimeGrid tg = TimeGrid::make(T, grid.dt);
  ValueField out;
  out.grid = grid;
  out.times.resize(tg.steps + 1);
  for (int k = 0; k <= tg.steps; ++k) out.times[k] = tg.time(k);
  out.values.resize(tg.steps + 1);
  out.feedback.resize(tg.steps);
  out.values[tg.steps] = uf.sample(grid);
  if (tg.steps == 0) return out;

  SemiLagrangianStepper stepper(L, grid, tg.dt);
  for (int k = tg.steps - 1; k >= 0; --k) {
    const std::vector<double>& f = running(k);
    if (f.size() != grid.size()) throw InvalidArgument("coupling term does not match grid size");
    stepper.step(out.values[k + 1], f, out.values[k], out.feedback[k]);
    if (opts.check_velocity_bound) {
      std::size_t hit = stepper.boundary_hit(out.feedback[k]);
      if (hit < grid.size()) {
        std::ostringstream err;
        err << "optimal velocity reached v_max = " << grid.v_max << " at t = " << out.times[k] << ", node " << hit;
        throw MinimizerOnBoundary(out.times[k], hit, err.str());
      }
    }
  }
  return out;
}

}  // namespace

ValueField solve_backward(const LagrangianModel& L, const std::vector<std::vector<double>>& running,
                          const TerminalDatum& uf, const GridSpec& grid, double T, const HjbOptions& opts) {
  const TimeGrid tg = TimeGrid::make(T, grid.dt);
  if (static_cast<int>(running.size()) < tg.steps) {
    throw InvalidArgument("coupling path must cover every non-terminal time");
  }
  return solve_impl(L, [&](int k) -> const std::vector<double>& { return running[k]; }, uf, grid, T, opts);
}

ValueField solve_backward_frozen(const LagrangianModel& L, const std::vector<double>& running,
                                 const TerminalDatum& uf, const GridSpec& grid, double T, const HjbOptions& opts) {
  return solve_impl(L, [&](int) -> const std::vector<double>& { return running; }, uf, grid, T, opts);
}

double hopf_lax_oracle(const TerminalDatum& uf, double t, const Point& x, double T, const GridSpec& grid) {
  if (!(t < T)) throw InvalidArgument("hopf_lax_oracle requires t < T");
  const double tau = T - t;
  auto objective = [&](const Point& y) {
    Vec d = x - y;
    return dot(d, d) / (2.0 * tau) + uf.eval(y);
  };
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double val = objective(grid.node(i));
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  // Parabolic refinement along each axis.
  Point y = grid.node(best);
  for (int d = 0; d < grid.dim; ++d) {
    const double h = grid.dx(d);
    Point ym = y;
    Point yp = y;
    ym[d] -= h;
    yp[d] += h;
    if (!grid.contains(ym) || !grid.contains(yp)) continue;
    double fm = objective(ym);
    double f0 = objective(y);
    double fp = objective(yp);
    double curv = fp - 2.0 * f0 + fm;
    if (curv <= 0.0) continue;
    Point cand = y;
    cand[d] += std::clamp(h * (fm - fp) / (2.0 * curv), -h, h);
    double val = objective(cand);
    if (val < best_val) {
      best_val = val;
      y = cand;
    }
  }
  return best_val;
}

std::vector<Vec> gradient(const GridSpec& grid, const std::vector<double>& u, const std::vector<Vec>* feedback) {
  std::vector<Vec> out(grid.size(), Vec{0.0, 0.0});
  const double still = 0.5 * grid.dv();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto mi = grid.multi_index(i);
    for (int d = 0; d < grid.dim; ++d) {
      auto neighbor = [&](int delta) {
        return d == 0 ? grid.flat_index(mi[0] + delta, mi[1]) : grid.flat_index(mi[0], mi[1] + delta);
      };
      const double h = grid.dx(d);
      const bool has_lo = mi[d] > 0;
      const bool has_hi = mi[d] < grid.nodes[d] - 1;
      const double v = feedback ? (*feedback)[i][d] : 0.0;
      double g;
      if (!has_lo) {
        g = (u[neighbor(1)] - u[i]) / h;
      } else if (!has_hi) {
        g = (u[i] - u[neighbor(-1)]) / h;
      } else if (v > still) {
        g = (u[neighbor(1)] - u[i]) / h;
      } else if (v < -still) {
        g = (u[i] - u[neighbor(-1)]) / h;
      } else {
        g = (u[neighbor(1)] - u[neighbor(-1)]) / (2.0 * h);
      }
      out[i][d] = g;
    }
  }
  return out;
}

std::vector<Vec> gradient(const ValueField& u, int k) {
  if (k < 0 || k > u.steps()) throw InvalidArgument("time index out of range");
  const std::vector<Vec>* fb = k < u.steps() ? &u.feedback[k] : nullptr;
  return gradient(u.grid, u.values[k], fb);
}

double lipschitz_estimate(const GridSpec& grid, const std::vector<double>& u, double R) {
  double out = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (norm(grid.node(i)) > R + 1e-12) continue;
    auto mi = grid.multi_index(i);
    for (int d = 0; d < grid.dim; ++d) {
      if (mi[d] + 1 >= grid.nodes[d]) continue;
      std::size_t j = d == 0 ? grid.flat_index(mi[0] + 1, mi[1]) : grid.flat_index(mi[0], mi[1] + 1);
      if (norm(grid.node(j)) > R + 1e-12) continue;
      out = std::max(out, std::abs(u[j] - u[i]) / grid.dx(d));
    }
  }
  return out;
}

double lipschitz_estimate(const ValueField& u, double R) {
  const GridSpec& g = u.grid;
  if (std::isfinite(R)) {
    for (int d = 0; d < g.dim; ++d) {
      if (g.lo[d] > -R + 1e-12 || g.hi[d] < R - 1e-12) throw InvalidArgument("ball B_R is not inside the box");
    }
  }
  double out = 0.0;
  for (const auto& row : u.values) out = std::max(out, lipschitz_estimate(g, row, R));
  return out;
}

void write_value_field_csv(std::ostream& os, const ValueField& u) {
  const GridSpec& g = u.grid;
  os << (g.dim == 1 ? "t,x,u\n" : "t,x,y,u\n");
  char buf[128];
  for (std::size_t k = 0; k < u.times.size(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      Point p = g.node(i);
      if (g.dim == 1) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", u.times[k], p[0], u.values[k][i]);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", u.times[k], p[0], p[1], u.values[k][i]);
      }
      os << buf;
    }
  }
}

}  // namespace mfglab
