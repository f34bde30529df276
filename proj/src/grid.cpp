#include "mfglab/grid.hpp"

#include <algorithm>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

bool Box::contains(const Point& p, double tol) const {
  for (int d = 0; d < dim; ++d) {
    if (p[d] < lo[d] - tol || p[d] > hi[d] + tol) return false;
  }
  return true;
}

bool Box::strictly_inside(const Box& outer) const {
  for (int d = 0; d < dim; ++d) {
    if (!(lo[d] > outer.lo[d] && hi[d] < outer.hi[d])) return false;
  }
  return true;
}

void GridSpec::validate() const {
  std::ostringstream err;
  if (dim != 1 && dim != 2) {
    err << "grid dimension must be 1 or 2, got " << dim;
    throw InvalidArgument(err.str());
  }
  for (int d = 0; d < dim; ++d) {
    if (!(lo[d] < hi[d])) throw InvalidArgument("grid requires lo < hi in every dimension");
    if (nodes[d] < 3) throw InvalidArgument("grid requires at least 3 nodes per dimension");
  }
  if (dim == 1 && nodes[1] != 1) throw InvalidArgument("1-D grid must have nodes[1] == 1");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(v_max > 0.0)) throw InvalidArgument("v_max must be positive");
  if (v_nodes < 3 || v_nodes % 2 == 0) throw InvalidArgument("v_nodes must be odd and >= 3");
}

double GridSpec::h() const {
  double out = dx(0);
  if (dim == 2) out = std::min(out, dx(1));
  return out;
}

double GridSpec::cell_volume() const { return dim == 1 ? dx(0) : dx(0) * dx(1); }

std::array<int, 2> GridSpec::multi_index(std::size_t flat) const {
  return {static_cast<int>(flat / nodes[1]), static_cast<int>(flat % nodes[1])};
}

Point GridSpec::node(std::size_t flat) const {
  auto mi = multi_index(flat);
  Point p{lo[0] + mi[0] * dx(0), 0.0};
  if (dim == 2) p[1] = lo[1] + mi[1] * dx(1);
  return p;
}

bool GridSpec::on_boundary(std::size_t flat) const {
  auto mi = multi_index(flat);
  for (int d = 0; d < dim; ++d) {
    if (mi[d] == 0 || mi[d] == nodes[d] - 1) return true;
  }
  return false;
}

bool GridSpec::contains(const Point& p, double tol) const {
  for (int d = 0; d < dim; ++d) {
    double slack = tol * (hi[d] - lo[d]);
    if (p[d] < lo[d] - slack || p[d] > hi[d] + slack) return false;
  }
  return true;
}

namespace {

// 1-D cell location with clamping and node snapping.
void locate(double s, int n, int& i, double& frac) {
  constexpr double kSnap = 1e-10;
  s = std::clamp(s, 0.0, static_cast<double>(n - 1));
  double fl = std::floor(s);
  i = static_cast<int>(fl);
  frac = s - fl;
  if (frac < kSnap) {
    frac = 0.0;
  } else if (frac > 1.0 - kSnap) {
    i += 1;
    frac = 0.0;
  }
  if (i >= n - 1) {
    i = n - 1;
    frac = 0.0;
  }
}

}  // namespace

Stencil GridSpec::stencil(const Point& p) const {
  Stencil st;
  int i0 = 0;
  double f0 = 0.0;
  locate((p[0] - lo[0]) / dx(0), nodes[0], i0, f0);
  if (dim == 1) {
    st.node[0] = static_cast<std::size_t>(i0);
    st.weight[0] = 1.0 - f0;
    st.count = 1;
    if (f0 > 0.0) {
      st.node[1] = static_cast<std::size_t>(i0 + 1);
      st.weight[1] = f0;
      st.count = 2;
    }
    return st;
  }
  int i1 = 0;
  double f1 = 0.0;
  locate((p[1] - lo[1]) / dx(1), nodes[1], i1, f1);
  const int n0 = f0 > 0.0 ? 2 : 1;
  const int n1 = f1 > 0.0 ? 2 : 1;
  for (int a = 0; a < n0; ++a) {
    for (int b = 0; b < n1; ++b) {
      double wa = a == 0 ? 1.0 - f0 : f0;
      double wb = b == 0 ? 1.0 - f1 : f1;
      st.node[st.count] = flat_index(i0 + a, i1 + b);
      st.weight[st.count] = wa * wb;
      ++st.count;
    }
  }
  return st;
}

double GridSpec::interpolate(const std::vector<double>& values, const Point& p) const {
  Stencil st = stencil(p);
  double out = 0.0;
  for (int k = 0; k < st.count; ++k) out += st.weight[k] * values[st.node[k]];
  return out;
}

std::size_t GridSpec::nearest_node(const Point& p) const {
  auto nearest = [&](int d) {
    double s = std::round((p[d] - lo[d]) / dx(d));
    return static_cast<int>(std::clamp(s, 0.0, static_cast<double>(nodes[d] - 1)));
  };
  return flat_index(nearest(0), dim == 2 ? nearest(1) : 0);
}

std::vector<Vec> GridSpec::velocity_grid() const {
  std::vector<Vec> out;
  const double step = dv();
  const int half = v_nodes / 2;
  auto coord = [&](int j) { return j == half ? 0.0 : (j - half) * step; };
  if (dim == 1) {
    out.reserve(v_nodes);
    for (int j = 0; j < v_nodes; ++j) out.push_back({coord(j), 0.0});
  } else {
    out.reserve(static_cast<std::size_t>(v_nodes) * v_nodes);
    for (int a = 0; a < v_nodes; ++a) {
      for (int b = 0; b < v_nodes; ++b) out.push_back({coord(a), coord(b)});
    }
  }
  return out;
}

bool GridSpec::same_space(const GridSpec& other) const {
  return dim == other.dim && lo == other.lo && hi == other.hi && nodes == other.nodes;
}

GridSpec GridSpec::uniform_1d(double lo, double hi, int n, double dt, double v_max, int v_nodes) {
  GridSpec g;
  g.dim = 1;
  g.lo = {lo, 0.0};
  g.hi = {hi, 0.0};
  g.nodes = {n, 1};
  g.dt = dt;
  g.v_max = v_max;
  g.v_nodes = v_nodes;
  g.validate();
  return g;
}

GridSpec GridSpec::uniform_2d(std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n,
                              double dt, double v_max, int v_nodes) {
  GridSpec g;
  g.dim = 2;
  g.lo = lo;
  g.hi = hi;
  g.nodes = n;
  g.dt = dt;
  g.v_max = v_max;
  g.v_nodes = v_nodes;
  g.validate();
  return g;
}

TimeGrid TimeGrid::make(double T, double dt) {
  if (T < 0.0 || !std::isfinite(T)) throw InvalidArgument("horizon T must be finite and nonnegative");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  TimeGrid tg;
  tg.T = T;
  tg.steps = T == 0.0 ? 0 : std::max(1, static_cast<int>(std::lround(T / dt)));
  tg.dt = tg.steps == 0 ? dt : T / tg.steps;
  return tg;
}

}  // namespace mfglab
