#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mfglab {

// Points, velocities and covectors share one representation. In 1-D the
// second component is kept at zero so dot products and norms need no
// dimension argument.
using Point = std::array<double, 2>;
using Vec = std::array<double, 2>;

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1]}; }

// Axis-aligned closed box, used for K0 and for radius queries.
struct Box {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  bool contains(const Point& p, double tol = 1e-9) const;
  bool strictly_inside(const Box& outer) const;
};

// Multilinear interpolation stencil: up to 4 (node, weight) pairs.
struct Stencil {
  std::array<std::size_t, 4> node{};
  std::array<double, 4> weight{};
  int count = 0;
};

// Truncated space-time discretization of [0,T] x box.
//
// Nodes are stored x-major: flat = i0 * nodes[1] + i1, so ascending flat
// index is lexicographic order on coordinates.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
  std::array<int, 2> nodes{3, 1};
  double dt = 0.0;
  double v_max = 1.0;
  int v_nodes = 3;

  // Throws InvalidArgument on any broken invariant.
  void validate() const;

  double dx(int d) const { return (hi[d] - lo[d]) / (nodes[d] - 1); }
  // Smallest spacing over active dimensions.
  double h() const;
  std::size_t size() const { return static_cast<std::size_t>(nodes[0]) * nodes[1]; }
  double cell_volume() const;

  std::array<int, 2> multi_index(std::size_t flat) const;
  std::size_t flat_index(int i0, int i1) const { return static_cast<std::size_t>(i0) * nodes[1] + i1; }
  Point node(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;

  Box box() const { return Box{dim, lo, hi}; }
  bool contains(const Point& p, double tol = 1e-12) const;

  // Interpolation stencil for p, clamped to the box. Coordinates within
  // 1e-10 cells of a node snap onto it, so lattice-aligned points produce
  // a single unit weight.
  Stencil stencil(const Point& p) const;
  double interpolate(const std::vector<double>& values, const Point& p) const;

  std::size_t nearest_node(const Point& p) const;

  // Symmetric velocity lattice with v_nodes points per active dimension,
  // ordered by ascending flat velocity index.
  std::vector<Vec> velocity_grid() const;
  double dv() const { return 2.0 * v_max / (v_nodes - 1); }

  // Same spatial lattice (time and velocity parameters ignored).
  bool same_space(const GridSpec& other) const;

  static GridSpec uniform_1d(double lo, double hi, int n, double dt, double v_max, int v_nodes);
  static GridSpec uniform_2d(std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n,
                             double dt, double v_max, int v_nodes);
};

// Uniform time lattice on [0, T] with spacing as close to dt as possible.
struct TimeGrid {
  double T = 0.0;
  int steps = 0;
  double dt = 0.0;

  static TimeGrid make(double T, double dt);
  double time(int k) const { return k == steps ? T : k * dt; }
};

}  // namespace mfglab
