#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mfglab/grid.hpp"

namespace mfglab {

// Discrete probability measure on the nodes of a GridSpec. Immutable after
// construction; the constructor enforces nonnegativity and unit mass.
class GridMeasure {
 public:
  static constexpr double kMassTolerance = 1e-12;
  static constexpr double kSupportThreshold = 1e-15;

  GridMeasure(GridSpec grid, std::vector<double> weights);

  static GridMeasure dirac(const GridSpec& grid, std::size_t node);
  static GridMeasure dirac_at(const GridSpec& grid, const Point& p) { return dirac(grid, grid.nearest_node(p)); }
  // Uniform over the grid nodes lying in `region`.
  static GridMeasure uniform_on(const GridSpec& grid, const Box& region);
  // (1 - theta) * a + theta * b.
  static GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double theta);

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t node) const { return weights_[node]; }
  std::size_t size() const { return weights_.size(); }

  double total_mass() const;
  std::vector<std::size_t> support() const;
  // Largest |x| over support nodes.
  double support_radius() const;
  Point mean() const;
  // Sum of g(node) * weight in node-index order.
  double integrate(const std::vector<double>& g) const;
  double integrate(const std::function<double(const Point&)>& g) const;

 private:
  GridSpec grid_;
  std::vector<double> weights_;
};

struct MeasurePath {
  std::vector<double> times;
  std::vector<GridMeasure> measures;

  std::size_t size() const { return times.size(); }
  void validate() const;
};

// Kantorovich-Rubinstein distance. Exact CDF formula in 1-D, exact
// transportation simplex on supports in 2-D.
double wasserstein1(const GridMeasure& m1, const GridMeasure& m2);

// d1(m1,m2) - (int w dm1 - int w dm2); nonnegative for 1-Lipschitz w.
double duality_gap_check(const GridMeasure& m1, const GridMeasure& m2, const std::vector<double>& witness);

// Optimal Kantorovich potential of the 1-D problem (w' = sign(F1 - F2)).
std::vector<double> kantorovich_potential_1d(const GridMeasure& m1, const GridMeasure& m2);

// Multilinear deposition of each node's mass onto the neighbors of map(node).
GridMeasure pushforward(const GridMeasure& m, const std::function<Point(std::size_t)>& map);

void write_measure_csv(std::ostream& os, const GridMeasure& m);
GridMeasure read_measure_csv(std::istream& is, const GridSpec& grid);

}  // namespace mfglab
