#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace mfglab {

struct TransportPlanEntry {
  std::size_t source;
  std::size_t sink;
  double flow;
};

struct TransportSolution {
  double cost = 0.0;
  std::vector<TransportPlanEntry> plan;
  std::size_t pivots = 0;
};

// Exact solver for the balanced transportation problem
//   min sum c(i,j) x_ij  s.t.  sum_j x_ij = supply_i, sum_i x_ij = demand_j, x >= 0
// by the primal network simplex on the bipartite spanning-tree basis.
// Supplies and demands must be nonnegative with equal totals (up to 1e-12).
TransportSolution solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                  const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace mfglab
