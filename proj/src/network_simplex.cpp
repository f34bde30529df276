#include "mfglab/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfglab/errors.hpp"

namespace mfglab {

namespace {

struct Cell {
  std::size_t i;
  std::size_t j;
  double flow;
};

// Graph nodes: rows are 0..n-1, columns are n..n+m-1.
struct Tree {
  std::vector<std::vector<std::size_t>> adjacent;  // cell indices per graph node
  std::vector<std::size_t> parent_cell;
  std::vector<std::size_t> parent_node;
  std::vector<int> depth;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void build_tree(const std::vector<Cell>& basis, std::size_t n, std::size_t m, Tree& tree,
                std::vector<double>& u, std::vector<double>& v,
                const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t total = n + m;
  tree.adjacent.assign(total, {});
  for (std::size_t c = 0; c < basis.size(); ++c) {
    tree.adjacent[basis[c].i].push_back(c);
    tree.adjacent[n + basis[c].j].push_back(c);
  }
  tree.parent_cell.assign(total, kNone);
  tree.parent_node.assign(total, kNone);
  tree.depth.assign(total, -1);
  std::vector<double> pot(total, 0.0);
  std::vector<std::size_t> queue{0};
  tree.depth[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t a = queue[head];
    for (std::size_t c : tree.adjacent[a]) {
      std::size_t b = a < n ? n + basis[c].j : basis[c].i;
      if (tree.depth[b] >= 0) continue;
      tree.depth[b] = tree.depth[a] + 1;
      tree.parent_cell[b] = c;
      tree.parent_node[b] = a;
      // u_i + v_j = c_ij
      pot[b] = cost(basis[c].i, basis[c].j) - pot[a];
      queue.push_back(b);
    }
  }
  if (queue.size() != total) throw Error("transport basis is not a spanning tree");
  u.assign(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(n));
  v.assign(pot.begin() + static_cast<std::ptrdiff_t>(n), pot.end());
}

}  // namespace

TransportSolution solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                  const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (n == 0 || m == 0) throw InvalidArgument("transport problem needs nonempty supply and demand");
  double s_total = 0.0;
  double d_total = 0.0;
  for (double s : supply) {
    if (s < 0.0) throw InvalidArgument("negative supply");
    s_total += s;
  }
  for (double d : demand) {
    if (d < 0.0) throw InvalidArgument("negative demand");
    d_total += d;
  }
  if (std::abs(s_total - d_total) > 1e-12 * std::max(1.0, s_total)) {
    throw InvalidArgument("transport problem is unbalanced");
  }

  // Northwest corner start: exactly n + m - 1 cells, a spanning tree.
  std::vector<Cell> basis;
  basis.reserve(n + m - 1);
  {
    std::vector<double> s = supply;
    std::vector<double> d = demand;
    std::size_t i = 0;
    std::size_t j = 0;
    while (true) {
      double x = std::min(s[i], d[j]);
      basis.push_back({i, j, x});
      s[i] -= x;
      d[j] -= x;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1) {
        ++j;
      } else if (j == m - 1) {
        ++i;
      } else if (s[i] <= d[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  double max_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) max_cost = std::max(max_cost, std::abs(cost(i, j)));
  }
  const double eps = 1e-12 * std::max(1.0, max_cost);

  Tree tree;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<char> in_basis(n * m, 0);
  for (const Cell& c : basis) in_basis[c.i * m + c.j] = 1;

  const std::size_t max_pivots = 50 * (n + m) * (n + m) + 1000;
  TransportSolution out;
  for (;;) {
    build_tree(basis, n, m, tree, u, v, cost);

    double best = -eps;
    std::size_t ei = kNone;
    std::size_t ej = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (in_basis[i * m + j]) continue;
        double reduced = cost(i, j) - u[i] - v[j];
        if (reduced < best) {
          best = reduced;
          ei = i;
          ej = j;
        }
      }
    }
    if (ei == kNone) break;
    if (++out.pivots > max_pivots) throw Error("transport simplex exceeded pivot limit");

    // Tree path between row ei and column ej; together with the entering
    // cell it closes the unique cycle. Cells alternate -, +, - ... starting
    // from the column side.
    std::vector<std::size_t> from_col;
    std::vector<std::size_t> from_row;
    std::size_t a = n + ej;
    std::size_t b = ei;
    while (a != b) {
      if (tree.depth[a] >= tree.depth[b]) {
        from_col.push_back(tree.parent_cell[a]);
        a = tree.parent_node[a];
      } else {
        from_row.push_back(tree.parent_cell[b]);
        b = tree.parent_node[b];
      }
    }
    std::vector<std::size_t> cycle = from_col;
    cycle.insert(cycle.end(), from_row.rbegin(), from_row.rend());

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      if (basis[cycle[k]].flow < theta) {
        theta = basis[cycle[k]].flow;
        leaving = cycle[k];
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      double& f = basis[cycle[k]].flow;
      f = (k % 2 == 0) ? std::max(0.0, f - theta) : f + theta;
    }
    in_basis[basis[leaving].i * m + basis[leaving].j] = 0;
    basis[leaving] = {ei, ej, theta};
    in_basis[ei * m + ej] = 1;
  }

  for (const Cell& c : basis) {
    out.cost += c.flow * cost(c.i, c.j);
    if (c.flow > 0.0) out.plan.push_back({c.i, c.j, c.flow});
  }
  return out;
}

}  // namespace mfglab
