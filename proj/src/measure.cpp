#include "mfglab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mfglab/errors.hpp"
#include "mfglab/network_simplex.hpp"

namespace mfglab {

namespace {

constexpr std::size_t kSupportCap = 4096;

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_same_grid(const GridMeasure& a, const GridMeasure& b) {
  if (!a.grid().same_space(b.grid())) throw InvalidArgument("measures live on different grids");
}

}  // namespace

GridMeasure::GridMeasure(GridSpec grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  if (weights_.size() != grid_.size()) throw InvalidArgument("weight vector does not match grid size");
  double total = 0.0;
  for (double& w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("measure weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream err;
    err << "measure mass " << fmt_double(total) << " differs from 1";
    throw InvalidArgument(err.str());
  }
}

GridMeasure GridMeasure::dirac(const GridSpec& grid, std::size_t node) {
  if (node >= grid.size()) throw InvalidArgument("dirac node out of range");
  std::vector<double> w(grid.size(), 0.0);
  w[node] = 1.0;
  return GridMeasure(grid, std::move(w));
}

GridMeasure GridMeasure::uniform_on(const GridSpec& grid, const Box& region) {
  std::vector<double> w(grid.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (region.contains(grid.node(i))) {
      w[i] = 1.0;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("region contains no grid node");
  for (double& x : w) x /= static_cast<double>(count);
  return GridMeasure(grid, std::move(w));
}

GridMeasure GridMeasure::mix(const GridMeasure& a, const GridMeasure& b, double theta) {
  require_same_grid(a, b);
  if (theta < 0.0 || theta > 1.0) throw InvalidArgument("mixing weight must lie in [0,1]");
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1.0 - theta) * a.weights_[i] + theta * b.weights_[i];
  return GridMeasure(a.grid_, std::move(w));
}

double GridMeasure::total_mass() const {
  double total = 0.0;
  for (double w : weights_) total += w;
  return total;
}

std::vector<std::size_t> GridMeasure::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > kSupportThreshold) out.push_back(i);
  }
  return out;
}

double GridMeasure::support_radius() const {
  double r = 0.0;
  for (std::size_t i : support()) r = std::max(r, norm(grid_.node(i)));
  return r;
}

Point GridMeasure::mean() const {
  Point out{0.0, 0.0};
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) out = out + weights_[i] * grid_.node(i);
  }
  return out;
}

double GridMeasure::integrate(const std::vector<double>& g) const {
  if (g.size() != weights_.size()) throw InvalidArgument("integrand does not match grid size");
  double out = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) out += g[i] * weights_[i];
  return out;
}

double GridMeasure::integrate(const std::function<double(const Point&)>& g) const {
  double out = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) out += g(grid_.node(i)) * weights_[i];
  }
  return out;
}

void MeasurePath::validate() const {
  if (times.size() != measures.size()) throw InvalidArgument("measure path needs one measure per time");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidArgument("measure path times must increase");
  }
}

double wasserstein1(const GridMeasure& m1, const GridMeasure& m2) {
  require_same_grid(m1, m2);
  const GridSpec& g = m1.grid();
  if (g.dim == 1) {
    // Between consecutive nodes both CDFs are constant.
    const double dx = g.dx(0);
    double c1 = 0.0;
    double c2 = 0.0;
    double out = 0.0;
    for (std::size_t i = 0; i + 1 < m1.size(); ++i) {
      c1 += m1[i];
      c2 += m2[i];
      out += std::abs(c1 - c2);
    }
    return out * dx;
  }
  if (g.dim != 2) throw UnsupportedDimension("wasserstein1 supports dimensions 1 and 2");
  // Fixed orientation keeps the simplex's rounding symmetric in (m1, m2).
  if (m2.weights() < m1.weights()) return wasserstein1(m2, m1);

  // Mass common to both measures stays in place, so only the positive and
  // negative parts of m1 - m2 are transported.
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<double> supply;
  std::vector<double> demand;
  for (std::size_t i = 0; i < m1.size(); ++i) {
    double diff = m1[i] - m2[i];
    if (diff > 0.0) {
      src.push_back(i);
      supply.push_back(diff);
    } else if (diff < 0.0) {
      dst.push_back(i);
      demand.push_back(-diff);
    }
  }
  if (src.empty() || dst.empty()) return 0.0;
  if (src.size() > kSupportCap || dst.size() > kSupportCap) {
    throw SupportTooLarge("2-D wasserstein1 support exceeds 4096 nodes");
  }
  // Rebalance the float residue of the two totals onto the largest entry.
  double s_total = 0.0;
  double d_total = 0.0;
  for (double s : supply) s_total += s;
  for (double d : demand) d_total += d;
  auto big = std::max_element(demand.begin(), demand.end());
  *big = std::max(0.0, *big + (s_total - d_total));

  std::vector<Point> ps(src.size());
  std::vector<Point> qs(dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) ps[i] = g.node(src[i]);
  for (std::size_t j = 0; j < dst.size(); ++j) qs[j] = g.node(dst[j]);
  auto cost = [&](std::size_t i, std::size_t j) { return norm(ps[i] - qs[j]); };
  return solve_transport(supply, demand, cost).cost;
}

double duality_gap_check(const GridMeasure& m1, const GridMeasure& m2, const std::vector<double>& witness) {
  require_same_grid(m1, m2);
  const GridSpec& g = m1.grid();
  if (witness.size() != g.size()) throw InvalidArgument("witness does not match grid size");
  constexpr double kLipSlack = 1e-12;
  double lip = 0.0;
  // Axis edges.
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto mi = g.multi_index(i);
    for (int d = 0; d < g.dim; ++d) {
      if (mi[d] + 1 >= g.nodes[d]) continue;
      std::size_t j = d == 0 ? g.flat_index(mi[0] + 1, mi[1]) : g.flat_index(mi[0], mi[1] + 1);
      lip = std::max(lip, std::abs(witness[j] - witness[i]) / g.dx(d));
    }
  }
  if (g.dim == 2) {
    // Axis edges do not control the Euclidean constant; check all pairs on
    // the joint support as well.
    std::vector<std::size_t> sup;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m1[i] > 0.0 || m2[i] > 0.0) sup.push_back(i);
    }
    for (std::size_t a = 0; a < sup.size(); ++a) {
      for (std::size_t b = a + 1; b < sup.size(); ++b) {
        double dist = norm(g.node(sup[a]) - g.node(sup[b]));
        lip = std::max(lip, std::abs(witness[sup[a]] - witness[sup[b]]) / dist);
      }
    }
  }
  if (lip > 1.0 + kLipSlack) {
    std::ostringstream err;
    err << "witness has discrete Lipschitz constant " << fmt_double(lip) << " > 1";
    throw NotLipschitz(lip, err.str());
  }
  return wasserstein1(m1, m2) - (m1.integrate(witness) - m2.integrate(witness));
}

std::vector<double> kantorovich_potential_1d(const GridMeasure& m1, const GridMeasure& m2) {
  require_same_grid(m1, m2);
  const GridSpec& g = m1.grid();
  if (g.dim != 1) throw UnsupportedDimension("kantorovich_potential_1d is one-dimensional");
  // int w d(m1 - m2) = sum over cells of w' * (C2 - C1) * dx, maximized by
  // w' = sign(C2 - C1).
  std::vector<double> w(g.size(), 0.0);
  double c1 = 0.0;
  double c2 = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    c1 += m1[i];
    c2 += m2[i];
    double slope = c2 > c1 ? 1.0 : (c2 < c1 ? -1.0 : 0.0);
    w[i + 1] = w[i] + slope * g.dx(0);
  }
  return w;
}

GridMeasure pushforward(const GridMeasure& m, const std::function<Point(std::size_t)>& map) {
  const GridSpec& g = m.grid();
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = m[i];
    if (w == 0.0) continue;
    const Point image = map(i);
    if (!g.contains(image)) {
      std::ostringstream err;
      err << "image of node " << i << " left the box";
      throw EscapedBox(i, err.str());
    }
    const Stencil st = g.stencil(image);
    for (int k = 0; k < st.count; ++k) out[st.node[k]] += w * st.weight[k];
  }
  double total = 0.0;
  for (double x : out) total += x;
  if (std::abs(total - 1.0) > 1e-14 && std::abs(total - 1.0) <= GridMeasure::kMassTolerance) {
    for (double& x : out) x /= total;
  }
  return GridMeasure(g, std::move(out));
}

void write_measure_csv(std::ostream& os, const GridMeasure& m) {
  const GridSpec& g = m.grid();
  os << (g.dim == 1 ? "node_index,x,weight\n" : "node_index,x,y,weight\n");
  for (std::size_t i = 0; i < m.size(); ++i) {
    Point p = g.node(i);
    os << i << ',' << fmt_double(p[0]);
    if (g.dim == 2) os << ',' << fmt_double(p[1]);
    os << ',' << fmt_double(m[i]) << '\n';
  }
}

GridMeasure read_measure_csv(std::istream& is, const GridSpec& grid) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty measure CSV");
  const std::string expected = grid.dim == 1 ? "node_index,x,weight" : "node_index,x,y,weight";
  if (line != expected) throw IoError("unexpected measure CSV header: " + line);
  std::vector<double> w(grid.size(), 0.0);
  std::vector<char> seen(grid.size(), 0);
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(grid.dim + 2)) {
      throw IoError("measure CSV row " + std::to_string(row) + " has wrong column count");
    }
    try {
      std::size_t idx = std::stoul(cells[0]);
      if (idx >= grid.size()) throw IoError("measure CSV node index out of range at row " + std::to_string(row));
      Point p = grid.node(idx);
      for (int d = 0; d < grid.dim; ++d) {
        if (std::abs(std::stod(cells[1 + d]) - p[d]) > 1e-9 * (1.0 + std::abs(p[d]))) {
          throw IoError("measure CSV coordinates disagree with grid at row " + std::to_string(row));
        }
      }
      if (seen[idx]) throw IoError("measure CSV repeats node " + std::to_string(idx) + " at row " + std::to_string(row));
      w[idx] = std::stod(cells.back());
      seen[idx] = 1;
    } catch (const std::logic_error&) {
      throw IoError("measure CSV row " + std::to_string(row) + " is not numeric");
    }
  }
  return GridMeasure(grid, std::move(w));
}

}  // namespace mfglab
