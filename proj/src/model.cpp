#include "mfglab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

LagrangianModel::LagrangianModel(std::string name, Fn eval, bool reversible, TonelliConstants constants)
    : name_(std::move(name)), eval_(std::move(eval)), reversible_(reversible), constants_(constants) {}

LagrangianModel LagrangianModel::quadratic(double coefficient) {
  TonelliConstants c;
  c.C1 = std::max(coefficient, 1.0 / coefficient);
  c.C2 = 1.0;
  c.C3 = 1.0;
  return LagrangianModel(
      "quadratic", [coefficient](const Point&, const Vec& v) { return 0.5 * coefficient * dot(v, v); }, true, c);
}

LagrangianModel LagrangianModel::quadratic_plus_potential(std::function<double(const Point&)> potential,
                                                          TonelliConstants constants) {
  return LagrangianModel(
      "quadratic_plus_potential",
      [V = std::move(potential)](const Point& x, const Vec& v) { return 0.5 * dot(v, v) + V(x); }, true,
      constants);
}

Coupling::Coupling(Fn eval, std::optional<SeparableParts> separable, Box K0, double delta0, double lip2)
    : eval_(std::move(eval)), separable_(std::move(separable)), K0_(K0), delta0_(delta0), lip2_(lip2) {}

Coupling Coupling::separable(SeparableParts parts, Box K0, double delta0, double lip2) {
  Fn eval = [parts](const Point& x, const GridMeasure& m) {
    double s = m.integrate(parts.f);
    return parts.f(x) * parts.G(s);
  };
  return Coupling(std::move(eval), std::move(parts), K0, delta0, lip2);
}

Coupling Coupling::general(Fn eval, Box K0, double delta0, double lip2) {
  return Coupling(std::move(eval), std::nullopt, K0, delta0, lip2);
}

Coupling Coupling::zero(Box K0) {
  return Coupling([](const Point&, const GridMeasure&) { return 0.0; }, std::nullopt, K0, 0.0, 0.0);
}

double Coupling::operator()(const Point& x, const GridMeasure& m) const { return eval_(x, m); }

std::vector<double> Coupling::field(const GridMeasure& m) const {
  const GridSpec& g = m.grid();
  std::vector<double> out(g.size());
  if (separable_) {
    std::vector<double> fv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) fv[i] = separable_->f(g.node(i));
    const double scale = separable_->G(m.integrate(fv));
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = fv[i] * scale;
    return out;
  }
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = eval_(g.node(i), m);
  return out;
}

MeanFieldLagrangian::MeanFieldLagrangian(const LagrangianModel& base, const Coupling& coupling, GridMeasure frozen)
    : base_(base), coupling_(coupling), frozen_(std::move(frozen)), field_(coupling_.field(frozen_)) {}

double MeanFieldLagrangian::at_node(std::size_t node, const Vec& v) const {
  return base_(frozen_.grid().node(node), v) + field_[node];
}

LegendreResult legendre_transform(const LagrangianModel& L, const Point& x, const Vec& p, const GridSpec& grid) {
  const double bound = L.constants().C1 * (1.0 + grid.v_max);
  if (norm(p) > bound) {
    std::ostringstream err;
    err << "|p| = " << norm(p) << " exceeds C1 (1 + v_max) = " << bound;
    throw InvalidArgument(err.str());
  }
  const std::vector<Vec> vel = grid.velocity_grid();
  const int nv = grid.v_nodes;
  auto phi = [&](const Vec& v) { return dot(p, v) - L(x, v); };

  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < vel.size(); ++k) {
    double val = phi(vel[k]);
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }
  const int j0 = grid.dim == 1 ? static_cast<int>(best) : static_cast<int>(best) / nv;
  const int j1 = grid.dim == 1 ? nv / 2 : static_cast<int>(best) % nv;
  if (j0 == 0 || j0 == nv - 1 || (grid.dim == 2 && (j1 == 0 || j1 == nv - 1))) {
    std::ostringstream err;
    err << "Legendre maximizer touches the velocity bound v_max = " << grid.v_max;
    throw MaximizerOnBoundary(err.str());
  }

  const double h = grid.dv();
  const Vec v0 = vel[best];
  Vec step{0.0, 0.0};
  if (grid.dim == 1) {
    double fm = phi({v0[0] - h, 0.0});
    double fp = phi({v0[0] + h, 0.0});
    double curv = fp - 2.0 * best_val + fm;
    if (curv < 0.0) step[0] = h * (fm - fp) / (2.0 * curv);
  } else {
    auto at = [&](double a, double b) { return phi({v0[0] + a * h, v0[1] + b * h}); };
    double g0 = (at(1, 0) - at(-1, 0)) / (2.0 * h);
    double g1 = (at(0, 1) - at(0, -1)) / (2.0 * h);
    double h00 = (at(1, 0) - 2.0 * best_val + at(-1, 0)) / (h * h);
    double h11 = (at(0, 1) - 2.0 * best_val + at(0, -1)) / (h * h);
    double h01 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
    double det = h00 * h11 - h01 * h01;
    if (h00 < 0.0 && det > 0.0) {
      step[0] = -(h11 * g0 - h01 * g1) / det;
      step[1] = -(-h01 * g0 + h00 * g1) / det;
    }
  }
  for (double& s : step) s = std::clamp(s, -h, h);

  LegendreResult out{best_val, v0};
  const Vec refined = v0 + step;
  const double refined_val = phi(refined);
  if (refined_val >= best_val) {
    out.H = refined_val;
    out.maximizer = refined;
  }
  return out;
}

namespace {

double sym_eig_min(double a, double b, double c) {
  double m = 0.5 * (a + c);
  double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return m - r;
}

double sym_eig_max(double a, double b, double c) {
  double m = 0.5 * (a + c);
  double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return m + r;
}

// Spectral norm of a 2x2 matrix.
double spectral_norm(double a, double b, double c, double d) {
  double s00 = a * a + c * c;
  double s01 = a * b + c * d;
  double s11 = b * b + d * d;
  return std::sqrt(std::max(0.0, sym_eig_max(s00, s01, s11)));
}

Vec unit(int d) { return d == 0 ? Vec{1.0, 0.0} : Vec{0.0, 1.0}; }

}  // namespace

TonelliReport check_strict_tonelli(const LagrangianModel& L, const std::vector<SampleXV>& samples, int dim) {
  if (samples.empty()) throw InvalidArgument("check_strict_tonelli needs at least one sample");
  constexpr double kRel = 1e-3;
  constexpr double kAbs = 1e-6;
  const TonelliConstants& c = L.constants();
  TonelliReport report;
  report.alpha = c.alpha();
  report.beta = c.beta();

  auto add = [&](std::size_t s, const char* cond, double margin) {
    if (margin < 0.0) {
      report.pass = false;
      report.violations.push_back({s, cond, margin});
    }
  };

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Point& x = samples[s].x;
    const Vec& v = samples[s].v;
    const double h = 1e-4 * (1.0 + norm(v));
    const double Lxv = L(x, v);

    // D_vv L
    double hv[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    for (int a = 0; a < dim; ++a) {
      Vec ea = h * unit(a);
      hv[a][a] = (L(x, v + ea) - 2.0 * Lxv + L(x, v - ea)) / (h * h);
      for (int b = a + 1; b < dim; ++b) {
        Vec eb = h * unit(b);
        double mixed = (L(x, v + ea + eb) - L(x, v + ea - eb) - L(x, v - ea + eb) + L(x, v - ea - eb)) / (4.0 * h * h);
        hv[a][b] = hv[b][a] = mixed;
      }
    }
    double eig_lo = dim == 1 ? hv[0][0] : sym_eig_min(hv[0][0], hv[0][1], hv[1][1]);
    double eig_hi = dim == 1 ? hv[0][0] : sym_eig_max(hv[0][0], hv[0][1], hv[1][1]);
    add(s, "a_lower", eig_lo - (1.0 / c.C1) * (1.0 - kRel));
    add(s, "a_upper", c.C1 * (1.0 + kRel) - eig_hi);

    // D_vx L
    double hx[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        Vec ev = h * unit(a);
        Vec ex = h * unit(b);
        hx[a][b] = (L(x + ex, v + ev) - L(x + ex, v - ev) - L(x - ex, v + ev) + L(x - ex, v - ev)) / (4.0 * h * h);
      }
    }
    double mixed_norm = dim == 1 ? std::abs(hx[0][0]) : spectral_norm(hx[0][0], hx[0][1], hx[1][0], hx[1][1]);
    add(s, "b", c.C2 * (1.0 + norm(v)) * (1.0 + kRel) + kAbs - mixed_norm);

    // Gradients at (x, v) and (x, 0).
    auto grad = [&](bool wrt_v, const Vec& at_v) {
      Vec g{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        Vec e = h * unit(a);
        g[a] = wrt_v ? (L(x, at_v + e) - L(x, at_v - e)) / (2.0 * h) : (L(x + e, at_v) - L(x - e, at_v)) / (2.0 * h);
      }
      return g;
    };
    const Vec zero{0.0, 0.0};
    double c_lhs = std::abs(L(x, zero)) + norm(grad(false, zero)) + norm(grad(true, zero));
    add(s, "c", c.C3 * (1.0 + kRel) + kAbs - c_lhs);

    const double alpha = report.alpha;
    const double beta = report.beta;
    const double vv = dot(v, v);
    add(s, "e", alpha * (1.0 + norm(v)) - norm(grad(true, v)));
    add(s, "f", alpha * (1.0 + vv) - norm(grad(false, v)));
    add(s, "g_lower", Lxv - (vv / (4.0 * beta) - alpha));
    add(s, "g_upper", 4.0 * beta * vv + alpha - Lxv);
  }
  return report;
}

std::vector<double> zero_velocity_cost(const LagrangianModel& L, const Coupling& F, const GridMeasure& m) {
  const GridSpec& g = m.grid();
  std::vector<double> out = F.field(m);
  const Vec zero{0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) out[i] += L(g.node(i), zero);
  return out;
}

double f4_gap(const Coupling& F, const LagrangianModel& L, const GridSpec& grid,
              const std::vector<GridMeasure>& probes) {
  if (!F.K0().strictly_inside(grid.box())) throw InvalidArgument("K0 must lie strictly inside the box");
  if (probes.empty()) throw InvalidArgument("F4 check needs at least one probe measure");
  double worst = std::numeric_limits<double>::infinity();
  for (const GridMeasure& m : probes) {
    std::vector<double> cost = zero_velocity_cost(L, F, m);
    double inside = std::numeric_limits<double>::infinity();
    double outside = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double& slot = F.K0().contains(grid.node(i)) ? inside : outside;
      slot = std::min(slot, cost[i]);
    }
    worst = std::min(worst, outside - inside);
  }
  return worst;
}

double check_F4_gap(const Coupling& F, const LagrangianModel& L, const GridSpec& grid,
                    const std::vector<GridMeasure>& probes) {
  if (!F.K0().strictly_inside(grid.box())) throw InvalidArgument("K0 must lie strictly inside the box");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    double gap = f4_gap(F, L, grid, {probes[k]});
    if (gap < F.delta0()) {
      std::ostringstream err;
      err << "F4 gap " << gap << " below declared delta0 " << F.delta0() << " for probe " << k;
      throw GapViolated(k, gap, err.str());
    }
    worst = std::min(worst, gap);
  }
  if (probes.empty()) throw InvalidArgument("F4 check needs at least one probe measure");
  return worst;
}

std::vector<std::size_t> k0_argmin_set(const Coupling& F, const LagrangianModel& L, const GridMeasure& m,
                                       double tol) {
  const GridSpec& g = m.grid();
  std::vector<double> cost = zero_velocity_cost(L, F, m);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (F.K0().contains(g.node(i))) best = std::min(best, cost[i]);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (F.K0().contains(g.node(i)) && cost[i] <= best + tol) out.push_back(i);
  }
  if (out.empty()) throw InvalidArgument("K0 contains no grid node");
  return out;
}

F5Result check_F5(const Coupling& F, const LagrangianModel& L, const std::vector<GridMeasure>& probes) {
  if (probes.empty()) throw InvalidArgument("F5 check needs at least one probe measure");
  std::vector<std::size_t> common = k0_argmin_set(F, L, probes.front());
  for (std::size_t k = 1; k < probes.size() && !common.empty(); ++k) {
    std::vector<std::size_t> next = k0_argmin_set(F, L, probes[k]);
    std::vector<std::size_t> both;
    std::set_intersection(common.begin(), common.end(), next.begin(), next.end(), std::back_inserter(both));
    common = std::move(both);
  }
  F5Result out;
  out.holds = !common.empty();
  if (out.holds) out.witness = common.front();
  return out;
}

std::vector<GridMeasure> probe_family(const GridSpec& grid, const Box& K0, std::size_t stride) {
  std::vector<GridMeasure> out;
  std::vector<std::size_t> k0_nodes;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (K0.contains(grid.node(i))) k0_nodes.push_back(i);
  }
  if (k0_nodes.empty()) throw InvalidArgument("K0 contains no grid node");
  stride = std::max<std::size_t>(1, stride);
  for (std::size_t k = 0; k < k0_nodes.size(); k += stride) out.push_back(GridMeasure::dirac(grid, k0_nodes[k]));
  if ((k0_nodes.size() - 1) % stride != 0) out.push_back(GridMeasure::dirac(grid, k0_nodes.back()));
  out.push_back(GridMeasure::uniform_on(grid, K0));

  // Gaussian bumps of width 0.25 * diam(K0), centred at the K0 centre and
  // at its quarter points along the first axis.
  const double width = 0.25 * (K0.hi[0] - K0.lo[0]);
  for (double frac : {0.25, 0.5, 0.75}) {
    Point c{K0.lo[0] + frac * (K0.hi[0] - K0.lo[0]), 0.5 * (K0.lo[1] + K0.hi[1])};
    std::vector<double> w(grid.size(), 0.0);
    double total = 0.0;
    for (std::size_t i : k0_nodes) {
      Vec d = grid.node(i) - c;
      w[i] = std::exp(-dot(d, d) / (width * width));
      total += w[i];
    }
    for (double& x : w) x /= total;
    out.emplace_back(grid, std::move(w));
  }
  return out;
}

}  // namespace mfglab
