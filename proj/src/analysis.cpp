#include "mfglab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <sstream>

#include "mfglab/errors.hpp"

namespace mfglab {

RateFit rate_fit(const std::vector<double>& T, const std::vector<double>& errors) {
  if (T.size() != errors.size()) throw InvalidArgument("rate_fit needs aligned lists");
  if (T.size() < 3) throw InvalidArgument("rate_fit needs at least 3 points");
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(errors[i] > 0.0)) throw NonPositiveError("rate_fit needs strictly positive errors");
    if (!(T[i] > 0.0)) throw InvalidArgument("rate_fit needs positive abscissae");
  }
  const double n = static_cast<double>(T.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    sx += std::log(T[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double dx = std::log(T[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  if (sxx == 0.0) throw InvalidArgument("rate_fit needs distinct abscissae");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double r = std::log(errors[i]) - (fit.intercept + fit.slope * std::log(T[i]));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

double measured_attainable_radius(const std::vector<const MFGSolution*>& runs) {
  double r = 0.0;
  for (const MFGSolution* run : runs) r = std::max(r, run->diagnostics.max_support_radius);
  return r;
}

ConvergenceReport convergence_metrics(const std::vector<const MFGSolution*>& runs, const ErgodicSolution& ergodic,
                                      double R) {
  if (runs.empty()) throw InvalidArgument("convergence_metrics needs at least one run");
  const GridSpec& g = ergodic.m_bar.grid();
  ConvergenceReport rep;
  rep.R = R;
  rep.dim = g.dim;
  rep.measured_R1 = measured_attainable_radius(runs);
  if (R <= rep.measured_R1) {
    std::ostringstream err;
    err << "R = " << R << " does not exceed the measured attainable radius " << rep.measured_R1;
    throw RadiusTooSmall(err.str());
  }
  std::vector<std::size_t> ball;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (norm(g.node(i)) <= R + 1e-12) ball.push_back(i);
  }

  for (const MFGSolution* run : runs) {
    if (!run->u.grid.same_space(g)) throw InvalidArgument("runs and ergodic solution use different grids");
    const double T = run->u.times.back();
    double eu = 0.0;
    for (std::size_t k = 0; k < run->u.times.size(); ++k) {
      const double t = run->u.times[k];
      const auto& row = run->u.values[k];
      for (std::size_t i : ball) {
        eu = std::max(eu, std::abs((row[i] - ergodic.u_bar[i]) / T + ergodic.lambda * (1.0 - t / T)));
      }
    }
    const double dt = run->u.dt();
    double eF = 0.0;
    for (std::size_t k = 0; k + 1 < run->coupling_path.size(); ++k) {
      double worst = 0.0;
      for (std::size_t i : ball) worst = std::max(worst, std::abs(run->coupling_path[k][i] - ergodic.coupling_bar[i]));
      eF += dt * worst;
    }
    eF /= T;
    rep.T_list.push_back(T);
    rep.e_u.push_back(eu);
    rep.e_F.push_back(eF);
  }
  const double p = rep.exponent();
  for (std::size_t k = 0; k < rep.T_list.size(); ++k) {
    rep.C_hat_u = std::max(rep.C_hat_u, rep.e_u[k] * std::pow(rep.T_list[k], p));
    rep.C_hat_F = std::max(rep.C_hat_F, rep.e_F[k] * std::pow(rep.T_list[k], p));
  }
  auto positive = [](const std::vector<double>& e) {
    return std::all_of(e.begin(), e.end(), [](double x) { return x > 0.0; });
  };
  if (rep.T_list.size() >= 3 && positive(rep.e_u)) rep.fit_u = rate_fit(rep.T_list, rep.e_u);
  if (rep.T_list.size() >= 3 && positive(rep.e_F)) rep.fit_F = rate_fit(rep.T_list, rep.e_F);
  return rep;
}

std::vector<std::size_t> above_floor(const std::vector<double>& errors, double floor, double factor) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i] > factor * floor) out.push_back(i);
  }
  return out;
}

double interpolation_constant(int n, double D) {
  if (n < 1) throw InvalidArgument("dimension must be positive");
  if (D < 0.0) throw InvalidArgument("Lipschitz bound must be nonnegative");
  if (D == 0.0) return 0.0;
  if (n == 1) {
    // Cube half-width delta^3 = ||f||_2^2 / D^2 in the cube-averaging bound.
    return std::sqrt(3.0) * std::cbrt(D);
  }
  // Minimize G(delta) = A / (2^n delta^n) + n D^2 delta^2 at A = 1; the
  // bound is ||f||_inf <= sqrt(2 G_min) A^{1/(n+2)}.
  const double nn = static_cast<double>(n);
  const double delta = std::pow(1.0 / (std::pow(2.0, nn + 1.0) * D * D), 1.0 / (nn + 2.0));
  const double G = 1.0 / (std::pow(2.0, nn) * std::pow(delta, nn)) + nn * D * D * delta * delta;
  return std::sqrt(2.0 * G);
}

double l2_norm_interpolant(const GridSpec& grid, const std::vector<double>& f) {
  if (f.size() != grid.size()) throw InvalidArgument("grid function does not match grid size");
  double acc = 0.0;
  if (grid.dim == 1) {
    const double h = grid.dx(0);
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
      const double a = f[i];
      const double b = f[i + 1];
      acc += h * (a * a + a * b + b * b) / 3.0;
    }
    return std::sqrt(acc);
  }
  // Bilinear cells: f^2 is biquadratic, so 2x2 Gauss-Legendre is exact.
  const double g = 0.5 / std::sqrt(3.0);
  const double nodes[2] = {0.5 - g, 0.5 + g};
  const double area = grid.dx(0) * grid.dx(1);
  for (int i0 = 0; i0 + 1 < grid.nodes[0]; ++i0) {
    for (int i1 = 0; i1 + 1 < grid.nodes[1]; ++i1) {
      const double f00 = f[grid.flat_index(i0, i1)];
      const double f10 = f[grid.flat_index(i0 + 1, i1)];
      const double f01 = f[grid.flat_index(i0, i1 + 1)];
      const double f11 = f[grid.flat_index(i0 + 1, i1 + 1)];
      for (double s : nodes) {
        for (double t : nodes) {
          const double v = (1 - s) * (1 - t) * f00 + s * (1 - t) * f10 + (1 - s) * t * f01 + s * t * f11;
          acc += 0.25 * area * v * v;
        }
      }
    }
  }
  return std::sqrt(acc);
}

double discrete_lipschitz(const GridSpec& grid, const std::vector<double>& f) {
  double out = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto mi = grid.multi_index(i);
    for (int d = 0; d < grid.dim; ++d) {
      if (mi[d] + 1 >= grid.nodes[d]) continue;
      std::size_t j = d == 0 ? grid.flat_index(mi[0] + 1, mi[1]) : grid.flat_index(mi[0], mi[1] + 1);
      out = std::max(out, std::abs(f[j] - f[i]) / grid.dx(d));
    }
  }
  return out;
}

InterpolationBound interpolation_bound(const GridSpec& grid, const std::vector<double>& f, double D) {
  const double lip = discrete_lipschitz(grid, f);
  if (lip > D * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream err;
    err << "grid function has Lipschitz constant " << lip << " above the declared bound " << D;
    throw LipschitzExceeded(lip, err.str());
  }
  InterpolationBound out;
  for (double x : f) out.lhs = std::max(out.lhs, std::abs(x));
  const double n = static_cast<double>(grid.dim);
  out.rhs = interpolation_constant(grid.dim, D) * std::pow(l2_norm_interpolant(grid, f), 2.0 / (n + 2.0));
  return out;
}

MonotonicityResult monotonicity_check(const Coupling& F, const GridMeasure& m1, const GridMeasure& m2) {
  const GridSpec& g = m1.grid();
  if (!g.same_space(m2.grid())) throw InvalidArgument("measures live on different grids");
  const std::vector<double> F1 = F.field(m1);
  const std::vector<double> F2 = F.field(m2);
  MonotonicityResult out;
  std::vector<double> diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    diff[i] = F1[i] - F2[i];
    out.pairing += diff[i] * (m1[i] - m2[i]);
  }
  // Trapezoidal product rule over the box.
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto mi = g.multi_index(i);
    double w = g.cell_volume();
    for (int d = 0; d < g.dim; ++d) {
      if (mi[d] == 0 || mi[d] == g.nodes[d] - 1) w *= 0.5;
    }
    out.l2_term += w * diff[i] * diff[i];
  }
  if (out.l2_term > 0.0) out.C_F = out.pairing / out.l2_term;
  return out;
}

GridMeasure random_measure(const GridSpec& grid, const Box& box, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (box.contains(grid.node(i))) inside.push_back(i);
  }
  if (inside.empty()) throw InvalidArgument("box contains no grid node");
  count = std::clamp<std::size_t>(count, 1, inside.size());
  std::vector<double> w(grid.size(), 0.0);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<std::size_t> picked;
  std::sample(inside.begin(), inside.end(), std::back_inserter(picked), count, rng);
  double total = 0.0;
  for (std::size_t i : picked) total += (w[i] = unit(rng));
  for (std::size_t i : picked) w[i] /= total;
  return GridMeasure(grid, std::move(w));
}

MonotonicitySweep monotonicity_sweep(const Coupling& F, const GridSpec& grid, std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  MonotonicitySweep out;
  out.pairs = pairs;
  out.min_pairing = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs; ++p) {
    GridMeasure a = random_measure(grid, F.K0(), size(rng), rng);
    GridMeasure b = random_measure(grid, F.K0(), size(rng), rng);
    MonotonicityResult r = monotonicity_check(F, a, b);
    out.min_pairing = std::min(out.min_pairing, r.pairing);
    if (r.C_F && *r.C_F > 0.0) out.min_C_F = out.min_C_F ? std::min(*out.min_C_F, *r.C_F) : *r.C_F;
  }
  if (pairs == 0) out.min_pairing = 0.0;
  return out;
}

UniquenessReport critical_value_uniqueness_probe(const std::vector<ErgodicSolution>& solutions) {
  if (solutions.size() < 2) throw InvalidArgument("uniqueness probe needs at least two solutions");
  UniquenessReport out;
  const ErgodicSolution& ref = solutions.front();
  for (std::size_t s = 1; s < solutions.size(); ++s) {
    const ErgodicSolution& other = solutions[s];
    out.max_lambda_diff = std::max(out.max_lambda_diff, std::abs(other.lambda - ref.lambda));
    for (std::size_t i = 0; i < ref.coupling_bar.size(); ++i) {
      out.max_coupling_diff = std::max(out.max_coupling_diff, std::abs(other.coupling_bar[i] - ref.coupling_bar[i]));
    }
  }
  return out;
}

}  // namespace mfglab
