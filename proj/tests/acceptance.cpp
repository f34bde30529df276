// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mfglab/analysis.hpp"
#include "mfglab/cli.hpp"
#include "mfglab/ergodic.hpp"
#include "mfglab/errors.hpp"
#include "mfglab/hjb.hpp"
#include "mfglab/horizon.hpp"
#include "mfglab/instance.hpp"

using namespace mfglab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Shared state built lazily and reused across criteria.
struct Reference {
  Instance inst = builtin_instance("RI-1");
  std::optional<ErgodicSolution> ergodic;
  double ergodic_seconds = 0.0;
  std::map<double, MFGSolution> runs;
  double max_mass_drift = 0.0;
  int tracked = 0;

  const ErgodicSolution& erg() {
    if (!ergodic) {
      const auto start = Clock::now();
      ergodic = solve_ergodic(inst.lagrangian, inst.coupling, inst.grid);
      ergodic_seconds = seconds_since(start);
    }
    return *ergodic;
  }

  const MFGSolution& run(double T) {
    auto it = runs.find(T);
    if (it != runs.end()) return it->second;
    HorizonParams params;
    params.vmax_retries = 0;
    MFGSolution sol = solve_finite_horizon(inst.lagrangian, inst.coupling, inst.m0, inst.terminal, T, params);
    track(sol);
    return runs.emplace(T, std::move(sol)).first->second;
  }

  void track(const MFGSolution& sol) {
    ++tracked;
    for (const GridMeasure& m : sol.m_path.measures) {
      max_mass_drift = std::max(max_mass_drift, std::abs(m.total_mass() - 1.0));
    }
  }
};

Reference ref;

const std::vector<double> kLadder{2.0, 4.0, 8.0, 16.0, 32.0};
const std::vector<double> kExcursionLadder{5.0, 10.0, 20.0, 40.0};

std::vector<double> all_horizons() {
  std::vector<double> out = kLadder;
  out.insert(out.end(), kExcursionLadder.begin(), kExcursionLadder.end());
  std::sort(out.begin(), out.end());
  return out;
}

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return (*hi - *lo) / *hi;
}

Outcome criterion1() {
  const ErgodicSolution& e = ref.erg();
  const GridSpec& g = ref.inst.grid;
  const double lambda_oracle = 2.0 + std::tanh(-1.0);
  const double u1_oracle = 0.7007830309;
  const double slope = std::sqrt(2.0 * e.lambda);
  const double u1 = e.u_bar[g.nearest_node({1.0, 0.0})];
  const bool lambda_ok = std::abs(e.lambda - lambda_oracle) <= 1e-6;
  const bool node_ok = e.mather_node == g.nearest_node({0.0, 0.0}) && e.m_bar[e.mather_node] == 1.0;
  const bool u_ok = std::abs(u1 - u1_oracle) <= 5.0 * g.dx(0) * slope;
  const bool time_ok = ref.ergodic_seconds < 30.0;
  return {lambda_ok && node_ok && u_ok && time_ok,
          "lambda=" + num(e.lambda) + " (oracle " + num(lambda_oracle) + "), mather x=" +
              num(g.node(e.mather_node)[0]) + ", u(1)=" + num(u1) + " vs " + num(u1_oracle) + " tol " +
              num(5.0 * g.dx(0) * slope) + ", " + num(ref.ergodic_seconds) + " s"};
}

Outcome criterion2() {
  TerminalDatum uf{[](const Point& x) { return 0.5 * dot(x, x); }, 3.0, 0.0};
  std::vector<double> errors;
  bool bounded = true;
  std::string detail;
  for (double dx : {0.04, 0.02}) {
    const int n = static_cast<int>(std::lround(6.0 / dx)) + 1;
    const int half = static_cast<int>(std::lround(4.0 / dx));
    GridSpec g = GridSpec::uniform_1d(-3.0, 3.0, n, dx, 4.0, 2 * half + 1);
    ValueField u = solve_backward_frozen(LagrangianModel::quadratic(), std::vector<double>(g.size(), 0.0), uf, g, 1.0);
    double err = 0.0;
    for (std::size_t k = 0; k < u.times.size(); ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.node(i)[0];
        if (std::abs(x) > 2.0) continue;
        const double exact = k + 1 == u.times.size() ? uf.eval(g.node(i)) : hopf_lax_oracle(uf, u.times[k], g.node(i), 1.0, g);
        err = std::max(err, std::abs(u.values[k][i] - exact));
      }
    }
    bounded = bounded && err <= 2.0 * (dx + g.dt);
    errors.push_back(err);
    detail += "err(" + num(dx) + ")=" + num(err) + " ";
  }
  const double order = std::log2(errors[0] / errors[1]);
  return {bounded && order >= 0.8, detail + "order=" + num(order)};
}

Outcome criterion3() {
  const auto start = Clock::now();
  const ErgodicSolution& e = ref.erg();
  std::vector<const MFGSolution*> runs;
  for (double T : kLadder) runs.push_back(&ref.run(T));
  const ConvergenceReport rep = convergence_metrics(runs, e, 3.0);

  // Scheme floor from the same horizon at twice the step.
  Instance coarse = parse_instance(with_resolution(builtin_instance_json("RI-1"), 2.0 * ref.inst.grid.dx(0)));
  ErgodicSolution coarse_erg = solve_ergodic(coarse.lagrangian, coarse.coupling, coarse.grid);
  MFGSolution coarse_run =
      solve_finite_horizon(coarse.lagrangian, coarse.coupling, coarse.m0, coarse.terminal, kLadder.back());
  ref.track(coarse_run);
  const ConvergenceReport coarse_rep = convergence_metrics({&coarse_run}, coarse_erg, 3.0);
  const double floor_F = std::abs(rep.e_F.back() - coarse_rep.e_F.back());

  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < rep.T_list.size(); ++k) {
    decreasing = decreasing && rep.e_u[k + 1] < rep.e_u[k] && rep.e_F[k + 1] < rep.e_F[k];
  }
  const double p = rep.exponent();
  const double Cu = rep.e_u.front() * std::pow(rep.T_list.front(), p);
  const double CF = rep.e_F.front() * std::pow(rep.T_list.front(), p);
  bool bounded = true;
  for (std::size_t k = 1; k < rep.T_list.size(); ++k) {
    bounded = bounded && rep.e_u[k] <= Cu / std::pow(rep.T_list[k], p) && rep.e_F[k] <= CF / std::pow(rep.T_list[k], p);
  }
  const std::vector<std::size_t> keep = above_floor(rep.e_F, floor_F);
  std::optional<double> slope;
  if (keep.size() >= 3) {
    std::vector<double> T, eF;
    for (std::size_t k : keep) {
      T.push_back(rep.T_list[k]);
      eF.push_back(rep.e_F[k]);
    }
    slope = rate_fit(T, eF).slope;
  }
  const double secs = seconds_since(start);
  std::string detail = "e_u=[";
  for (double x : rep.e_u) detail += num(x) + " ";
  detail += "] e_F=[";
  for (double x : rep.e_F) detail += num(x) + " ";
  detail += "] floor_F=" + num(floor_F) + " fit points=" + std::to_string(keep.size()) +
            " slope_F=" + (slope ? num(*slope) : std::string("n/a")) + ", " + num(secs) + " s";
  return {decreasing && bounded && slope && *slope <= -0.28 && secs < 480.0, detail};
}

Outcome criterion4() {
  std::vector<double> occupation;
  for (double T : kExcursionLadder) occupation.push_back(occupation_time_outside(ref.run(T).bundle, 2.0).max);
  const double slope = slope_of(kExcursionLadder, occupation);
  const double top = *std::max_element(occupation.begin(), occupation.end());
  std::string detail = "occupation outside B_2 = [";
  for (double x : occupation) detail += num(x) + " ";
  return {std::abs(slope) <= 1e-3 && std::isfinite(top), detail + "] trend slope=" + num(slope)};
}

Outcome criterion5() {
  std::vector<double> lip, speed;
  double vmax_used = 0.0;
  for (double T : all_horizons()) {
    const MFGSolution& s = ref.run(T);
    lip.push_back(lipschitz_estimate(s.u, 3.0));
    speed.push_back(max_speed(s.bundle));
    vmax_used = std::max(vmax_used, s.diagnostics.v_max_used);
  }
  const double ls = spread(lip);
  const double vs = spread(speed);
  return {ls <= 0.05 && vs <= 0.05 && vmax_used == ref.inst.grid.v_max,
          "Lip(B_3) in [" + num(*std::min_element(lip.begin(), lip.end())) + ", " +
              num(*std::max_element(lip.begin(), lip.end())) + "] spread " + num(ls) + ", max speed spread " +
              num(vs) + ", v_max never raised"};
}

Outcome criterion6() {
  const ErgodicSolution& e = ref.erg();
  std::vector<double> energy, running_max;
  double lowest = 1e300;
  for (double T : all_horizons()) {
    const MFGSolution& s = ref.run(T);
    for (double x : energy_integrand(s, e.coupling_bar, e.m_bar, 3.0)) lowest = std::min(lowest, x);
    energy.push_back(energy_estimate(s, e, 3.0));
    running_max.push_back(std::max(running_max.empty() ? energy.back() : running_max.back(), energy.back()));
  }
  const double s = spread(running_max);
  return {s <= 0.10 && lowest >= -1e-12,
          "energy in [" + num(*std::min_element(energy.begin(), energy.end())) + ", " +
              num(*std::max_element(energy.begin(), energy.end())) + "], running max spread " + num(s) +
              ", min integrand " + num(lowest)};
}

Outcome criterion7() {
  const MonotonicitySweep sweep = monotonicity_sweep(ref.inst.coupling, ref.inst.grid, 100, 20240601);
  const GridSpec& g = ref.inst.grid;
  std::vector<ErgodicSolution> sols;
  for (const GridMeasure& start : {GridMeasure::dirac_at(g, {-1.0, 0.0}), GridMeasure::dirac_at(g, {1.0, 0.0}),
                                   GridMeasure::uniform_on(g, ref.inst.coupling.K0())}) {
    ErgodicParams p;
    p.start = start;
    sols.push_back(solve_ergodic(ref.inst.lagrangian, ref.inst.coupling, g, p));
  }
  const UniquenessReport u = critical_value_uniqueness_probe(sols);
  return {sweep.min_pairing >= -1e-12 && sweep.min_C_F.has_value() && u.max_lambda_diff <= 1e-9 &&
              u.max_coupling_diff <= 1e-9,
          "min pairing " + num(sweep.min_pairing) + ", min C_F " + (sweep.min_C_F ? num(*sweep.min_C_F) : "none") +
              " over 100 pairs, |d lambda|=" + num(u.max_lambda_diff) + ", |dF|=" + num(u.max_coupling_diff)};
}

Outcome criterion8() {
  const GridSpec& g = ref.inst.grid;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> knots(2, 40);
  std::uniform_real_distribution<double> height(-1.0, 1.0);
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Random knots inside the box, zero at both ends, linear in between.
    const int k = knots(rng);
    std::vector<double> kv(k + 1, 0.0);
    for (int j = 1; j < k; ++j) kv[j] = height(rng);
    std::vector<double> f(g.size());
    const double L = g.hi[0] - g.lo[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = (g.node(i)[0] - g.lo[0]) / L * k;
      const int c = std::min(static_cast<int>(s), k - 1);
      f[i] = kv[c] + (s - c) * (kv[c + 1] - kv[c]);
    }
    const InterpolationBound b = interpolation_bound(g, f, discrete_lipschitz(g, f));
    if (b.lhs > b.rhs + 1e-12) ++violations;
    worst = std::max(worst, b.lhs / b.rhs);
  }
  GridSpec unit = GridSpec::uniform_1d(0.0, 1.0, 1025, 1.0 / 1024, 1.0, 3);
  double ratio_err = 0.0;
  for (int k : {1, 2, 4, 8}) {
    std::vector<double> tent(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) tent[i] = std::max(0.0, 1.0 / k - unit.node(i)[0]);
    const InterpolationBound b = interpolation_bound(unit, tent, 1.0);
    ratio_err = std::max(ratio_err, std::abs(b.rhs / b.lhs - std::pow(3.0, 1.0 / 6.0)));
  }
  return {violations == 0 && ratio_err <= 1e-6,
          std::to_string(violations) + " violations in 1000 (max lhs/rhs " + num(worst) +
              "), tent ratio error " + num(ratio_err)};
}

Outcome criterion9() {
  const fs::path dir = fs::temp_directory_path() / "mfglab-acceptance";
  fs::remove_all(dir);
  std::vector<std::string> identical;
  bool ok = true;
  for (const char* cmd : {"horizon", "ergodic"}) {
    const fs::path out = dir / cmd;
    std::vector<std::string> args{"mfg", cmd, "--instance", "RI-1", "--T", "4", "--out", out.string()};
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    std::ostringstream sink, err;
    if (main_entry(static_cast<int>(argv.size()), argv.data(), sink, err) != kExitOk) return {false, err.str()};
    int code = 0;
    const auto mismatch = reproduce_outputs(out / "manifest.json", err, &code);
    ok = ok && code == kExitOk && !mismatch;
    identical.push_back(std::string(cmd) + (mismatch ? " differs at " + mismatch->file : " identical"));
  }
  fs::remove_all(dir);
  return {ok && ref.max_mass_drift <= 1e-12,
          "max mass drift " + num(ref.max_mass_drift) + " over " + std::to_string(ref.tracked) +
              " runs; reproduce: " + identical[0] + ", " + identical[1]};
}

Outcome criterion10() {
  std::vector<double> kfp, second;
  for (double dx : {0.04, 0.02}) {
    Instance inst = parse_instance(with_resolution(builtin_instance_json("RI-1"), dx));
    MFGSolution s = solve_finite_horizon(inst.lagrangian, inst.coupling, inst.m0, inst.terminal, 8.0);
    ref.track(s);
    kfp.push_back(kfp_residual(s, default_kfp_dictionary()));
    ErgodicSolution e = solve_ergodic(inst.lagrangian, inst.coupling, inst.grid);
    second.push_back(verify_second_equation(e.u_bar, e.m_bar, inst.lagrangian, default_space_dictionary()));
  }
  const double kfp_order = std::log2(kfp[0] / kfp[1]);
  // Residuals already at roundoff cannot exhibit an order.
  constexpr double kRoundoff = 1e-12;
  const bool second_floor = second[0] <= kRoundoff && second[1] <= kRoundoff;
  const double second_order = second_floor ? 0.0 : std::log2(second[0] / second[1]);
  const bool second_ok = second_floor || second_order >= 0.8;
  return {kfp_order >= 0.8 && second_ok,
          "kfp " + num(kfp[0]) + " -> " + num(kfp[1]) + " order " + num(kfp_order) + "; second equation " +
              num(second[0]) + " -> " + num(second[1]) +
              (second_floor ? " (at roundoff floor)" : " order " + num(second_order))};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  report(1, "ergodic ground truth", criterion1);
  report(2, "HJ scheme order", criterion2);
  report(3, "long-time convergence rates", criterion3);
  report(4, "excursion-time uniformity", criterion4);
  report(5, "uniform Lipschitz and velocity bounds", criterion5);
  report(6, "energy estimate", criterion6);
  report(7, "monotonicity and uniqueness", criterion7);
  report(8, "interpolation inequality", criterion8);
  report(9, "conservation and determinism", criterion9);
  report(10, "distributional residuals", criterion10);
  std::printf("%d of 10 criteria passed in %.1f s\n", 10 - failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
