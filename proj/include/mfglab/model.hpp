#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfglab/grid.hpp"
#include "mfglab/measure.hpp"

namespace mfglab {

// Declared witnesses (C1, C2, C3) of the strict Tonelli bounds, plus the
// conservative growth constants derived from them.
struct TonelliConstants {
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 1.0;

  double alpha() const { return C3 + C1; }
  double beta() const { return 0.5 * C1 + C3; }
};

class LagrangianModel {
 public:
  using Fn = std::function<double(const Point&, const Vec&)>;

  LagrangianModel(std::string name, Fn eval, bool reversible, TonelliConstants constants);

  // L(x, v) = (c/2)|v|^2.
  static LagrangianModel quadratic(double coefficient = 1.0);
  // L(x, v) = |v|^2/2 + V(x).
  static LagrangianModel quadratic_plus_potential(std::function<double(const Point&)> potential,
                                                  TonelliConstants constants);

  double operator()(const Point& x, const Vec& v) const { return eval_(x, v); }
  const std::string& name() const { return name_; }
  bool reversible() const { return reversible_; }
  const TonelliConstants& constants() const { return constants_; }

 private:
  std::string name_;
  Fn eval_;
  bool reversible_;
  TonelliConstants constants_;
};

// F(x, m) = f(x) * G(int f dm).
struct SeparableParts {
  std::function<double(const Point&)> f;
  std::function<double(double)> G;
  std::function<double(double)> Gprime;
};

class Coupling {
 public:
  using Fn = std::function<double(const Point&, const GridMeasure&)>;

  static Coupling separable(SeparableParts parts, Box K0, double delta0, double lip2);
  static Coupling general(Fn eval, Box K0, double delta0, double lip2);
  static Coupling zero(Box K0);

  double operator()(const Point& x, const GridMeasure& m) const;
  // F(node, m) at every grid node of m.
  std::vector<double> field(const GridMeasure& m) const;

  const Box& K0() const { return K0_; }
  double delta0() const { return delta0_; }
  double lip2() const { return lip2_; }
  const std::optional<SeparableParts>& separable_parts() const { return separable_; }

 private:
  Coupling(Fn eval, std::optional<SeparableParts> separable, Box K0, double delta0, double lip2);

  Fn eval_;
  std::optional<SeparableParts> separable_;
  Box K0_;
  double delta0_ = 0.0;
  double lip2_ = 0.0;
};

// L_m(x, v) = L(x, v) + F(x, m) with m frozen.
class MeanFieldLagrangian {
 public:
  MeanFieldLagrangian(const LagrangianModel& base, const Coupling& coupling, GridMeasure frozen);

  double operator()(const Point& x, const Vec& v) const { return base_(x, v) + coupling_(x, frozen_); }
  // L_m(node, v) using the precomputed coupling field.
  double at_node(std::size_t node, const Vec& v) const;
  const std::vector<double>& coupling_field() const { return field_; }
  const GridMeasure& frozen_measure() const { return frozen_; }

 private:
  LagrangianModel base_;
  Coupling coupling_;
  GridMeasure frozen_;
  std::vector<double> field_;
};

struct LegendreResult {
  double H = 0.0;
  Vec maximizer{0.0, 0.0};  // D_p H(x, p)
};

// H(x, p) = sup_v { <p, v> - L(x, v) } over the velocity lattice of `grid`,
// polished by one Newton step on a local quadratic fit.
LegendreResult legendre_transform(const LagrangianModel& L, const Point& x, const Vec& p, const GridSpec& grid);

struct SampleXV {
  Point x;
  Vec v;
};

struct TonelliViolation {
  std::size_t sample = 0;
  std::string condition;  // "a_lower", "a_upper", "b", "c", "e", "f", "g_lower", "g_upper"
  double margin = 0.0;    // negative when violated
};

struct TonelliReport {
  bool pass = true;
  std::vector<TonelliViolation> violations;
  double alpha = 0.0;
  double beta = 0.0;
};

TonelliReport check_strict_tonelli(const LagrangianModel& L, const std::vector<SampleXV>& samples, int dim);

// L(x, 0) + F(x, m) at every node.
std::vector<double> zero_velocity_cost(const LagrangianModel& L, const Coupling& F, const GridMeasure& m);

// Smallest (outside-K0 minimum - K0 minimum) of L_m(., 0) over the probes,
// without comparing against delta0.
double f4_gap(const Coupling& F, const LagrangianModel& L, const GridSpec& grid,
              const std::vector<GridMeasure>& probes);
// As f4_gap; throws GapViolated if some probe's gap is below F.delta0().
double check_F4_gap(const Coupling& F, const LagrangianModel& L, const GridSpec& grid,
                    const std::vector<GridMeasure>& probes);

struct F5Result {
  bool holds = false;
  std::optional<std::size_t> witness;
};

F5Result check_F5(const Coupling& F, const LagrangianModel& L, const std::vector<GridMeasure>& probes);

// Argmin of L_m(., 0) over K0 nodes, within `tol` of the minimum, ascending.
std::vector<std::size_t> k0_argmin_set(const Coupling& F, const LagrangianModel& L, const GridMeasure& m,
                                       double tol = 1e-10);

// Probe family: Diracs on K0 nodes (every `stride`-th), uniform on K0, and
// Gaussian bumps centred in K0.
std::vector<GridMeasure> probe_family(const GridSpec& grid, const Box& K0, std::size_t stride = 10);

}  // namespace mfglab
