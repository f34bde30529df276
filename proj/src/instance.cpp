#include "mfglab/instance.hpp"

#include <cmath>

#include "mfglab/errors.hpp"

namespace mfglab {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InvalidArgument(where + ": missing key '" + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw InvalidArgument(where + "." + key + " must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

std::array<double, 2> coords(const json& obj, const char* key, int dim, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw InvalidArgument(where + "." + key + " must be an array of length " + std::to_string(dim));
  }
  std::array<double, 2> out{0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    if (!v[d].is_number()) throw InvalidArgument(where + "." + key + " entries must be numbers");
    out[d] = v[d].get<double>();
  }
  return out;
}

std::string kind_of(const json& obj, const std::string& where) {
  const json& k = require(obj, "kind", where);
  if (!k.is_string()) throw InvalidArgument(where + ".kind must be a string");
  return k.get<std::string>();
}

std::function<double(const Point&)> spatial_function(const json& def, int dim, const std::string& where) {
  const std::string kind = kind_of(def, where);
  if (kind == "zero") return [](const Point&) { return 0.0; };
  Point c{0.0, 0.0};
  if (def.contains("center")) c = coords(def, "center", dim, where);
  if (kind == "neg_gaussian") {
    const double a = number_or(def, "amplitude", 1.0, where);
    const double w = number_or(def, "width", 1.0, where);
    if (!(w > 0.0)) throw InvalidArgument(where + ".width must be positive");
    return [a, w, c](const Point& x) {
      Vec d = x - c;
      return -a * std::exp(-dot(d, d) / (w * w));
    };
  }
  if (kind == "quadratic") {
    const double a = number_or(def, "coefficient", 1.0, where);
    return [a, c](const Point& x) {
      Vec d = x - c;
      return a * dot(d, d);
    };
  }
  throw InvalidArgument(where + ": unknown function kind '" + kind + "'");
}

struct ScalarFn {
  std::function<double(double)> G;
  std::function<double(double)> Gprime;
};

ScalarFn scalar_function(const json& def, const std::string& where) {
  const std::string kind = kind_of(def, where);
  if (kind == "tanh_shift") {
    const double b = number_or(def, "offset", 2.0, where);
    return {[b](double s) { return b + std::tanh(s); },
            [](double s) {
              const double c = std::cosh(s);
              return 1.0 / (c * c);
            }};
  }
  if (kind == "constant") {
    const double v = number(def, "value", where);
    return {[v](double) { return v; }, [](double) { return 0.0; }};
  }
  if (kind == "linear") {
    const double b = number_or(def, "offset", 1.0, where);
    const double a = number_or(def, "slope", 1.0, where);
    return {[a, b](double s) { return b + a * s; }, [a](double) { return a; }};
  }
  throw InvalidArgument(where + ": unknown scalar function kind '" + kind + "'");
}

GridSpec parse_grid(const json& def) {
  const std::string where = "grid";
  GridSpec g;
  g.dim = static_cast<int>(number_or(def, "dim", 1.0, where));
  if (g.dim != 1 && g.dim != 2) throw InvalidArgument("grid.dim must be 1 or 2");
  g.lo = coords(def, "lo", g.dim, where);
  g.hi = coords(def, "hi", g.dim, where);
  g.nodes = {1, 1};
  if (def.contains("nodes")) {
    const json& n = def.at("nodes");
    if (!n.is_array() || static_cast<int>(n.size()) != g.dim) throw InvalidArgument("grid.nodes has wrong length");
    for (int d = 0; d < g.dim; ++d) g.nodes[d] = n[d].get<int>();
  } else {
    const double dx = number(def, "dx", where);
    if (!(dx > 0.0)) throw InvalidArgument("grid.dx must be positive");
    for (int d = 0; d < g.dim; ++d) g.nodes[d] = static_cast<int>(std::lround((g.hi[d] - g.lo[d]) / dx)) + 1;
  }
  g.dt = def.contains("dt") ? number(def, "dt", where) : g.dx(0);
  g.v_max = number_or(def, "v_max", 3.0, where);
  if (def.contains("v_nodes")) {
    g.v_nodes = def.at("v_nodes").get<int>();
  } else {
    // Velocity spacing matches the spatial spacing by default.
    const int half = static_cast<int>(std::lround(g.v_max / g.h()));
    g.v_nodes = 2 * std::max(1, half) + 1;
  }
  g.validate();
  return g;
}

Box parse_box(const json& def, int dim, const std::string& where) {
  Box b;
  b.dim = dim;
  b.lo = coords(def, "lo", dim, where);
  b.hi = coords(def, "hi", dim, where);
  for (int d = 0; d < dim; ++d) {
    if (!(b.lo[d] <= b.hi[d])) throw InvalidArgument(where + " has lo > hi");
  }
  return b;
}

TonelliConstants parse_constants(const json& def, TonelliConstants fallback) {
  const std::string where = "lagrangian";
  fallback.C1 = number_or(def, "C1", fallback.C1, where);
  fallback.C2 = number_or(def, "C2", fallback.C2, where);
  fallback.C3 = number_or(def, "C3", fallback.C3, where);
  return fallback;
}

}  // namespace

Instance parse_instance(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("instance document must be a JSON object");
  const std::string name = doc.value("name", std::string("custom"));
  GridSpec grid = parse_grid(require(doc, "grid", "instance"));

  const json& lag = require(doc, "lagrangian", "instance");
  const std::string lkind = kind_of(lag, "lagrangian");
  std::optional<LagrangianModel> L;
  if (lkind == "quadratic") {
    LagrangianModel base = LagrangianModel::quadratic(number_or(lag, "coefficient", 1.0, "lagrangian"));
    L.emplace(base.name(), [base](const Point& x, const Vec& v) { return base(x, v); }, true,
              parse_constants(lag, base.constants()));
  } else if (lkind == "quadratic_plus_potential") {
    auto V = spatial_function(require(lag, "potential", "lagrangian"), grid.dim, "lagrangian.potential");
    L.emplace(LagrangianModel::quadratic_plus_potential(V, parse_constants(lag, TonelliConstants{})));
  } else {
    throw InvalidArgument("lagrangian: unknown kind '" + lkind + "'");
  }

  const json& cpl = require(doc, "coupling", "instance");
  const std::string ckind = kind_of(cpl, "coupling");
  const Box K0 = parse_box(require(cpl, "K0", "coupling"), grid.dim, "coupling.K0");
  std::optional<Coupling> F;
  if (ckind == "separable") {
    SeparableParts parts;
    parts.f = spatial_function(require(cpl, "f", "coupling"), grid.dim, "coupling.f");
    ScalarFn G = scalar_function(require(cpl, "G", "coupling"), "coupling.G");
    parts.G = G.G;
    parts.Gprime = G.Gprime;
    F.emplace(Coupling::separable(parts, K0, number(cpl, "delta0", "coupling"), number(cpl, "lip2", "coupling")));
  } else if (ckind == "zero") {
    F.emplace(Coupling::zero(K0));
  } else {
    throw InvalidArgument("coupling: unknown kind '" + ckind + "'");
  }

  TerminalDatum uf = TerminalDatum::zero();
  if (doc.contains("terminal")) {
    const json& t = doc.at("terminal");
    const std::string tkind = kind_of(t, "terminal");
    double reach = 0.0;
    for (int d = 0; d < grid.dim; ++d) reach += std::pow(std::max(std::abs(grid.lo[d]), std::abs(grid.hi[d])), 2);
    reach = std::sqrt(reach);
    if (tkind == "quadratic") {
      const double a = number_or(t, "coefficient", 1.0, "terminal");
      uf = {[a](const Point& x) { return 0.5 * a * dot(x, x); }, std::abs(a) * reach, a < 0 ? 0.5 * -a * reach * reach : 0.0};
    } else if (tkind == "abs") {
      uf = {[](const Point& x) { return norm(x); }, 1.0, 0.0};
    } else if (tkind != "zero") {
      throw InvalidArgument("terminal: unknown kind '" + tkind + "'");
    }
  }

  std::optional<GridMeasure> m0;
  const json m0spec = doc.value("m0", json{{"kind", "uniform_K0"}});
  const std::string mkind = kind_of(m0spec, "m0");
  if (mkind == "uniform_K0") {
    m0.emplace(GridMeasure::uniform_on(grid, K0));
  } else if (mkind == "dirac") {
    m0.emplace(GridMeasure::dirac_at(grid, coords(m0spec, "at", grid.dim, "m0")));
  } else {
    throw InvalidArgument("m0: unknown kind '" + mkind + "'");
  }

  return Instance{name, std::move(*L), std::move(*F), grid, std::move(uf), std::move(*m0), doc};
}

json builtin_instance_json(const std::string& name) {
  if (name == "RI-1") {
    return json::parse(R"({
      "name": "RI-1",
      "lagrangian": {"kind": "quadratic", "coefficient": 1.0, "C1": 1.0, "C2": 1.0, "C3": 1.0},
      "coupling": {
        "kind": "separable",
        "f": {"kind": "neg_gaussian", "amplitude": 1.0, "center": [0.0], "width": 1.0},
        "G": {"kind": "tanh_shift", "offset": 2.0},
        "K0": {"lo": [-1.0], "hi": [1.0]},
        "delta0": 0.36,
        "lip2": 0.86
      },
      "grid": {"dim": 1, "lo": [-4.0], "hi": [4.0], "dx": 0.02, "dt": 0.02, "v_max": 3.0},
      "terminal": {"kind": "zero"},
      "m0": {"kind": "uniform_K0"}
    })");
  }
  throw InvalidArgument("unknown built-in instance '" + name + "'");
}

Instance builtin_instance(const std::string& name) { return parse_instance(builtin_instance_json(name)); }

json with_resolution(json doc, double dx, double dt) {
  json& g = doc["grid"];
  g.erase("nodes");
  g.erase("v_nodes");
  g["dx"] = dx;
  g["dt"] = dt > 0.0 ? dt : dx;
  return doc;
}

}  // namespace mfglab
