#pragma once

#include <string>

#include <json.hpp>

#include "mfglab/hjb.hpp"
#include "mfglab/measure.hpp"
#include "mfglab/model.hpp"

namespace mfglab {

// A fully specified problem: data, discretization, and initial/terminal
// conditions. Built from a JSON document:
//
//   {"name": ..., "lagrangian": {"kind": "quadratic" | "quadratic_plus_potential", ...},
//    "coupling": {"kind": "separable" | "zero", "f": ..., "G": ..., "K0": ..., "delta0": ..., "lip2": ...},
//    "grid": {"dim": 1, "lo": [...], "hi": [...], "dx": ..., "dt": ..., "v_max": ..., "v_nodes": ...},
//    "terminal": {"kind": "zero" | "quadratic" | "abs"}, "m0": {"kind": "uniform_K0" | "dirac", ...}}
struct Instance {
  std::string name;
  LagrangianModel lagrangian;
  Coupling coupling;
  GridSpec grid;
  TerminalDatum terminal;
  GridMeasure m0;
  nlohmann::json definition;
};

// Throws InvalidArgument with the offending key on schema errors.
Instance parse_instance(const nlohmann::json& doc);

// Built-in instances: "RI-1" (n = 1, L = v^2/2, f = -exp(-x^2), G = 2 + tanh,
// K0 = [-1, 1], box [-4, 4]).
nlohmann::json builtin_instance_json(const std::string& name);
Instance builtin_instance(const std::string& name);

// Replace grid.dx / grid.dt in an instance document; dt follows dx unless given.
nlohmann::json with_resolution(nlohmann::json doc, double dx, double dt = 0.0);

}  // namespace mfglab
