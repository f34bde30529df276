#include "mfglab/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mfglab/analysis.hpp"
#include "mfglab/ergodic.hpp"
#include "mfglab/errors.hpp"
#include "mfglab/horizon.hpp"
#include "mfglab/instance.hpp"

namespace mfglab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "mfglab 1.0.0";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<double> parse_T_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw InvalidArgument("--T expects a comma-separated list of numbers, got '" + text + "'");
    }
    if (used != item.size()) throw InvalidArgument("--T expects numbers, got '" + item + "'");
    out.push_back(v);
  }
  return out;
}

json instance_document(const std::string& label) {
  if (label == "RI-1") return builtin_instance_json(label);
  return parse_json_file(label);
}

double positive_or_throw(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be positive");
  return x;
}

// Effective resolution actually used, so manifests pin it explicitly.
json params_of(const RunConfig& cfg, const GridSpec& grid) {
  json p;
  p["T"] = cfg.T;
  p["dx"] = cfg.dx ? *cfg.dx : grid.dx(0);
  p["dt"] = cfg.dt ? *cfg.dt : grid.dt;
  p["tol"] = cfg.tol ? json(*cfg.tol) : json(nullptr);
  p["R"] = cfg.R;
  p["seed"] = cfg.seed;
  p["threads"] = cfg.threads;
  return p;
}

json grid_json(const GridSpec& g) {
  json j;
  j["dim"] = g.dim;
  j["lo"] = std::vector<double>(g.lo.begin(), g.lo.begin() + g.dim);
  j["hi"] = std::vector<double>(g.hi.begin(), g.hi.begin() + g.dim);
  j["nodes"] = std::vector<int>(g.nodes.begin(), g.nodes.begin() + g.dim);
  j["dt"] = g.dt;
  j["v_max"] = g.v_max;
  j["v_nodes"] = g.v_nodes;
  return j;
}

json base_manifest(const RunConfig& cfg, const Instance& inst) {
  json m;
  m["version"] = kVersion;
  m["command"] = cfg.command;
  m["instance_label"] = cfg.instance_label;
  m["instance"] = cfg.instance;
  m["params"] = params_of(cfg, inst.grid);
  m["grid"] = grid_json(inst.grid);
  m["config_hash"] = config_hash(cfg);
  return m;
}

std::string node_columns(const GridSpec& g) { return g.dim == 1 ? "x" : "x,y"; }

std::string node_coords(const GridSpec& g, std::size_t i) {
  Point p = g.node(i);
  return g.dim == 1 ? fmt(p[0]) : fmt(p[0]) + "," + fmt(p[1]);
}

std::string grid_function_csv(const GridSpec& g, const std::vector<double>& f, const char* name) {
  std::ostringstream os;
  os << "node_index," << node_columns(g) << ',' << name << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) os << i << ',' << node_coords(g, i) << ',' << fmt(f[i]) << '\n';
  return os.str();
}

std::string measure_path_csv(const MeasurePath& path) {
  const GridSpec& g = path.measures.front().grid();
  std::ostringstream os;
  os << "t,node_index," << node_columns(g) << ",weight\n";
  for (std::size_t k = 0; k < path.size(); ++k) {
    const GridMeasure& m = path.measures[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m[i] == 0.0) continue;
      os << fmt(path.times[k]) << ',' << i << ',' << node_coords(g, i) << ',' << fmt(m[i]) << '\n';
    }
  }
  return os.str();
}

void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files, json& manifest,
                   double seconds) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  json names = json::array();
  for (const auto& [name, contents] : files) {
    write_atomic(dir / name, contents);
    names.push_back(name);
  }
  manifest["outputs"] = names;
  manifest["timings"] = {{"wall_seconds", seconds}};
  write_atomic(dir / "manifest.json", RunManifest{manifest}.serialize());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

MFGSolution horizon_run(const Instance& inst, double T, double tol) {
  HorizonParams params;
  params.tol = tol;
  return solve_finite_horizon(inst.lagrangian, inst.coupling, inst.m0, inst.terminal, T, params);
}

ErgodicSolution ergodic_run(const Instance& inst, double tol) {
  ErgodicParams params;
  params.tol = tol;
  return solve_ergodic(inst.lagrangian, inst.coupling, inst.grid, params);
}

json measured_constants(const MFGSolution& sol, double R) {
  json c;
  c["R1"] = sol.diagnostics.max_support_radius;
  c["L_R"] = lipschitz_estimate(sol.u, R);
  c["chi"] = max_excursion(sol.bundle);
  c["chi_prime"] = max_speed(sol.bundle);
  c["M_R"] = occupation_time_outside(sol.bundle, R).max;
  c["max_mass_drift"] = sol.diagnostics.max_mass_drift;
  c["v_max_used"] = sol.diagnostics.v_max_used;
  return c;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Instance inst = parse_instance(resolved_instance(cfg));
  const GridSpec& g = inst.grid;
  struct Check {
    std::string name;
    bool pass;
    double value;
    std::string detail;
  };
  std::vector<Check> checks;

  std::vector<SampleXV> samples;
  const std::size_t stride = std::max<std::size_t>(1, g.size() / 25);
  for (std::size_t i = 0; i < g.size(); i += stride) {
    for (double frac : {-0.5, 0.0, 0.5}) samples.push_back({g.node(i), Vec{frac * g.v_max, 0.0}});
  }
  TonelliReport tonelli = check_strict_tonelli(inst.lagrangian, samples, g.dim);
  checks.push_back({"strict_tonelli", tonelli.pass, static_cast<double>(tonelli.violations.size()),
                    "violations among " + std::to_string(samples.size()) + " samples"});
  checks.push_back({"reversible", inst.lagrangian.reversible(), 0.0, "L(x,v) = L(x,-v)"});

  const std::vector<GridMeasure> probes = probe_family(g, inst.coupling.K0());
  double gap = f4_gap(inst.coupling, inst.lagrangian, g, probes);
  checks.push_back({"F4_gap", gap > 0.0, gap, "minimum gap over " + std::to_string(probes.size()) + " probes"});
  F5Result f5 = check_F5(inst.coupling, inst.lagrangian, probes);
  checks.push_back({"F5_common_minimizer", f5.holds, f5.witness ? static_cast<double>(*f5.witness) : -1.0,
                    "witness node"});

  bool in_k0 = true;
  for (std::size_t i : inst.m0.support()) in_k0 = in_k0 && inst.coupling.K0().contains(g.node(i));
  checks.push_back({"m0_in_K0", in_k0, inst.m0.support_radius(), "support radius of m0"});
  bool uf_ok = true;
  std::string uf_detail = "Lipschitz and bounded below";
  try {
    inst.terminal.validate(g);
  } catch (const Error& e) {
    uf_ok = false;
    uf_detail = e.what();
  }
  checks.push_back({"terminal_datum", uf_ok, inst.terminal.lip, uf_detail});

  MonotonicitySweep sweep = monotonicity_sweep(inst.coupling, g, 100, cfg.seed);
  checks.push_back({"F3_monotonicity", sweep.min_pairing >= -1e-12, sweep.min_pairing,
                    "minimum pairing over 100 seeded pairs"});

  std::mt19937_64 rng(cfg.seed + 1);
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < 20; ++p) {
    GridMeasure a = random_measure(g, inst.coupling.K0(), 1 + p % 6, rng);
    GridMeasure b = random_measure(g, inst.coupling.K0(), 1 + (p * 5) % 7, rng);
    auto [lhs, rhs] = lambda_lipschitz_check(a, b, inst.lagrangian, inst.coupling);
    worst_excess = std::max(worst_excess, lhs - rhs);
  }
  checks.push_back({"critical_value_lipschitz", worst_excess <= 1e-12, worst_excess,
                    "max of |dlambda| - Lip2 d1 over 20 seeded pairs"});

  bool all = true;
  std::ostringstream csv;
  csv << "check,pass,value\n";
  for (const Check& c : checks) {
    all = all && c.pass;
    out << c.name << ": " << (c.pass ? "ok" : "FAIL") << " (" << c.detail << " = " << fmt(c.value) << ")\n";
    csv << c.name << ',' << (c.pass ? 1 : 0) << ',' << fmt(c.value) << '\n';
  }
  if (!cfg.out.empty()) {
    json manifest = base_manifest(cfg, inst);
    manifest["all_pass"] = all;
    write_outputs(cfg.out, {{"verify.csv", csv.str()}}, manifest, seconds_since(start));
  }
  return all ? kExitOk : kExitAssumption;
}

// ---------------------------------------------------------------- horizon

int cmd_horizon(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.T.size() > 1) throw InvalidArgument("horizon takes a single --T");
  const double T = cfg.T.empty() ? 8.0 : cfg.T.front();
  if (!(T > 0.0)) throw InvalidArgument("T must be positive");
  const Instance inst = parse_instance(resolved_instance(cfg));
  const double tol = cfg.tol.value_or(1e-4);
  MFGSolution sol = horizon_run(inst, T, tol);

  json manifest = base_manifest(cfg, inst);
  manifest["T"] = T;
  manifest["converged"] = sol.converged;
  manifest["iterations"] = sol.iterations;
  manifest["residual_history"] = sol.residual_history;
  manifest["kfp_residual"] = kfp_residual(sol, default_kfp_dictionary());
  manifest["measured"] = measured_constants(sol, cfg.R);

  std::ostringstream u_csv;
  write_value_field_csv(u_csv, sol.u);
  write_outputs(cfg.out, {{"u.csv", u_csv.str()}, {"mpath.csv", measure_path_csv(sol.m_path)}}, manifest,
                seconds_since(start));
  out << "horizon T=" << fmt(T) << " iterations=" << sol.iterations
      << " residual=" << fmt(sol.residual_history.empty() ? 0.0 : sol.residual_history.back())
      << (sol.converged ? " converged" : " NOT converged") << '\n';
  return sol.converged ? kExitOk : kExitNoConvergence;
}

// ---------------------------------------------------------------- ergodic

int cmd_ergodic(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Instance inst = parse_instance(resolved_instance(cfg));
  ErgodicSolution sol = ergodic_run(inst, cfg.tol.value_or(1e-6));
  const GridSpec& g = inst.grid;

  json manifest = base_manifest(cfg, inst);
  manifest["lambda_bar"] = sol.lambda;
  manifest["mather_node"] = sol.mather_node;
  const Point mather = g.node(sol.mather_node);
  manifest["mather_point"] = std::vector<double>(mather.begin(), mather.begin() + g.dim);
  manifest["dirac_iterations"] = sol.iterations;
  manifest["restarted_from_F5"] = sol.restarted_from_f5;
  json residuals;
  residuals["second_equation"] = sol.second_equation_residual;
  residuals["max_effective_hamiltonian"] =
      max_effective_hamiltonian(sol.u_bar, sol.m_bar, inst.lagrangian, sol.coupling_bar) - sol.lambda;
  residuals["stabilization_increment"] = sol.stabilization_increment;
  residuals["stabilization_horizon"] = sol.horizon;
  manifest["residuals"] = residuals;

  std::ostringstream m_csv;
  write_measure_csv(m_csv, sol.m_bar);
  write_outputs(cfg.out, {{"ubar.csv", grid_function_csv(g, sol.u_bar, "u")}, {"mbar.csv", m_csv.str()}}, manifest,
                seconds_since(start));
  out << "ergodic lambda_bar=" << fmt(sol.lambda) << " mather_point=" << node_coords(g, sol.mather_node) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- converge

std::vector<MFGSolution> horizon_ladder(const Instance& inst, const std::vector<double>& Ts, double tol,
                                        int threads) {
  std::vector<std::optional<MFGSolution>> slots(Ts.size());
  std::vector<std::exception_ptr> errors(Ts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < Ts.size(); i = next++) {
      try {
        slots[i] = horizon_run(inst, Ts[i], tol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(Ts.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<MFGSolution> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

json fit_json(const std::vector<double>& Ts, const std::vector<double>& e, double floor) {
  json j;
  j["floor"] = floor;
  const std::vector<std::size_t> keep = above_floor(e, floor);
  j["pre_floor_T"] = json::array();
  for (std::size_t i : keep) j["pre_floor_T"].push_back(Ts[i]);
  std::vector<double> T_fit;
  std::vector<double> e_fit;
  for (std::size_t i : keep) {
    T_fit.push_back(Ts[i]);
    e_fit.push_back(e[i]);
  }
  if (T_fit.size() >= 3) {
    RateFit fit = rate_fit(T_fit, e_fit);
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["residual"] = fit.residual;
  } else {
    j["slope"] = nullptr;
  }
  return j;
}

int cmd_converge(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> Ts = cfg.T.empty() ? std::vector<double>{2, 4, 8, 16, 32} : cfg.T;
  for (double T : Ts) {
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
  }
  const Instance inst = parse_instance(resolved_instance(cfg));
  const double tol = cfg.tol.value_or(1e-4);
  const ErgodicSolution erg = ergodic_run(inst, 1e-6);
  std::vector<MFGSolution> runs = horizon_ladder(inst, Ts, tol, cfg.threads);
  std::vector<const MFGSolution*> ptrs;
  for (const MFGSolution& r : runs) ptrs.push_back(&r);
  ConvergenceReport rep = convergence_metrics(ptrs, erg, cfg.R);

  // Scheme error floor: the largest-T errors at dx against 2 dx.
  RunConfig coarse = cfg;
  const GridSpec& g = inst.grid;
  coarse.dx = 2.0 * (cfg.dx ? *cfg.dx : g.dx(0));
  coarse.dt = 2.0 * (cfg.dt ? *cfg.dt : g.dt);
  const Instance coarse_inst = parse_instance(resolved_instance(coarse));
  const ErgodicSolution coarse_erg = ergodic_run(coarse_inst, 1e-6);
  const MFGSolution coarse_run = horizon_run(coarse_inst, Ts.back(), tol);
  ConvergenceReport coarse_rep = convergence_metrics({&coarse_run}, coarse_erg, cfg.R);
  const double floor_u = std::abs(rep.e_u.back() - coarse_rep.e_u.front());
  const double floor_F = std::abs(rep.e_F.back() - coarse_rep.e_F.front());

  const double p = rep.exponent();
  std::ostringstream report;
  report << "T,e_u,e_F,e_u_scaled,e_F_scaled\n";
  std::ostringstream dat_u;
  std::ostringstream dat_F;
  dat_u << "# T e_u e_u*T^p p=" << fmt(p) << '\n';
  dat_F << "# T e_F e_F*T^p p=" << fmt(p) << '\n';
  for (std::size_t k = 0; k < rep.T_list.size(); ++k) {
    const double s = std::pow(rep.T_list[k], p);
    report << fmt(rep.T_list[k]) << ',' << fmt(rep.e_u[k]) << ',' << fmt(rep.e_F[k]) << ',' << fmt(rep.e_u[k] * s)
           << ',' << fmt(rep.e_F[k] * s) << '\n';
    dat_u << fmt(rep.T_list[k]) << ' ' << fmt(rep.e_u[k]) << ' ' << fmt(rep.e_u[k] * s) << '\n';
    dat_F << fmt(rep.T_list[k]) << ' ' << fmt(rep.e_F[k]) << ' ' << fmt(rep.e_F[k] * s) << '\n';
  }

  json fit;
  fit["exponent"] = p;
  fit["R"] = rep.R;
  fit["measured_R1"] = rep.measured_R1;
  fit["C_hat_u"] = rep.C_hat_u;
  fit["C_hat_F"] = rep.C_hat_F;
  fit["lambda_bar"] = erg.lambda;
  fit["e_u"] = fit_json(rep.T_list, rep.e_u, floor_u);
  fit["e_F"] = fit_json(rep.T_list, rep.e_F, floor_F);
  const std::string fit_text = fit.dump(2) + "\n";

  json manifest = base_manifest(cfg, inst);
  manifest["lambda_bar"] = erg.lambda;
  json measured;
  measured["R1"] = rep.measured_R1;
  measured["C_hat_u"] = rep.C_hat_u;
  measured["C_hat_F"] = rep.C_hat_F;
  double L_R = 0.0;
  double chi = 0.0;
  double chi_prime = 0.0;
  double M_R = 0.0;
  json iterations = json::array();
  for (const MFGSolution& r : runs) {
    L_R = std::max(L_R, lipschitz_estimate(r.u, cfg.R));
    chi = std::max(chi, max_excursion(r.bundle));
    chi_prime = std::max(chi_prime, max_speed(r.bundle));
    M_R = std::max(M_R, occupation_time_outside(r.bundle, cfg.R).max);
    iterations.push_back(r.iterations);
  }
  measured["L_R"] = L_R;
  measured["chi"] = chi;
  measured["chi_prime"] = chi_prime;
  measured["M_R"] = M_R;
  MonotonicitySweep sweep = monotonicity_sweep(inst.coupling, g, 100, cfg.seed);
  measured["kappa"] = sweep.min_C_F ? json(*sweep.min_C_F) : json(nullptr);
  manifest["measured"] = measured;
  manifest["iterations"] = iterations;

  write_outputs(cfg.out,
                {{"report.csv", report.str()}, {"fit.json", fit_text}, {"e_u.dat", dat_u.str()},
                 {"e_F.dat", dat_F.str()}},
                manifest, seconds_since(start));
  out << report.str();
  bool converged = true;
  for (const MFGSolution& r : runs) converged = converged && r.converged;
  return converged ? kExitOk : kExitNoConvergence;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
  if (cfg.command == "verify") return cmd_verify(cfg, out);
  if (cfg.command == "horizon") return cmd_horizon(cfg, out);
  if (cfg.command == "ergodic") return cmd_ergodic(cfg, out);
  if (cfg.command == "converge") return cmd_converge(cfg, out);
  throw InvalidArgument("unknown command '" + cfg.command + "'");
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const NoStabilization& e) {
    err << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const CycleDetected& e) {
    err << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const json::exception& e) {
    err << "error: malformed configuration: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

RunConfig load_config(const std::string& command, const json& file_config) {
  RunConfig cfg;
  cfg.command = command;
  const json& c = file_config;
  if (!c.is_null() && !c.is_object()) throw InvalidArgument("config must be a JSON object");
  if (c.is_object()) {
    if (c.contains("command")) cfg.command = c.at("command").get<std::string>();
    if (c.contains("instance")) {
      const json& inst = c.at("instance");
      if (inst.is_string()) {
        cfg.instance_label = inst.get<std::string>();
      } else {
        cfg.instance_label = "inline";
        cfg.instance = inst;
      }
    }
    if (c.contains("T")) {
      const json& T = c.at("T");
      cfg.T = T.is_array() ? T.get<std::vector<double>>() : std::vector<double>{T.get<double>()};
    }
    if (c.contains("dx")) cfg.dx = c.at("dx").get<double>();
    if (c.contains("dt")) cfg.dt = c.at("dt").get<double>();
    if (c.contains("tol")) cfg.tol = c.at("tol").get<double>();
    if (c.contains("R")) cfg.R = c.at("R").get<double>();
    if (c.contains("out")) cfg.out = c.at("out").get<std::string>();
    if (c.contains("seed")) cfg.seed = c.at("seed").get<std::uint64_t>();
    if (c.contains("threads")) cfg.threads = c.at("threads").get<int>();
  }
  if (!command.empty()) cfg.command = command;
  return cfg;
}

json resolved_instance(const RunConfig& cfg) {
  json doc = cfg.instance;
  if (doc.is_null()) doc = instance_document(cfg.instance_label.empty() ? "RI-1" : cfg.instance_label);
  if (cfg.dx) {
    positive_or_throw(*cfg.dx, "dx");
    doc = with_resolution(doc, *cfg.dx, cfg.dt ? positive_or_throw(*cfg.dt, "dt") : 0.0);
  } else if (cfg.dt) {
    doc["grid"]["dt"] = positive_or_throw(*cfg.dt, "dt");
  }
  return doc;
}

std::string RunManifest::serialize() const { return doc.dump(2) + "\n"; }

RunManifest RunManifest::parse(const std::string& text) {
  try {
    return RunManifest{json::parse(text)};
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

RunConfig RunManifest::config() const {
  try {
    RunConfig cfg;
    cfg.command = doc.at("command").get<std::string>();
    cfg.instance_label = doc.at("instance_label").get<std::string>();
    cfg.instance = doc.at("instance");
    const json& p = doc.at("params");
    cfg.T = p.at("T").get<std::vector<double>>();
    cfg.dx = p.at("dx").get<double>();
    cfg.dt = p.at("dt").get<double>();
    if (!p.at("tol").is_null()) cfg.tol = p.at("tol").get<double>();
    cfg.R = p.at("R").get<double>();
    cfg.seed = p.at("seed").get<std::uint64_t>();
    cfg.threads = p.at("threads").get<int>();
    return cfg;
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest is missing fields: ") + e.what());
  }
}

std::string config_hash(const RunConfig& cfg) {
  json key;
  key["command"] = cfg.command;
  key["instance"] = resolved_instance(cfg);
  key["T"] = cfg.T;
  key["tol"] = cfg.tol ? json(*cfg.tol) : json(nullptr);
  key["R"] = cfg.R;
  key["seed"] = cfg.seed;
  const std::string text = key.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    os.flush();
    if (!os) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.threads < 1) throw InvalidArgument("--threads must be at least 1");
    return dispatch(cfg, out);
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

std::optional<Mismatch> reproduce_outputs(const fs::path& manifest_path, std::ostream& err, int* rerun_code) {
  const RunManifest manifest = RunManifest::parse(read_file(manifest_path));
  RunConfig cfg = manifest.config();
  const fs::path scratch =
      fs::temp_directory_path() / ("mfg-reproduce-" + manifest.doc.value("config_hash", std::string("x")) + "-" +
                                   std::to_string(std::hash<std::string>{}(manifest_path.string())));
  std::error_code ec;
  fs::remove_all(scratch, ec);
  cfg.out = scratch.string();
  std::ostringstream sink;
  const int code = run(cfg, sink, err);
  if (rerun_code) *rerun_code = code;
  std::optional<Mismatch> result;
  if (code == kExitOk || code == kExitNoConvergence) {
    const fs::path original_dir = manifest_path.parent_path();
    for (const json& name_json : manifest.doc.at("outputs")) {
      const std::string name = name_json.get<std::string>();
      std::ifstream a(original_dir / name, std::ios::binary);
      std::ifstream b(scratch / name, std::ios::binary);
      if (!a || !b) {
        result = Mismatch{name, 0};
        break;
      }
      std::string la;
      std::string lb;
      std::size_t line = 0;
      for (;;) {
        ++line;
        const bool ga = static_cast<bool>(std::getline(a, la));
        const bool gb = static_cast<bool>(std::getline(b, lb));
        if (!ga && !gb) break;
        if (ga != gb || la != lb) {
          result = Mismatch{name, line};
          break;
        }
      }
      if (result) break;
    }
  }
  fs::remove_all(scratch, ec);
  return result;
}

int reproduce(const fs::path& manifest_path, std::ostream& out, std::ostream& err) {
  try {
    int code = kExitOk;
    std::optional<Mismatch> mismatch = reproduce_outputs(manifest_path, err, &code);
    if (code != kExitOk && code != kExitNoConvergence) return code;
    if (mismatch) {
      err << "Mismatch: " << mismatch->file << " first differs at line " << mismatch->line << '\n';
      return kExitMismatch;
    }
    out << "reproduced: outputs are byte-identical\n";
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for first-order mean field games and their ergodic limit"};
  app.require_subcommand(1);

  struct Flags {
    std::string instance;
    std::string config;
    std::string T;
    std::optional<double> dx;
    std::optional<double> dt;
    std::optional<double> tol;
    std::optional<double> R;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
  } flags;

  auto add_flags = [&flags](CLI::App* sub) {
    sub->add_option("--instance", flags.instance, "Built-in instance name (RI-1) or instance JSON path");
    sub->add_option("--config", flags.config, "JSON config file; flags override its keys");
    sub->add_option("--T", flags.T, "Horizon, or comma-separated ladder for converge");
    sub->add_option("--dx", flags.dx, "Spatial step");
    sub->add_option("--dt", flags.dt, "Time step (defaults to dx)");
    sub->add_option("--tol", flags.tol, "Solver tolerance");
    sub->add_option("--R", flags.R, "Radius of the ball for error metrics");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--seed", flags.seed, "Seed for random probes");
    sub->add_option("--threads", flags.threads, "Worker threads for ladders");
  };
  const std::pair<const char*, const char*> commands[] = {
      {"verify", "Check the structural assumptions of an instance"},
      {"ergodic", "Solve the stationary ergodic system"},
      {"horizon", "Solve the finite-horizon system on [0, T]"},
      {"converge", "Run a ladder of horizons against the ergodic limit"},
  };
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help));
  std::string manifest_path;
  CLI::App* repro = app.add_subcommand("reproduce", "Re-run a manifest and compare outputs byte for byte");
  repro->add_option("manifest", manifest_path, "Path to manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitAssumption;
  }

  if (repro->parsed()) return reproduce(manifest_path, out, err);

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    json file_config;
    if (!flags.config.empty()) file_config = parse_json_file(flags.config);
    RunConfig cfg = load_config(command, file_config);
    if (!flags.instance.empty()) {
      cfg.instance_label = flags.instance;
      cfg.instance = nullptr;
    }
    if (cfg.instance_label.empty()) cfg.instance_label = "RI-1";
    if (cfg.instance.is_null()) cfg.instance = instance_document(cfg.instance_label);
    if (!flags.T.empty()) cfg.T = parse_T_list(flags.T);
    if (flags.dx) cfg.dx = flags.dx;
    if (flags.dt) cfg.dt = flags.dt;
    if (flags.tol) cfg.tol = flags.tol;
    if (flags.R) cfg.R = *flags.R;
    if (!flags.out.empty()) cfg.out = flags.out;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (cfg.out.empty() && cfg.command != "verify") cfg.out = "mfg_out";
    return run(cfg, out, err);
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace mfglab
