#include "aniso/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "aniso/error.hpp"
#include "aniso/estimator.hpp"
#include "aniso/fem.hpp"
#include "aniso/fespace.hpp"
#include "aniso/scaling.hpp"
#include "json.hpp"

namespace aniso {

using json = nlohmann::json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::verify: return "verify";
    case ExperimentKind::efficiency: return "efficiency";
    case ExperimentKind::iterations: return "iterations";
    case ExperimentKind::scaling: return "scaling";
    case ExperimentKind::single_run: return "single_run";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::verify, ExperimentKind::efficiency, ExperimentKind::iterations,
                 ExperimentKind::scaling, ExperimentKind::single_run}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string to_string(IterationMesh m) {
  switch (m) {
    case IterationMesh::uniform: return "uniform";
    case IterationMesh::ratio: return "ratio";
    case IterationMesh::fixed: return "fixed";
  }
  return "?";
}

IterationMesh parse_iteration_mesh(const std::string& s) {
  for (auto m : {IterationMesh::uniform, IterationMesh::ratio, IterationMesh::fixed}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown iteration mesh '" + s + "'");
}

FieldModel ModelSpec::build(double ratio) const {
  const Anisotropy a = Anisotropy::from_ratio(ratio);
  FieldModel m = FieldModel::constant(a);
  switch (kind) {
    case FieldKind::constant: break;
    case FieldKind::single_null:
      m = FieldModel::single_null(a, wire1.value_or(Point{0.5, 0.75}),
                                  wire2.value_or(Point{0.5, -0.25}));
      break;
    case FieldKind::double_null: m = FieldModel::double_null(a, center.value_or(Point{0.5, 0.5})); break;
    case FieldKind::island:
      m = FieldModel::island(a, center.value_or(Point{0.5, 0.5}), island_length.value_or(1.0));
      break;
  }
  m.set_direction_mode(direction);
  m.set_null_tolerance(null_tolerance);
  return m;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
}

template <class T>
T read(const json& obj, const std::string& where, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!it->is_number()) throw ConfigError("");
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() && !(it->is_number_float() &&
                                          it->get<double>() == std::floor(it->get<double>()))) {
          throw ConfigError("");
        }
        return static_cast<T>(it->get<double>());
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    }
    return it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
std::vector<T> read_list(const json& obj, const std::string& where, const char* key,
                         std::vector<T> fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    json wrap{{"v", (*it)[i]}};
    out.push_back(read<T>(wrap, where + "." + key + "[" + std::to_string(i) + "]", "v", T{}));
  }
  return out;
}

std::optional<Point> read_point(const json& obj, const std::string& where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw ConfigError(where + "." + key + ": expected [x, y]");
  }
  return Point{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  std::optional<ExperimentKind> expected) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"experiment", "model", "ratios", "max_ratio", "orders", "strategies", "budget",
              "initial_levels", "mesh_sizes", "sweep", "reference", "solver", "iterations",
              "scaling", "keep_meshes", "output", "seed", "threads", "deterministic"});
  ExperimentConfig c;
  if (j.contains("experiment")) {
    c.kind = rethrow_as_config("config.experiment", [&] {
      return parse_experiment_kind(read<std::string>(j, "config", "experiment", ""));
    });
    if (expected && *expected != c.kind) {
      throw ConfigError("config.experiment: '" + to_string(c.kind) + "' does not match '" +
                        to_string(*expected) + "'");
    }
  } else if (expected) {
    c.kind = *expected;
  } else {
    throw ConfigError("config: missing key 'experiment'");
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, "model",
               {"kind", "wire1", "wire2", "center", "island_length", "direction",
                "null_tolerance"});
    c.model.kind = rethrow_as_config("model.kind", [&] {
      return parse_field_kind(read<std::string>(m, "model", "kind", "constant"));
    });
    c.model.wire1 = read_point(m, "model", "wire1");
    c.model.wire2 = read_point(m, "model", "wire2");
    c.model.center = read_point(m, "model", "center");
    if (m.contains("island_length")) {
      c.model.island_length = read<double>(m, "model", "island_length", 1.0);
    }
    const auto dir = read<std::string>(m, "model", "direction", "poloidal");
    if (dir == "poloidal") {
      c.model.direction = DirectionMode::poloidal;
    } else if (dir == "total") {
      c.model.direction = DirectionMode::total;
    } else {
      throw ConfigError("model.direction: expected 'poloidal' or 'total'");
    }
    c.model.null_tolerance =
        read<double>(m, "model", "null_tolerance", FieldModel::kDefaultNullTolerance);
  }

  c.ratios = read_list<double>(j, "config", "ratios", c.ratios);
  c.max_ratio = read<double>(j, "config", "max_ratio", c.max_ratio);
  c.orders = read_list<int>(j, "config", "orders", c.orders);
  if (j.contains("strategies")) {
    const json& s = j["strategies"];
    if (!s.is_array()) throw ConfigError("config.strategies: expected an array");
    c.strategies.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string where = "strategies[" + std::to_string(i) + "]";
      Strategy st;
      if (s[i].is_string()) {
        st.kind = rethrow_as_config(where, [&] { return parse_strategy(s[i].get<std::string>()); });
      } else {
        check_keys(s[i], where, {"kind", "threshold"});
        st.kind = rethrow_as_config(
            where, [&] { return parse_strategy(read<std::string>(s[i], where, "kind", "")); });
        st.threshold = read<double>(s[i], where, "threshold", st.threshold);
      }
      c.strategies.push_back(st);
    }
  }
  if (j.contains("budget")) {
    const json& b = j["budget"];
    check_keys(b, "budget", {"max_dofs", "max_iterations", "halt_size"});
    c.budget.max_dofs = read<std::size_t>(b, "budget", "max_dofs", c.budget.max_dofs);
    c.budget.max_iterations = read<int>(b, "budget", "max_iterations", c.budget.max_iterations);
    c.budget.halt_size = read<double>(b, "budget", "halt_size", c.budget.halt_size);
  }
  c.initial_levels = read<int>(j, "config", "initial_levels", c.initial_levels);
  c.mesh_sizes = read_list<int>(j, "config", "mesh_sizes", c.mesh_sizes);
  c.sweep = read_list<int>(j, "config", "sweep", c.sweep);
  if (j.contains("reference")) {
    const json& r = j["reference"];
    check_keys(r, "reference", {"levels"});
    if (r.contains("levels") && r["levels"].is_number()) {
      c.reference_levels = {read<int>(r, "reference", "levels", 0)};
    } else {
      c.reference_levels = read_list<int>(r, "reference", "levels", {});
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver", {"preconditioner", "rtol", "max_iterations"});
    c.solver.preconditioner = rethrow_as_config("solver.preconditioner", [&] {
      return parse_preconditioner(read<std::string>(s, "solver", "preconditioner", "ilu0"));
    });
    c.solver.rtol = read<double>(s, "solver", "rtol", c.solver.rtol);
    c.solver.max_iterations = read<int>(s, "solver", "max_iterations", c.solver.max_iterations);
  }
  if (j.contains("iterations")) {
    const json& s = j["iterations"];
    check_keys(s, "iterations", {"meshes", "preconditioners", "ratio_mx", "fixed_size"});
    if (s.contains("meshes")) {
      c.iterations.meshes.clear();
      for (const auto& name : read_list<std::string>(s, "iterations", "meshes", {})) {
        c.iterations.meshes.push_back(
            rethrow_as_config("iterations.meshes", [&] { return parse_iteration_mesh(name); }));
      }
    }
    if (s.contains("preconditioners")) {
      c.iterations.preconditioners.clear();
      for (const auto& name : read_list<std::string>(s, "iterations", "preconditioners", {})) {
        c.iterations.preconditioners.push_back(rethrow_as_config(
            "iterations.preconditioners", [&] { return parse_preconditioner(name); }));
      }
    }
    c.iterations.ratio_mx = read<int>(s, "iterations", "ratio_mx", c.iterations.ratio_mx);
    c.iterations.fixed_size = read<int>(s, "iterations", "fixed_size", c.iterations.fixed_size);
  }
  if (j.contains("scaling")) {
    const json& s = j["scaling"];
    check_keys(s, "scaling", {"max_levels", "dimensions", "traces", "window"});
    c.scaling.max_levels = read<int>(s, "scaling", "max_levels", c.scaling.max_levels);
    c.scaling.dimensions = read_list<int>(s, "scaling", "dimensions", c.scaling.dimensions);
    c.scaling.traces = read<std::string>(s, "scaling", "traces", c.scaling.traces);
    c.scaling.window = read<int>(s, "scaling", "window", c.scaling.window);
  }
  c.keep_meshes = read<bool>(j, "config", "keep_meshes", c.keep_meshes);
  c.output = read<std::string>(j, "config", "output", c.output);
  c.seed = read<std::uint64_t>(j, "config", "seed", c.seed);
  c.threads = read<int>(j, "config", "threads", c.threads);
  c.deterministic = read<bool>(j, "config", "deterministic", c.deterministic);
  c.source = j.dump();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        std::optional<ExperimentKind> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), expected);
}

void ExperimentConfig::validate() const {
  if (ratios.empty()) throw ConfigError("ratios: must be non-empty");
  for (double r : ratios) {
    if (!(r >= 1.0)) throw ConfigError("ratios: each ratio must be >= 1");
    if (r > max_ratio) {
      throw ConfigError("ratios: " + std::to_string(r) + " exceeds max_ratio " +
                        std::to_string(max_ratio));
    }
  }
  if (orders.empty()) throw ConfigError("orders: must be non-empty");
  for (int p : orders) {
    if (p < 1 || p > 3) throw ConfigError("orders: p must be 1, 2 or 3");
  }
  if (strategies.empty()) throw ConfigError("strategies: must be non-empty");
  for (const auto& s : strategies) s.validate();
  if (budget.max_dofs < 1 || budget.max_iterations < 1 || budget.halt_size < 0.0) {
    throw ConfigError("budget: need max_dofs >= 1, max_iterations >= 1, halt_size >= 0");
  }
  if (initial_levels < 0 || initial_levels > 20) throw ConfigError("initial_levels: out of range");
  if (kind == ExperimentKind::verify) {
    if (mesh_sizes.empty()) throw ConfigError("mesh_sizes: must be non-empty");
    if (model.kind != FieldKind::constant) throw ConfigError("verify needs the constant model");
  }
  for (int m : mesh_sizes) {
    if (m < 1) throw ConfigError("mesh_sizes: entries must be >= 1");
  }
  for (int m : sweep) {
    if (m < 1) throw ConfigError("sweep: entries must be >= 1");
  }
  if (!reference_levels.empty() && reference_levels.size() != 1 &&
      reference_levels.size() != ratios.size()) {
    throw ConfigError("reference.levels: give one level or one per ratio");
  }
  for (int l : reference_levels) {
    if (l < 1 || l > 12) throw ConfigError("reference.levels: entries must be in 1..12");
  }
  if (!(solver.rtol > 0.0) || solver.max_iterations < 1) {
    throw ConfigError("solver: need rtol > 0 and max_iterations >= 1");
  }
  if (kind == ExperimentKind::iterations) {
    if (iterations.meshes.empty() || iterations.preconditioners.empty()) {
      throw ConfigError("iterations: meshes and preconditioners must be non-empty");
    }
    const bool aligned = std::find(iterations.meshes.begin(), iterations.meshes.end(),
                                   IterationMesh::ratio) != iterations.meshes.end();
    if (aligned && model.kind != FieldKind::constant) {
      throw ConfigError("iterations: ratio meshes need the constant model");
    }
  }
  if (iterations.ratio_mx < 1 || iterations.fixed_size < 1) {
    throw ConfigError("iterations: ratio_mx and fixed_size must be >= 1");
  }
  if (scaling.max_levels < 1 || scaling.max_levels > 40) {
    throw ConfigError("scaling.max_levels: must be in 1..40");
  }
  if (kind == ExperimentKind::scaling && scaling.dimensions.empty()) {
    throw ConfigError("scaling.dimensions: must be non-empty");
  }
  for (int d : scaling.dimensions) {
    if (d != 2 && d != 3) throw ConfigError("scaling.dimensions: entries must be 2 or 3");
  }
  if (scaling.window < 2) throw ConfigError("scaling.window: must be >= 2");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
  if (output.empty()) throw ConfigError("output: must be non-empty");
}

std::optional<int> ExperimentConfig::reference_level(std::size_t ratio_index) const {
  if (reference_levels.empty()) return std::nullopt;
  return reference_levels.size() == 1 ? reference_levels[0] : reference_levels.at(ratio_index);
}

std::vector<std::string> csv_header(const ExperimentConfig& cfg) {
  char cap[32];
  std::snprintf(cap, sizeof cap, "%g", cfg.max_ratio);
  std::string refs = "none";
  if (!cfg.reference_levels.empty()) {
    refs.clear();
    for (std::size_t i = 0; i < cfg.reference_levels.size(); ++i) {
      const int n = 1 << cfg.reference_levels[i];
      refs += (i ? ", " : "") + std::to_string(n) + "^2";
    }
  }
  return {
      std::string("aniso_amr ") + kVersion + ", csv schema " + std::to_string(kCsvSchemaVersion),
      "experiment: " + to_string(cfg.kind),
      "config: " + (cfg.source.empty() ? std::string("{}") : cfg.source),
      "substitution: conjugate gradients with Jacobi or ILU(0) preconditioning in place of "
      "algebraic multigrid",
      std::string("substitution: anisotropy ratio capped at ") + cap,
      "substitution: reference meshes " + refs,
  };
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

SolverOptions solver_for(const ExperimentConfig& cfg) {
  SolverOptions so = cfg.solver;
  so.threads = cfg.threads;
  return so;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

Table run_verify(const ExperimentConfig& cfg) {
  if (cfg.model.kind != FieldKind::constant) throw ConfigError("verify needs the constant model");
  std::vector<std::string> cols{"ratio", "p", "M", "h_y", "dofs", "layer_norm", "order",
                                "cg_iterations"};
  if (!cfg.deterministic) cols.push_back("seconds");
  Table t(cols);
  AssemblyOptions ao;
  ao.threads = cfg.threads;
  for (double r : cfg.ratios) {
    const FieldModel model = cfg.model.build(r);
    for (int p : cfg.orders) {
      double prev_err = nan();
      int prev_m = 0;
      for (int m : cfg.mesh_sizes) {
        const TensorMesh mesh = uniform_tensor(m, m, model.domain());
        const FESpace space(mesh.leaf_grid(), p, model.boundary());
        SolveReport rep;
        const auto u = solve_system(space, assemble(space, model, ao), solver_for(cfg), &rep);
        const double err = layer_norm(space, u, model);
        const double order = prev_m > 0 ? std::log(prev_err / err) /
                                              std::log(static_cast<double>(m) / prev_m)
                                        : nan();
        std::vector<Table::Value> row{r,
                                      std::int64_t{p},
                                      std::int64_t{m},
                                      model.domain().hy / m,
                                      static_cast<std::int64_t>(space.num_dofs()),
                                      err,
                                      order,
                                      std::int64_t{rep.iterations}};
        if (!cfg.deterministic) row.emplace_back(rep.seconds);
        t.add(std::move(row));
        prev_err = err;
        prev_m = m;
      }
    }
  }
  return t;
}

Table trace_table(std::span<const TraceRun> runs, const std::string& model, bool deterministic) {
  std::vector<std::string> cols{"model",       "ratio",      "p",          "strategy",
                                "iteration",   "dofs",       "cells",      "h_min",
                                "l1_error",    "flux_error", "layer_norm", "eta_sum",
                                "cg_iterations", "relative_residual", "lambda_min",
                                "lambda_max",  "halt"};
  if (!deterministic) cols.push_back("seconds");
  Table t(cols);
  for (const auto& run : runs) {
    const auto& recs = run.trace.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      std::vector<Table::Value> row{model,
                                    run.ratio,
                                    std::int64_t{run.p},
                                    to_string(run.strategy),
                                    std::int64_t{r.iteration},
                                    static_cast<std::int64_t>(r.dofs),
                                    static_cast<std::int64_t>(r.cells),
                                    r.h_min,
                                    r.l1_error,
                                    r.flux_error,
                                    r.layer_norm,
                                    r.eta_sum,
                                    std::int64_t{r.solve.iterations},
                                    r.solve.relative_residual,
                                    r.solve.lambda_min,
                                    r.solve.lambda_max,
                                    i + 1 == recs.size() ? run.trace.halt_reason : std::string()};
      if (!deterministic) row.emplace_back(r.solve.seconds);
      t.add(std::move(row));
    }
  }
  return t;
}

EfficiencyResult run_efficiency(const ExperimentConfig& cfg) {
  EfficiencyResult out;
  for (std::size_t ri = 0; ri < cfg.ratios.size(); ++ri) {
    const double r = cfg.ratios[ri];
    const FieldModel model = cfg.model.build(r);
    for (int p : cfg.orders) {
      std::optional<Reference> ref;
      if (const auto level = cfg.reference_level(ri)) {
        ref.emplace(solve_reference(model, *level, p, solver_for(cfg), cfg.threads));
      }
      for (const Strategy& s : cfg.strategies) {
        DriveOptions o;
        o.p = p;
        o.strategy = s;
        o.budget = cfg.budget;
        o.initial_levels = cfg.initial_levels;
        o.sweep = cfg.sweep;
        o.solver = cfg.solver;
        o.threads = cfg.threads;
        o.reference = ref ? &*ref : nullptr;
        o.keep_meshes = cfg.keep_meshes;
        TraceRun run{r, p, s.kind, {}};
        try {
          run.trace = drive(model, o);
        } catch (const DriveError& e) {
          run.trace = e.trace();
          run.trace.halt_reason = std::string("solver failure: ") + e.what();
        }
        out.runs.push_back(std::move(run));
      }
    }
  }
  out.table = trace_table(out.runs, to_string(cfg.model.kind), cfg.deterministic);
  return out;
}

namespace {

TensorMesh iteration_mesh(IterationMesh kind, const FieldModel& model, const IterationStudy& s) {
  const Rect d = model.domain();
  const double w = model.anisotropy().width();
  switch (kind) {
    case IterationMesh::uniform: {
      const int m = std::max(1, static_cast<int>(std::ceil(d.hy / w - 1e-9)));
      return uniform_tensor(m, m, d);
    }
    case IterationMesh::ratio: {
      const double hs = aligned_layer_size(model.anisotropy(), s.ratio_mx);
      return uniform_tensor(s.ratio_mx, std::max(1, static_cast<int>(std::lround(d.hy / hs))), d);
    }
    case IterationMesh::fixed: return uniform_tensor(s.fixed_size, s.fixed_size, d);
  }
  throw Error("unreachable");
}

}  // namespace

Table run_iterations(const ExperimentConfig& cfg) {
  std::vector<std::string> cols{"ratio",      "p",          "mesh",       "mx",
                                "my",         "preconditioner", "dofs",   "iterations",
                                "converged",  "relative_residual", "probe_iterations",
                                "lambda_min", "lambda_max", "condition", "status"};
  if (!cfg.deterministic) cols.push_back("seconds");
  Table t(cols);
  AssemblyOptions ao;
  ao.threads = cfg.threads;
  for (double r : cfg.ratios) {
    const FieldModel model = cfg.model.build(r);
    for (int p : cfg.orders) {
      for (IterationMesh mk : cfg.iterations.meshes) {
        const TensorMesh mesh = iteration_mesh(mk, model, cfg.iterations);
        const FESpace space(mesh.leaf_grid(), p, model.boundary());
        const SystemPair sys = assemble(space, model, ao);
        const std::vector<double> b = sys.rhs();
        // Fixed pseudo-random probe right-hand side for the Lanczos extremes.
        std::vector<double> probe(b.size());
        std::mt19937_64 gen(0x5eedULL);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (double& v : probe) v = unit(gen);
        for (PreconditionerKind pk : cfg.iterations.preconditioners) {
          SolverOptions so = solver_for(cfg);
          so.preconditioner = pk;
          so.throw_on_failure = false;
          SolveReport rep, probe_rep;
          std::string status = "ok";
          try {
            const auto m = make_preconditioner(pk, sys.stiffness);
            std::vector<double> x(b.size(), 0.0);
            rep = pcg(sys.stiffness, b, x, *m, so);
            std::fill(x.begin(), x.end(), 0.0);
            probe_rep = pcg(sys.stiffness, probe, x, *m, so);
            if (!rep.converged) status = "not converged";
          } catch (const SolverError& e) {
            status = std::string("solver failure: ") + e.what();
          }
          const bool have = status == "ok" || status == "not converged";
          std::vector<Table::Value> row{
              r,
              std::int64_t{p},
              to_string(mk),
              std::int64_t{mesh.mx()},
              std::int64_t{mesh.my()},
              to_string(pk),
              static_cast<std::int64_t>(space.num_free()),
              have ? Table::Value{std::int64_t{rep.iterations}} : Table::Value{nan()},
              std::int64_t{rep.converged ? 1 : 0},
              have ? rep.relative_residual : nan(),
              have ? Table::Value{std::int64_t{probe_rep.iterations}} : Table::Value{nan()},
              have ? probe_rep.lambda_min : nan(),
              have ? probe_rep.lambda_max : nan(),
              have && probe_rep.eigen_reliable ? estimate_condition(probe_rep) : nan(),
              status};
          if (!cfg.deterministic) row.emplace_back(rep.seconds + probe_rep.seconds);
          t.add(std::move(row));
        }
      }
    }
  }
  return t;
}

ScalingResult run_scaling(const ExperimentConfig& cfg) {
  ScalingResult out{Table({"d", "levels", "target", "split", "simulated", "closed_form",
                           "asymptotic", "exact"}),
                    Table({"ratio", "d", "L_over_w", "levels", "cost_uniform", "cost_iso_amr",
                           "cost_aniso_amr", "count_uniform", "count_iso_general",
                           "count_aniso_general", "count_corner", "count_filament_iso",
                           "count_filament_aniso"}),
                    Table()};
  struct Case {
    RecursionTarget target;
    SplitMode mode;
  };
  const Case cases[] = {{RecursionTarget::boundary_layer, SplitMode::isotropic},
                        {RecursionTarget::boundary_layer, SplitMode::anisotropic},
                        {RecursionTarget::corner, SplitMode::isotropic},
                        {RecursionTarget::filament, SplitMode::isotropic}};
  for (int d : cfg.scaling.dimensions) {
    for (const Case& c : cases) {
      for (int j = 1; j <= cfg.scaling.max_levels; ++j) {
        ScalingInputs in;
        in.d = d;
        in.J = j;
        in.w = std::ldexp(1.0, -j);
        const ElementCounts f = closed_forms(in);
        const double sim = static_cast<double>(simulate_recursion(d, j, c.target, c.mode));
        double exact = nan(), asym = nan();
        if (c.target == RecursionTarget::boundary_layer && c.mode == SplitMode::anisotropic) {
          exact = asym = f.aniso_layer;
        } else if (c.target == RecursionTarget::boundary_layer) {
          exact = asym = d == 2 ? f.iso_layer_2d : f.iso_layer_3d;
        } else if (c.target == RecursionTarget::corner) {
          exact = (std::ldexp(1.0, d) - 1.0) * j + 1.0;
          asym = f.corner;
        } else {
          asym = f.filament_iso;
        }
        out.counts.add({std::int64_t{d}, std::int64_t{j}, to_string(c.target),
                        std::string(c.mode == SplitMode::isotropic ? "isotropic" : "anisotropic"),
                        sim, exact, asym,
                        std::isnan(exact) ? std::string() : std::string(sim == exact ? "yes" : "no")});
      }
    }
  }
  for (double r : cfg.ratios) {
    for (int d : cfg.scaling.dimensions) {
      ScalingInputs in;
      in.d = d;
      in.w = 1.0 / std::sqrt(r);
      in.J = std::max(1, static_cast<int>(std::ceil(std::log2(in.L / in.w) - 1e-12)));
      if (!(in.L > in.w)) continue;
      const ElementCounts f = closed_forms(in);
      out.costs.add({r, std::int64_t{d}, in.L / in.w, std::int64_t{in.J},
                     cost_model(in, CostRegime::uniform), cost_model(in, CostRegime::iso_amr),
                     cost_model(in, CostRegime::aniso_amr), f.uniform, f.iso_general,
                     f.aniso_general, f.corner, f.filament_iso, f.filament_aniso});
    }
  }
  if (!cfg.scaling.traces.empty()) {
    std::ifstream in(cfg.scaling.traces);
    if (!in) throw ConfigError("scaling.traces: cannot read '" + cfg.scaling.traces + "'");
    out.fits = fit_dof_traces(read_csv(in), cfg.scaling.window);
  }
  return out;
}

Table fit_dof_traces(const Table& eff, int window) {
  Table t({"model", "ratio", "p", "strategy", "points", "beta", "prefactor", "dofs_at_layer"});
  struct Series {
    std::vector<double> inv_h, dofs;
  };
  std::vector<std::tuple<std::string, double, double, std::string>> order;
  std::map<std::tuple<std::string, double, double, std::string>, Series> groups;
  const std::size_t cm = eff.column("model"), cs = eff.column("strategy");
  for (std::size_t i = 0; i < eff.rows.size(); ++i) {
    const auto key = std::make_tuple(format_value(eff.rows[i][cm]), eff.number(i, "ratio"),
                                     eff.number(i, "p"), format_value(eff.rows[i][cs]));
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.inv_h.push_back(1.0 / eff.number(i, "h_min"));
    it->second.dofs.push_back(eff.number(i, "dofs"));
  }
  for (const auto& key : order) {
    const Series& s = groups.at(key);
    const std::size_t n = s.dofs.size();
    const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(window));
    double beta = nan(), pref = nan();
    if (k >= 2) {
      const std::span<const double> x(s.inv_h.data() + (n - k), k), y(s.dofs.data() + (n - k), k);
      try {
        const PowerFit f = fit_power_law(x, y);
        beta = f.exponent;
        pref = f.prefactor;
      } catch (const Error&) {
      }
    }
    // dofs at 1/h_min = 1/w along the trace.
    const double inv_w = std::sqrt(std::get<1>(key));
    double at_layer = nan();
    for (std::size_t i = 0; i < n; ++i) {
      if (s.inv_h[i] < inv_w * (1.0 - 1e-12)) continue;
      if (i == 0) {
        at_layer = s.dofs[0];
      } else {
        const double tt = std::log(inv_w / s.inv_h[i - 1]) / std::log(s.inv_h[i] / s.inv_h[i - 1]);
        at_layer = std::exp(std::log(s.dofs[i - 1]) + tt * std::log(s.dofs[i] / s.dofs[i - 1]));
      }
      break;
    }
    t.add({std::get<0>(key), std::get<1>(key), static_cast<std::int64_t>(std::get<2>(key)),
           std::get<3>(key), static_cast<std::int64_t>(k), beta, pref, at_layer});
  }
  return t;
}

SingleRunResult run_single(const ExperimentConfig& cfg) {
  const double r = cfg.ratios.front();
  const int p = cfg.orders.front();
  const FieldModel model = cfg.model.build(r);
  std::optional<Reference> ref;
  if (const auto level = cfg.reference_level(0)) {
    ref.emplace(solve_reference(model, *level, p, solver_for(cfg), cfg.threads));
  }
  DriveOptions o;
  o.p = p;
  o.strategy = cfg.strategies.front();
  o.budget = cfg.budget;
  o.initial_levels = cfg.initial_levels;
  o.sweep = cfg.sweep;
  o.solver = cfg.solver;
  o.threads = cfg.threads;
  o.reference = ref ? &*ref : nullptr;
  std::optional<FESpace> last;
  std::vector<double> last_u;
  o.on_solution = [&](const FESpace& space, std::span<const double> u) {
    last.emplace(space);
    last_u.assign(u.begin(), u.end());
  };
  TraceRun run{r, p, o.strategy.kind, drive(model, o)};
  SingleRunResult out{trace_table(std::span<const TraceRun>(&run, 1), to_string(cfg.model.kind),
                                  cfg.deterministic),
                      {}};
  if (last) {
    EstimatorOptions eo;
    eo.threads = cfg.threads;
    const auto eta = zz_estimate(*last, last_u, model, eo);
    std::ostringstream os;
    write_vtk(os, *last, last_u, "temperature", eta,
              to_string(cfg.model.kind) + " " + to_string(o.strategy.kind));
    out.vtk = os.str();
  }
  return out;
}

Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  bool header = true;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (header) {
      t.columns = std::move(cells);
      header = false;
      continue;
    }
    std::vector<Table::Value> row;
    for (auto& c : cells) {
      if (c.empty()) {
        row.emplace_back(nan());
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() + c.size()) {
        row.emplace_back(v);
      } else {
        row.emplace_back(c);
      }
    }
    t.add(std::move(row));
  }
  return t;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output: cannot create '" + dir.string() + "': " + ec.message());
  const auto header = csv_header(cfg);
  std::vector<fs::path> written;
  auto save = [&](const std::string& name, const Table& t) {
    const fs::path path = dir / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("output: cannot write '" + path.string() + "'");
    write_csv(os, t, header);
    written.push_back(path);
  };
  switch (cfg.kind) {
    case ExperimentKind::verify: save("verify.csv", run_verify(cfg)); break;
    case ExperimentKind::efficiency: save("efficiency.csv", run_efficiency(cfg).table); break;
    case ExperimentKind::iterations: save("iterations.csv", run_iterations(cfg)); break;
    case ExperimentKind::scaling: {
      const auto s = run_scaling(cfg);
      save("scaling_counts.csv", s.counts);
      save("scaling_costs.csv", s.costs);
      if (!s.fits.columns.empty()) save("scaling_fits.csv", s.fits);
      break;
    }
    case ExperimentKind::single_run: {
      const auto s = run_single(cfg);
      save("run.csv", s.trace);
      const fs::path path = dir / "run.vtk";
      std::ofstream os(path);
      if (!os) throw ConfigError("output: cannot write '" + path.string() + "'");
      os << s.vtk;
      written.push_back(path);
      break;
    }
  }
  return written;
}

}  // namespace aniso
