#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aniso/fields.hpp"
#include "aniso/io.hpp"
#include "aniso/refine.hpp"
#include "aniso/solver.hpp"

namespace aniso {

inline constexpr const char* kVersion = ANISO_VERSION;
/// Bumped whenever a CSV column is added, removed or renamed.
inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentKind { verify, efficiency, iterations, scaling, single_run };
std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ModelSpec {
  FieldKind kind = FieldKind::constant;
  std::optional<Point> wire1, wire2, center;
  std::optional<double> island_length;
  DirectionMode direction = DirectionMode::poloidal;
  double null_tolerance = FieldModel::kDefaultNullTolerance;

  FieldModel build(double ratio) const;
};

enum class IterationMesh {
  uniform,  ///< ceil(sqrt(r)) x ceil(sqrt(r)): the coarsest square mesh with h_y <= w
  ratio,    ///< mx x round(mx / (3w)): aspect ratio matched to the layer
  fixed,    ///< fixed_size x fixed_size for every r
};
std::string to_string(IterationMesh m);
IterationMesh parse_iteration_mesh(const std::string& s);

struct IterationStudy {
  std::vector<IterationMesh> meshes{IterationMesh::uniform, IterationMesh::ratio};
  std::vector<PreconditionerKind> preconditioners{PreconditionerKind::jacobi,
                                                  PreconditionerKind::ilu0};
  int ratio_mx = 12;
  int fixed_size = 100;
};

struct ScalingStudy {
  int max_levels = 12;
  std::vector<int> dimensions{2, 3};
  /// Efficiency CSV whose dof traces are fitted; empty to skip.
  std::string traces;
  /// Trailing iterations used by the dofs-versus-1/h_min fit.
  int window = 4;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  ModelSpec model;
  std::vector<double> ratios{100.0};
  /// Largest accepted anisotropy ratio.
  double max_ratio = 1e4;
  std::vector<int> orders{1};
  std::vector<Strategy> strategies{Strategy{}};
  Budget budget;
  int initial_levels = 2;
  /// M values of the convergence sweep.
  std::vector<int> mesh_sizes{10, 20, 40, 80, 160};
  /// mx values of the aligned strategies.
  std::vector<int> sweep{3, 6, 12, 24, 48, 96};
  /// Uniform-quadtree levels of the reference solve, one per ratio or a
  /// single value for all; empty for no reference.
  std::vector<int> reference_levels;
  SolverOptions solver;
  IterationStudy iterations;
  ScalingStudy scaling;
  bool keep_meshes = false;
  std::string output = "results";
  /// Reserved; no numerical routine consumes it.
  std::uint64_t seed = 0;
  int threads = 1;
  /// Drop wall-time columns so that reruns give byte-identical files.
  bool deterministic = false;
  /// Normalized JSON text the config was read from.
  std::string source;

  /// Throws ConfigError naming the offending key.  `expected` fills a missing
  /// "experiment" key and must agree with a present one.
  static ExperimentConfig from_json_text(const std::string& text,
                                         std::optional<ExperimentKind> expected = {});
  static ExperimentConfig load(const std::filesystem::path& path,
                               std::optional<ExperimentKind> expected = {});
  void validate() const;
  std::optional<int> reference_level(std::size_t ratio_index) const;
};

/// '#' header lines of every CSV: config, version, schema and the desk-scale
/// substitutions in effect.
std::vector<std::string> csv_header(const ExperimentConfig& cfg);

/// Layer-norm convergence sweep on uniform M x M meshes of the constant model.
Table run_verify(const ExperimentConfig& cfg);

struct TraceRun {
  double ratio;
  int p;
  StrategyKind strategy;
  RefinementTrace trace;
};
struct EfficiencyResult {
  Table table;
  std::vector<TraceRun> runs;
};
/// One row per refinement iteration per (ratio, p, strategy).  Solver
/// failures end the affected trace and are recorded in its halt column.
EfficiencyResult run_efficiency(const ExperimentConfig& cfg);
Table trace_table(std::span<const TraceRun> runs, const std::string& model, bool deterministic);

/// CG iterations of the problem solve and Lanczos extremes of a solve with a
/// fixed pseudo-random right-hand side, per (r, p, mesh, preconditioner).
Table run_iterations(const ExperimentConfig& cfg);

struct ScalingResult {
  Table counts;  ///< recursion simulator against closed forms
  Table costs;   ///< cost model over the ratio list
  Table fits;    ///< dof-trace fits; empty without traces
};
ScalingResult run_scaling(const ExperimentConfig& cfg);

/// Power-law fit of dofs against 1/h_min over the last `window` rows of each
/// (model, ratio, p, strategy) trace, plus the dofs at h_min = w by log-log
/// interpolation.
Table fit_dof_traces(const Table& efficiency, int window);

struct SingleRunResult {
  Table trace;
  std::string vtk;
};
/// Drive with the first ratio, order and strategy; VTK of the final iterate.
SingleRunResult run_single(const ExperimentConfig& cfg);

/// Parses CSV written by write_csv; numeric cells become doubles.
Table read_csv(std::istream& is);

/// Runs the configured experiment and writes its files under `cfg.output`.
/// Returns the written paths.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg);

}  // namespace aniso
