#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/estimator.hpp"
#include "aniso/fem.hpp"
#include "aniso/mesh.hpp"

namespace aniso {

enum class StrategyKind {
  uniform,
  zz_threshold,
  /// Threshold marking on reference_estimate instead of the ZZ indicator.
  reference_threshold,
  exponential_flux,
  exponential_aligned,
  aspect_ratio,
};
std::string to_string(StrategyKind k);
StrategyKind parse_strategy(const std::string& s);

struct Strategy {
  StrategyKind kind = StrategyKind::zz_threshold;
  /// Threshold factor of the mean indicator, in (0, 1].
  double threshold = 0.75;
  void validate() const;
};

/// Positions with eta > factor * mean(eta).  Throws ConfigError on an empty
/// list or a factor outside (0, 1].
std::vector<int> mark_zz(std::span<const ElementEstimate> estimates, double factor);

/// Cells on which phi changes sign over the 4 corners and nq x nq Gauss
/// points.  Singular samples of phi count as -infinity.
std::vector<int> separatrix_cells(const LeafGrid& grid, const std::function<double(Point)>& phi,
                                  int nq);

/// Separatrix cells plus every cell with max(hx, hy) > hs * exp(d * growth)
/// at some Gauss point, with d = |phi| / normalization.
std::vector<int> mark_exponential(const LeafGrid& grid, const std::function<double(Point)>& phi,
                                  double normalization, double hs, double growth, int nq);

/// Flux-based exponential marking for the single-null, double-null and island
/// models: phi = A - A(x_s), growth = sqrt(kpar/kperp) / (p + 1), p + 2 Gauss
/// points per direction.
std::vector<int> mark_exponential_flux(const LeafGrid& grid, const FieldModel& model, double hs,
                                       int p);

/// Uniform mx x (ratio * mx) tensor mesh; throws ConfigError when the row
/// count is not integral.
TensorMesh build_aspect_ratio(int mx, double ratio, Rect domain);

struct LayerElementSize {
  double root;   ///< bisection root of the full relation
  double inner;  ///< h/w << 1 closed form
  double outer;  ///< h/w >> 1 closed form
};
/// Solves h^{p+1} e^{-yE/w} [(1 - e^{-2h/w}) / (2h/w)]^{1/2} = hs^{p+1} for h.
LayerElementSize solve_transcendental_hy(double y_e, double w, double hs, int p);

/// Boundary-layer element size of the aligned strategies for a given mx.
double aligned_layer_size(const Anisotropy& a, int mx);

struct Budget {
  std::size_t max_dofs = 400000;
  int max_iterations = 40;
  /// Halt once h_min reaches this size; 0 selects the reference element size,
  /// or a quarter of the layer width without a reference.
  double halt_size = 0.0;
};

/// A solved uniform fine-mesh solution used as the truth.
struct Reference {
  FESpace space;
  std::vector<double> u;
  SolveReport report;
  double element_size() const { return space.grid().min_element_size(); }
};
/// Solves the model on a uniform quadtree with 2^levels cells per side.
Reference solve_reference(const FieldModel& model, int levels, int p, const SolverOptions& solver,
                          int threads = 1);

struct DriveOptions {
  int p = 1;
  Strategy strategy;
  Budget budget;
  int roots_x = 1;
  int roots_y = 1;
  /// Uniform levels of the initial quadtree.
  int initial_levels = 2;
  /// mx values of the aligned tensor strategies.
  std::vector<int> sweep{3, 6, 12, 24, 48, 96};
  SolverOptions solver;
  int threads = 1;
  const Reference* reference = nullptr;
  /// Compute the ZZ indicator sum at every iteration even when not marking with it.
  bool always_estimate = true;
  /// Keep the leaf keys of every quadtree iteration.
  bool keep_meshes = false;
  /// Called with every solved iterate.
  std::function<void(const FESpace&, std::span<const double>)> on_solution;
};

struct IterationRecord {
  static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();
  int iteration = 0;
  std::size_t dofs = 0;
  std::size_t cells = 0;
  double h_min = 0.0;
  double l1_error = kNone;
  double flux_error = kNone;
  double layer_norm = kNone;
  double eta_sum = kNone;
  SolveReport solve;
};

struct RefinementTrace {
  std::vector<IterationRecord> records;
  std::string halt_reason;
  std::vector<std::vector<CellKey>> meshes;
};

/// Solver failure inside drive(), carrying the records completed so far.
class DriveError : public SolverError {
 public:
  DriveError(const SolverError& e, RefinementTrace partial)
      : SolverError(e.what(), e.iteration()),
        trace_(std::make_shared<RefinementTrace>(std::move(partial))) {}
  const RefinementTrace& trace() const { return *trace_; }

 private:
  std::shared_ptr<RefinementTrace> trace_;
};

/// assemble -> solve -> estimate -> mark -> refine until the halt size, the
/// dof budget, the iteration budget or an empty marked set.  The aligned
/// strategies instead walk `sweep` on tensor meshes.
RefinementTrace drive(const FieldModel& model, const DriveOptions& opts);

}  // namespace aniso
