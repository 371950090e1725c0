#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aniso/fespace.hpp"
#include "aniso/fields.hpp"

namespace aniso {

struct ElementEstimate {
  std::size_t element = 0;
  double eta = 0.0;
};

double total(std::span<const ElementEstimate> e);

struct EstimatorOptions {
  /// Gauss points per direction; 0 selects p + 2.
  int quadrature_points = 0;
  int threads = 1;
  /// Relative tolerance of the recovery mass solve.
  double mass_rtol = 1e-10;
};

/// Exact or reference field used as the truth in error norms.
struct Truth {
  std::function<double(Point)> value;
  std::function<Vec2(Point)> gradient;
};
/// Exact solution of a model; throws UnsupportedError without one.
Truth exact_truth(const FieldModel& model);
/// Point evaluation of a solved discrete field.  Both references must outlive
/// the returned object.
Truth discrete_truth(const FESpace& space, std::span<const double> u);

/// Zienkiewicz-Zhu indicators: sigma is the L2 projection of kappa grad T onto
/// the continuous order-p vector space on the same mesh and
/// eta_E = int_E |kappa grad T - sigma|.
std::vector<ElementEstimate> zz_estimate(const FESpace& space, std::span<const double> u,
                                         const FieldModel& model,
                                         const EstimatorOptions& opts = {});

/// eta_E = int_E |kappa grad T - kappa grad T_ref| with the reference gradient
/// evaluated pointwise.  Throws Error when the reference mesh is coarser than
/// the smallest element of `space`.
std::vector<ElementEstimate> reference_estimate(const FESpace& space, std::span<const double> u,
                                                const FESpace& ref, std::span<const double> ref_u,
                                                const FieldModel& model,
                                                const EstimatorOptions& opts = {});

/// Same indicator against an arbitrary truth (used with exact solutions).
std::vector<ElementEstimate> flux_error_indicators(const FESpace& space,
                                                   std::span<const double> u,
                                                   const Truth& truth, const FieldModel& model,
                                                   const EstimatorOptions& opts = {});

/// RMS-type error on the 101 x 151 sample lattice x_i = i pi / 100,
/// y_j = (j / 50) w, divided by 15000.  Requires the constant model and w <= 1/3.
double layer_norm(const FESpace& space, std::span<const double> u, const FieldModel& model);

/// int |T - T*| and sum_E int_E |kappa (grad T - grad T*)| by quadrature on
/// the cells of `space`.
double l1_error(const FESpace& space, std::span<const double> u, const Truth& truth,
                const EstimatorOptions& opts = {});
double flux_error_total(const FESpace& space, std::span<const double> u, const Truth& truth,
                        const FieldModel& model, const EstimatorOptions& opts = {});

/// The same norms against a discrete reference, integrated over the
/// reference cells so that the finer mesh sets the quadrature.
double l1_error(const FESpace& space, std::span<const double> u, const FESpace& ref,
                std::span<const double> ref_u, const EstimatorOptions& opts = {});
double flux_error_total(const FESpace& space, std::span<const double> u, const FESpace& ref,
                        std::span<const double> ref_u, const FieldModel& model,
                        const EstimatorOptions& opts = {});

}  // namespace aniso
