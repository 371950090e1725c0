#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aniso/mesh.hpp"

namespace aniso {

struct ScalingInputs {
  double L = 1.0;
  double w = 0.01;
  int d = 2;
  int J = 1;
  double n_r = 1.4426950408889634;  // 1 / log 2
  double n_p = 1.0;
  double n_t = 1.0;
  double n_s = 1.0;
  double n_par = 1.0;
  /// Throws ConfigError unless L > w > 0, J >= 1, d in {2, 3}, counts >= 1.
  void validate() const;
};

/// Element counts; proportionality constants of the asymptotic laws are 1.
struct ElementCounts {
  double uniform;         ///< (L/w)^d
  double aniso_layer;     ///< J + 1
  double iso_layer_2d;    ///< 3 2^J - 2
  double iso_layer_3d;    ///< (7/3) 4^J - 4/3
  double iso_general;     ///< (L/w)^(d-1)
  double aniso_general;   ///< n_s^(d-1) n_r log(L/w)
  double aniso_2d;        ///< n_p n_r log(L/w)
  double aniso_3d;        ///< n_p n_t n_r log(L/w)
  double corner;          ///< 2^d J
  double interior_point;  ///< 2^(2d) J
  double filament_iso;    ///< 3 2^(2(d-1)) L/w
  double filament_aniso;  ///< n_par 2^(2(d-1)) log(L/w)
};
ElementCounts closed_forms(const ScalingInputs& in);

enum class RecursionTarget { boundary_layer, corner, filament };
std::string to_string(RecursionTarget t);
RecursionTarget parse_recursion_target(const std::string& s);

enum class SplitMode {
  isotropic,  ///< 2^d children
  /// Bisection normal to the layer only (2 children); boundary_layer target only.
  anisotropic,
};

/// Counts elements of J rounds of refinement of the unit d-cube in which
/// every element touching the target (closed boxes) is split and all other
/// children retire; returns retired plus final elements.  Targets: the face
/// y = 0, the corner at the origin, or the line through y = z = 1/2 along x.
/// Throws Error when the count overflows 64 bits.
std::uint64_t simulate_recursion(int d, int J, RecursionTarget target,
                                 SplitMode mode = SplitMode::isotropic);

enum class CostRegime { uniform, iso_amr, aniso_amr };
/// (L/w)^(d+1), (L/w)^d, or (L/w) log(L/w).
double cost_model(const ScalingInputs& in, CostRegime regime);

struct PowerFit {
  double exponent;
  double prefactor;
};
/// Least-squares fit of log y = log c + beta log x; needs two distinct x > 0.
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y);

/// Dofs at which a monotone-ish error curve first reaches `target`, by
/// log-log interpolation between successive records; NaN when never reached.
double dofs_at_error(std::span<const double> dofs, std::span<const double> error, double target);

/// Dice coefficient 2|A n B| / (|A| + |B|) of two leaf sets.
double leaf_overlap(std::span<const CellKey> a, std::span<const CellKey> b);

/// First index k with error[k + window] >= (1 - drop) error[k], or -1.
int stagnation_index(std::span<const double> error, int window = 3, double drop = 0.1);

}  // namespace aniso
