#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "aniso/geometry.hpp"

namespace aniso {

enum class FieldKind { constant, single_null, double_null, island };

std::string to_string(FieldKind k);
FieldKind parse_field_kind(const std::string& s);

/// How the in-plane direction entering the conductivity tensor is formed.
/// `poloidal` uses B_pol/|B_pol|; `total` uses B_pol/sqrt(|B_pol|^2 + 1), i.e.
/// the in-plane part of the full field direction with a unit toroidal field.
enum class DirectionMode { poloidal, total };

struct Anisotropy {
  double kpar = 1.0;
  double kperp = 1.0;

  double ratio() const { return kpar / kperp; }
  /// Layer width sqrt(kperp/kpar).
  double width() const;
  /// Throws ConfigError unless kpar >= kperp > 0.
  void validate() const;
  /// kpar = 1, kperp = 1/r.
  static Anisotropy from_ratio(double r);
};

enum class Side { left = 0, right = 1, bottom = 2, top = 3 };

/// Dirichlet value per side (left, right, bottom, top).  Bottom/top entries
/// are ignored when the model is periodic in y.
struct BoundarySpec {
  std::array<double, 4> value{0.0, 0.0, 0.0, 0.0};
  bool periodic_y = false;
};

class FieldModel {
 public:
  static constexpr double kDefaultNullTolerance = 1e-13;

  /// Models with their default geometry, source and boundary data.
  static FieldModel constant(Anisotropy a);
  static FieldModel single_null(Anisotropy a, Point x1 = {0.5, 0.75}, Point x2 = {0.5, -0.25});
  static FieldModel double_null(Anisotropy a, Point center = {0.5, 0.5});
  static FieldModel island(Anisotropy a, Point center = {0.5, 0.5}, double length = 1.0);

  FieldKind kind() const { return kind_; }
  const Anisotropy& anisotropy() const { return aniso_; }
  const BoundarySpec& boundary() const { return bc_; }
  BoundarySpec& boundary() { return bc_; }
  Rect domain() const;
  bool periodic_y() const { return bc_.periodic_y; }

  DirectionMode direction_mode() const { return mode_; }
  void set_direction_mode(DirectionMode m) { mode_ = m; }
  double null_tolerance() const { return eps_b_; }
  void set_null_tolerance(double eps) { eps_b_ = eps; }

  Point wire1() const { return x1_; }
  Point wire2() const { return x2_; }
  Point center() const { return center_; }
  double island_length() const { return length_; }

  /// Flux function A_z.  Throws SingularityError at a wire location and
  /// UnsupportedError for the constant model.
  double flux(Point p) const;
  /// Gradient (dA/dx, dA/dy).
  Vec2 flux_gradient(Point p) const;
  /// Poloidal field (dA/dy, -dA/dx); x-hat for the constant model.
  Vec2 poloidal_field(Point p) const;

  /// In-plane direction used in the tensor; nullopt where the poloidal field
  /// magnitude is at or below the null tolerance.
  std::optional<Vec2> direction(Point p) const;
  Tensor2 conductivity(Point p) const;
  double source(Point p) const;

  /// Dirichlet value at a boundary point of the given side.
  double boundary_value(Side side, Point p) const;

  /// Null points: x_s for the single null, x_s- and x_s+ otherwise.
  std::vector<Point> nulls() const;
  /// A_z on the separatrix.
  double separatrix_flux() const;
  /// Denominator of the normalized flux distance: 1 for the single null,
  /// |A_z(x0) - A_z(x_s)| for the double null and island.
  double flux_normalization() const;

  bool has_exact_solution() const { return kind_ == FieldKind::constant; }
  double exact_solution(Point p) const;
  Vec2 exact_gradient(Point p) const;

 private:
  FieldModel() = default;
  void require_flux() const;

  FieldKind kind_ = FieldKind::constant;
  Anisotropy aniso_;
  BoundarySpec bc_;
  DirectionMode mode_ = DirectionMode::poloidal;
  double eps_b_ = kDefaultNullTolerance;
  Point x1_{0.5, 0.75};
  Point x2_{0.5, -0.25};
  Point center_{0.5, 0.5};
  double length_ = 1.0;
};

/// Tensor kpar*b(x)b + kperp*(I - b(x)b); b need not be unit.
Tensor2 anisotropic_tensor(Vec2 b, double kpar, double kperp);

/// Two-layer strip solution on (0,pi)x(0,1) for ratio r = kpar/kperp.
double strip_solution(Point p, double ratio);
Vec2 strip_solution_gradient(Point p, double ratio);
/// Single-layer half-space solution (1 - exp(-y sqrt(r))) sin x.
double half_space_solution(Point p, double ratio);

}  // namespace aniso
