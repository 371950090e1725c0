#include "aniso/fields.hpp"

#include <cmath>
#include <numbers>

#include "aniso/error.hpp"

namespace aniso {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::constant: return "constant";
    case FieldKind::single_null: return "single_null";
    case FieldKind::double_null: return "double_null";
    case FieldKind::island: return "island";
  }
  return "?";
}

FieldKind parse_field_kind(const std::string& s) {
  if (s == "constant") return FieldKind::constant;
  if (s == "single_null") return FieldKind::single_null;
  if (s == "double_null") return FieldKind::double_null;
  if (s == "island") return FieldKind::island;
  throw ConfigError("unknown model kind '" + s + "'");
}

double Anisotropy::width() const { return std::sqrt(kperp / kpar); }

void Anisotropy::validate() const {
  if (!(kperp > 0.0) || !(kpar > 0.0)) throw ConfigError("conductivities must be positive");
  if (kpar < kperp) throw ConfigError("kpar must be >= kperp");
}

Anisotropy Anisotropy::from_ratio(double r) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw ConfigError("anisotropy ratio must be >= 1");
  return Anisotropy{1.0, 1.0 / r};
}

Tensor2 anisotropic_tensor(Vec2 b, double kpar, double kperp) {
  const double d = kpar - kperp;
  return Tensor2{kperp + d * b.x * b.x, d * b.x * b.y, kperp + d * b.y * b.y};
}

// ---------------------------------------------------------------------------

FieldModel FieldModel::constant(Anisotropy a) {
  a.validate();
  FieldModel m;
  m.kind_ = FieldKind::constant;
  m.aniso_ = a;
  return m;
}

FieldModel FieldModel::single_null(Anisotropy a, Point x1, Point x2) {
  a.validate();
  if (x1 == x2) throw ConfigError("single_null: wire positions must differ");
  FieldModel m;
  m.kind_ = FieldKind::single_null;
  m.aniso_ = a;
  m.x1_ = x1;
  m.x2_ = x2;
  return m;
}

FieldModel FieldModel::double_null(Anisotropy a, Point center) {
  a.validate();
  FieldModel m;
  m.kind_ = FieldKind::double_null;
  m.aniso_ = a;
  m.center_ = center;
  return m;
}

FieldModel FieldModel::island(Anisotropy a, Point center, double length) {
  a.validate();
  if (!(length > 0.0)) throw ConfigError("island: length must be positive");
  FieldModel m;
  m.kind_ = FieldKind::island;
  m.aniso_ = a;
  m.center_ = center;
  m.length_ = length;
  m.bc_.value = {1.0, 0.0, 0.0, 0.0};
  m.bc_.periodic_y = true;
  return m;
}

Rect FieldModel::domain() const {
  if (kind_ == FieldKind::constant) return Rect{0.0, 0.0, kPi, 1.0};
  return Rect{0.0, 0.0, 1.0, 1.0};
}

void FieldModel::require_flux() const {
  if (kind_ == FieldKind::constant) {
    throw UnsupportedError("the constant model has no flux function");
  }
}

double FieldModel::flux(Point p) const {
  require_flux();
  if (kind_ == FieldKind::single_null) {
    const double d1 = norm(p - x1_);
    const double d2 = norm(p - x2_);
    if (d1 < 1e-14 || d2 < 1e-14) {
      throw SingularityError("flux function evaluated at a wire location");
    }
    return std::log(d1 * d2);
  }
  const double dx = p.x - center_.x;
  double g = 1.0;
  if (kind_ == FieldKind::island) {
    const double u = dx / (0.5 * length_);
    g = (1.0 - u) * (1.0 + u);
  }
  const double s = g * 0.25 * std::sin(2.0 * kPi * (p.y - center_.y));
  return 0.5 * dx * dx + 0.5 * s * s;
}

Vec2 FieldModel::flux_gradient(Point p) const {
  require_flux();
  if (kind_ == FieldKind::single_null) {
    const Vec2 a = p - x1_;
    const Vec2 b = p - x2_;
    const double a2 = dot(a, a);
    const double b2 = dot(b, b);
    if (a2 < 1e-28 || b2 < 1e-28) {
      throw SingularityError("flux gradient evaluated at a wire location");
    }
    return (1.0 / a2) * a + (1.0 / b2) * b;
  }
  const double dx = p.x - center_.x;
  const double th = 2.0 * kPi * (p.y - center_.y);
  const double sn = std::sin(th);
  const double cs = std::cos(th);
  double g = 1.0;
  double dg = 0.0;
  if (kind_ == FieldKind::island) {
    const double half = 0.5 * length_;
    const double u = dx / half;
    g = (1.0 - u) * (1.0 + u);
    dg = -2.0 * u / half;
  }
  const double ax = dx + g * dg * 0.0625 * sn * sn;
  const double ay = g * g * (kPi / 8.0) * sn * cs;
  return {ax, ay};
}

Vec2 FieldModel::poloidal_field(Point p) const {
  if (kind_ == FieldKind::constant) return {1.0, 0.0};
  const Vec2 g = flux_gradient(p);
  return {g.y, -g.x};
}

std::optional<Vec2> FieldModel::direction(Point p) const {
  if (kind_ == FieldKind::constant) return Vec2{1.0, 0.0};
  const Vec2 b = poloidal_field(p);
  const double mag = norm(b);
  if (!(mag > eps_b_)) return std::nullopt;
  if (mode_ == DirectionMode::total) return (1.0 / std::sqrt(mag * mag + 1.0)) * b;
  return (1.0 / mag) * b;
}

Tensor2 FieldModel::conductivity(Point p) const {
  const auto b = direction(p);
  if (!b) return Tensor2{aniso_.kperp, 0.0, aniso_.kperp};
  return anisotropic_tensor(*b, aniso_.kpar, aniso_.kperp);
}

double FieldModel::source(Point p) const {
  switch (kind_) {
    case FieldKind::constant:
      return aniso_.kpar * std::sin(p.x);
    case FieldKind::single_null:
    case FieldKind::double_null: {
      const double u = (p.x - 0.5) / 0.125;
      const double v = (p.y - 0.5) / 0.125;
      return std::exp(-0.5 * (u * u + v * v));
    }
    case FieldKind::island:
      return 0.0;
  }
  return 0.0;
}

double FieldModel::boundary_value(Side side, Point) const {
  return bc_.value[static_cast<std::size_t>(side)];
}

std::vector<Point> FieldModel::nulls() const {
  require_flux();
  if (kind_ == FieldKind::single_null) return {0.5 * (x1_ + x2_)};
  return {Point{center_.x, center_.y - 0.25}, Point{center_.x, center_.y + 0.25}};
}

double FieldModel::separatrix_flux() const { return flux(nulls().front()); }

double FieldModel::flux_normalization() const {
  require_flux();
  if (kind_ == FieldKind::single_null) return 1.0;
  const double d = std::abs(flux(center_) - separatrix_flux());
  if (!(d > 0.0)) {
    throw ConfigError("flux normalization undefined: A_z(x0) equals the separatrix value");
  }
  return d;
}

double FieldModel::exact_solution(Point p) const {
  if (kind_ != FieldKind::constant) {
    throw UnsupportedError("exact solution is only available for the constant model");
  }
  return strip_solution(p, aniso_.ratio());
}

Vec2 FieldModel::exact_gradient(Point p) const {
  if (kind_ != FieldKind::constant) {
    throw UnsupportedError("exact solution is only available for the constant model");
  }
  return strip_solution_gradient(p, aniso_.ratio());
}

// ---------------------------------------------------------------------------

double strip_solution(Point p, double ratio) {
  const double s = std::sqrt(ratio);
  const double e = (std::exp(-p.y * s) + std::exp(-(1.0 - p.y) * s)) / (1.0 + std::exp(-s));
  return (1.0 - e) * std::sin(p.x);
}

Vec2 strip_solution_gradient(Point p, double ratio) {
  const double s = std::sqrt(ratio);
  const double den = 1.0 + std::exp(-s);
  const double e = (std::exp(-p.y * s) + std::exp(-(1.0 - p.y) * s)) / den;
  const double de = s * (std::exp(-(1.0 - p.y) * s) - std::exp(-p.y * s)) / den;
  return {(1.0 - e) * std::cos(p.x), -de * std::sin(p.x)};
}

double half_space_solution(Point p, double ratio) {
  return (1.0 - std::exp(-p.y * std::sqrt(ratio))) * std::sin(p.x);
}

}  // namespace aniso
