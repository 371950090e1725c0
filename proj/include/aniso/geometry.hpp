#pragma once

#include <cmath>

namespace aniso {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

using Point = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Axis-aligned rectangle given by its lower-left corner and edge lengths.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double hx = 1.0;
  double hy = 1.0;

  double x1() const { return x0 + hx; }
  double y1() const { return y0 + hy; }
  double area() const { return hx * hy; }
  Point center() const { return {x0 + 0.5 * hx, y0 + 0.5 * hy}; }
  bool contains(Point p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1() + tol && p.y >= y0 - tol &&
           p.y <= y1() + tol;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Symmetric 2x2 tensor.
struct Tensor2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
};

}  // namespace aniso
