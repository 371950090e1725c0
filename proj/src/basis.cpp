#include "aniso/basis.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "aniso/error.hpp"

namespace aniso {

namespace {

// Legendre polynomial P_n(x) and its derivative.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule q;
  q.points.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto j = static_cast<std::size_t>(n - 1 - i);
    q.points[j] = 0.5 * (x + 1.0);
    q.weights[j] = 0.5 * w;
  }
  return q;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > 64) throw Error("gauss_legendre: point count must be in [1, 64]");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

std::span<const double> gll_nodes(int p) {
  static const std::array<double, 2> p1{0.0, 1.0};
  static const std::array<double, 3> p2{0.0, 0.5, 1.0};
  static const std::array<double, 4> p3{0.0, 0.5 * (1.0 - 1.0 / std::sqrt(5.0)),
                                        0.5 * (1.0 + 1.0 / std::sqrt(5.0)), 1.0};
  switch (p) {
    case 1: return p1;
    case 2: return p2;
    case 3: return p3;
    default: throw UnsupportedError("polynomial order must be 1, 2 or 3");
  }
}

void lagrange_basis(std::span<const double> nodes, double t, std::span<double> values,
                    std::span<double> derivatives) {
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double inv = 1.0 / (nodes[i] - nodes[j]);
      d = d * (t - nodes[j]) * inv + v * inv;
      v *= (t - nodes[j]) * inv;
    }
    values[i] = v;
    derivatives[i] = d;
  }
}

void lagrange_values(std::span<const double> nodes, double t, std::span<double> values) {
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) v *= (t - nodes[j]) / (nodes[i] - nodes[j]);
    }
    values[i] = v;
  }
}

}  // namespace aniso
