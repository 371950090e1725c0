#pragma once

#include <span>
#include <vector>

namespace aniso {

/// Gauss-Legendre rule with n points mapped to [0, 1]; weights sum to 1.
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const QuadratureRule& gauss_legendre(int n);

/// Gauss-Lobatto-Legendre nodes on [0, 1] for orders 1..3.
std::span<const double> gll_nodes(int p);

/// Values and first derivatives of the 1D Lagrange basis on `nodes` at t.
void lagrange_basis(std::span<const double> nodes, double t, std::span<double> values,
                    std::span<double> derivatives);

/// Values only.
void lagrange_values(std::span<const double> nodes, double t, std::span<double> values);

}  // namespace aniso
