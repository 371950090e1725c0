#pragma once

#include <functional>
#include <span>
#include <vector>

#include "aniso/fespace.hpp"
#include "aniso/fields.hpp"
#include "aniso/solver.hpp"

namespace aniso {

struct AssemblyOptions {
  /// Gauss points per direction; 0 selects p + 2.
  int quadrature_points = 0;
  int threads = 1;
};

/// Free-dof system: stiffness * u_free = load + lift.
struct SystemPair {
  CsrMatrix stiffness;
  std::vector<double> load;
  /// -A_{free,D} g for Dirichlet data g.
  std::vector<double> lift;
  /// Dirichlet values on true dofs (zero in free entries).
  std::vector<double> boundary;

  std::vector<double> rhs() const;
};

/// Element integrand: conductivity and source at a physical point.
using TensorField = std::function<Tensor2(Point)>;
using ScalarField = std::function<double(Point)>;

SystemPair assemble(const FESpace& space, const FieldModel& model,
                    const AssemblyOptions& opts = {});
SystemPair assemble(const FESpace& space, const TensorField& kappa, const ScalarField& source,
                    std::span<const double> boundary, const AssemblyOptions& opts = {});

/// Stiffness matrix over all true dofs (free and Dirichlet), without
/// boundary elimination.
CsrMatrix assemble_global(const FESpace& space, const TensorField& kappa,
                          const AssemblyOptions& opts = {});

/// Consistent mass matrix over all true dofs.
CsrMatrix assemble_mass(const FESpace& space, const AssemblyOptions& opts = {});

/// Solves the free system and returns the full true-dof vector.
std::vector<double> solve_system(const FESpace& space, const SystemPair& sys,
                                 const SolverOptions& opts, SolveReport* report = nullptr);

}  // namespace aniso
