#pragma once

#include <functional>
#include <span>
#include <vector>

#include "aniso/fields.hpp"
#include "aniso/geometry.hpp"
#include "aniso/mesh.hpp"

namespace aniso {

/// Order-p continuous nodal space on a LeafGrid.
///
/// Unknowns are "true" dofs: free dofs plus Dirichlet dofs.  Hanging-edge
/// and periodic dofs are eliminated: every element-local dof expands into a
/// short affine combination of true dofs.  Global vectors are indexed by true
/// dof and hold boundary values in their Dirichlet entries.
class FESpace {
 public:
  struct Term {
    int dof;
    double weight;
  };

  /// With `dirichlet` false every non-constrained dof is free (used for the
  /// flux recovery space).  Throws MeshError on a mesh that is not 1-irregular.
  FESpace(LeafGrid grid, int p, const BoundarySpec& bc, bool dirichlet = true);

  int order() const { return p_; }
  int local_size() const { return (p_ + 1) * (p_ + 1); }
  const LeafGrid& grid() const { return grid_; }
  std::size_t num_cells() const { return grid_.size(); }

  std::size_t num_dofs() const { return points_.size(); }
  std::size_t num_free() const { return free_.size(); }
  std::size_t num_dirichlet() const { return num_dofs() - num_free(); }
  std::size_t num_constrained() const { return num_constrained_; }

  /// Free-system index of a true dof, or -1 for a Dirichlet dof.
  int free_index(int dof) const { return free_index_[static_cast<std::size_t>(dof)]; }
  /// True dof ids of the free dofs, in free-system order.
  std::span<const int> free_dofs() const { return free_; }
  Point dof_point(int dof) const { return points_[static_cast<std::size_t>(dof)]; }
  /// Side of a Dirichlet dof (first matching of left, right, bottom, top).
  Side dirichlet_side(int dof) const;

  /// Expansion of local dof `l` (index b*(p+1)+a for node (a, b)) of `cell`.
  std::span<const Term> expansion(std::size_t cell, int l) const;

  /// Nodal interpolant of f over true dofs.
  std::vector<double> interpolate(const std::function<double(Point)>& f) const;
  /// Vector with Dirichlet entries set from `bc` and free entries zero.
  std::vector<double> boundary_vector(const FieldModel& model) const;

  /// Element-local coefficients of a global vector.
  void local_coefficients(std::span<const double> u, std::size_t cell,
                          std::span<double> out) const;

  /// Value and gradient at reference coordinates (s, t) in [0,1]^2 of a cell.
  double value_in_cell(std::span<const double> u, std::size_t cell, double s, double t) const;
  Vec2 gradient_in_cell(std::span<const double> u, std::size_t cell, double s, double t) const;

  /// Point evaluation; throws Error for points outside the domain.
  double evaluate(std::span<const double> u, Point x) const;
  Vec2 evaluate_gradient(std::span<const double> u, Point x) const;
  /// Cell containing x and its reference coordinates.
  std::pair<std::size_t, Vec2> locate(Point x) const;

 private:
  LeafGrid grid_;
  int p_;
  std::vector<Point> points_;
  std::vector<int> free_;
  std::vector<int> free_index_;
  std::vector<signed char> side_;
  std::size_t num_constrained_ = 0;
  std::vector<std::size_t> slot_begin_;
  std::vector<Term> terms_;
};

}  // namespace aniso
