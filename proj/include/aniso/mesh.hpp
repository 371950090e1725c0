#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "aniso/geometry.hpp"

namespace aniso {

/// Identifies a cell of a refinement hierarchy: level and integer position
/// within the level (root grid scaled by 2^level).
struct CellKey {
  int level = 0;
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.level) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.ix) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.iy) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Maps integer lattice positions along one axis to coordinates.  Dyadic maps
/// serve quadtrees (uniform lattice at the finest level); table maps serve
/// graded tensor meshes.
class AxisMap {
 public:
  static AxisMap dyadic(double origin, double length, std::int64_t intervals);
  static AxisMap table(std::vector<double> coords);

  double operator()(std::int64_t i) const;
  std::int64_t intervals() const { return intervals_; }
  /// Interval containing x, clamped to [0, intervals()).
  std::int64_t locate(double x) const;

 private:
  AxisMap() = default;
  double origin_ = 0.0;
  double length_ = 1.0;
  std::int64_t intervals_ = 1;
  std::vector<double> table_;
};

/// A leaf cell: hierarchy key, geometry, and its box [i0,i1)x[j0,j1) in the
/// finest lattice of the owning grid.
struct LeafCell {
  CellKey key;
  Rect rect;
  std::int64_t i0 = 0, j0 = 0, i1 = 0, j1 = 0;
};

/// Immutable, mesh-type independent view of a set of leaves tiling a
/// rectangle.  Finite-element spaces are built on this.
class LeafGrid {
 public:
  LeafGrid(Rect domain, AxisMap xs, AxisMap ys, int max_level, bool periodic_y,
           std::vector<LeafCell> cells);

  const Rect& domain() const { return domain_; }
  const AxisMap& x_axis() const { return xs_; }
  const AxisMap& y_axis() const { return ys_; }
  int max_level() const { return max_level_; }
  bool periodic_y() const { return periodic_y_; }
  std::size_t size() const { return cells_.size(); }
  std::span<const LeafCell> cells() const { return cells_; }
  const LeafCell& cell(std::size_t i) const { return cells_[i]; }

  /// Index of a cell containing p; nullopt when p lies outside the domain.
  std::optional<int> locate(Point p) const;
  double min_element_size() const;

 private:
  Rect domain_;
  AxisMap xs_, ys_;
  int max_level_;
  bool periodic_y_;
  std::vector<LeafCell> cells_;
  std::unordered_map<CellKey, int, CellKeyHash> index_;
};

/// Quadtree of axis-aligned rectangles over a grid of roots, refined by
/// midpoint bisection and kept 1-irregular across edges (including periodic
/// edges when periodic in y).
class QuadtreeMesh {
 public:
  static constexpr int kMaxLevel = 60;

  struct Node {
    CellKey key;
    int parent = -1;
    int first_child = -1;  // children are first_child .. first_child+3
    bool is_leaf() const { return first_child < 0; }
  };

  explicit QuadtreeMesh(Rect domain, int roots_x = 1, int roots_y = 1,
                        bool periodic_y = false);
  static QuadtreeMesh uniform(Rect domain, int roots_x, int roots_y, int levels,
                              bool periodic_y = false);

  const Rect& domain() const { return domain_; }
  int roots_x() const { return roots_x_; }
  int roots_y() const { return roots_y_; }
  bool periodic_y() const { return periodic_y_; }

  std::size_t num_leaves() const { return leaves_.size(); }
  /// Node ids of leaves in deterministic depth-first order (roots row-major,
  /// children lower-left, lower-right, upper-left, upper-right).
  std::span<const int> leaves() const { return leaves_; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Rect rect(int id) const;
  int max_level() const;
  double min_element_size() const;
  std::vector<CellKey> leaf_keys() const;

  /// Refines the leaves at the given positions of leaves() plus whatever the
  /// 1-irregular closure requires.
  QuadtreeMesh refined(std::span<const int> marked_leaves) const;
  QuadtreeMesh refined_uniformly() const;

  bool is_one_irregular() const;
  LeafGrid leaf_grid() const;

 private:
  void split(int id);
  void rebuild_leaves();
  /// Deepest existing node at level <= `level` containing the level-`level`
  /// cell (ix, iy); nullopt outside the domain.  iy wraps when periodic.
  std::optional<int> covering(int level, std::int64_t ix, std::int64_t iy) const;

  Rect domain_;
  int roots_x_, roots_y_;
  bool periodic_y_;
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  std::unordered_map<CellKey, int, CellKeyHash> index_;
};

/// Conforming tensor-product mesh given by strictly increasing breakpoints.
class TensorMesh {
 public:
  TensorMesh(std::vector<double> xs, std::vector<double> ys, bool periodic_y = false);

  int mx() const { return static_cast<int>(xs_.size()) - 1; }
  int my() const { return static_cast<int>(ys_.size()) - 1; }
  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  Rect domain() const;
  std::size_t num_cells() const { return static_cast<std::size_t>(mx()) * my(); }
  double min_element_size() const;
  LeafGrid leaf_grid() const;

 private:
  std::vector<double> xs_, ys_;
  bool periodic_y_;
};

TensorMesh uniform_tensor(int mx, int my, Rect domain);

/// Starting from a single row, bisects rows until each row [y, y+h] satisfies
/// h <= hs*exp((y - y0)*rate) and h <= hs*exp((y1 - (y + h))*rate).
TensorMesh graded_tensor_y(int mx, double hs, double rate, Rect domain,
                           int max_levels = 60);

}  // namespace aniso
