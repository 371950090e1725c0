#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aniso/estimator.hpp"
#include "aniso/fespace.hpp"
#include "aniso/mesh.hpp"

namespace aniso {

/// Column-oriented result table written as CSV.
struct Table {
  using Value = std::variant<std::int64_t, double, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
  /// Throws Error when the row width differs from the column count.
  void add(std::vector<Value> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  /// Rows of `other` appended; columns must match.
  void append(const Table& other);
};

/// Lines of `comments` become '#'-prefixed header lines (multi-line strings
/// are split).  Doubles use 12 significant digits and NaN is written empty.
void write_csv(std::ostream& os, const Table& t, std::span<const std::string> comments = {});
std::string format_value(const Table::Value& v);

/// Legacy ASCII VTK unstructured grid of the leaves, one VTK_QUAD per cell
/// in grid order.  Cell data: refinement level and max(hx, hy).
void write_vtk(std::ostream& os, const LeafGrid& grid, const std::string& title = "mesh");
/// Same, with the field as point data and optional per-cell indicators.
void write_vtk(std::ostream& os, const FESpace& space, std::span<const double> u,
               const std::string& field_name, std::span<const ElementEstimate> eta = {},
               const std::string& title = "solution");

}  // namespace aniso
