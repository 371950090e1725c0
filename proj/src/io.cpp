#include "aniso/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "aniso/error.hpp"

namespace aniso {

void Table::add(std::vector<Value> row) {
  if (row.size() != columns.size()) {
    throw Error("table row has " + std::to_string(row.size()) + " values for " +
                std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error("table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  const Value& v = rows.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw Error("column '" + name + "' is not numeric");
}

void Table::append(const Table& other) {
  if (other.columns != columns) throw Error("table append: column mismatch");
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string format_value(const Table::Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  const double d = std::get<double>(v);
  if (std::isnan(d)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", d);
  return buf;
}

void write_csv(std::ostream& os, const Table& t, std::span<const std::string> comments) {
  for (const auto& c : comments) {
    std::istringstream lines(c);
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << '\n';
  }
  for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_value(row[j]);
    os << '\n';
  }
}

namespace {

struct VtkPoints {
  std::vector<Point> coords;
  std::vector<std::array<int, 4>> quads;  // counter-clockwise from lower-left
  std::vector<std::pair<std::size_t, int>> owner;  // first (cell, corner) per point
};

VtkPoints collect(const LeafGrid& grid) {
  VtkPoints v;
  std::map<std::pair<std::int64_t, std::int64_t>, int> index;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const LeafCell& cell = grid.cell(c);
    const std::array<std::pair<std::int64_t, std::int64_t>, 4> corners{
        {{cell.i0, cell.j0}, {cell.i1, cell.j0}, {cell.i1, cell.j1}, {cell.i0, cell.j1}}};
    std::array<int, 4> q{};
    for (int k = 0; k < 4; ++k) {
      auto [it, fresh] = index.try_emplace(corners[k], static_cast<int>(v.coords.size()));
      if (fresh) {
        v.coords.push_back({grid.x_axis()(corners[k].first), grid.y_axis()(corners[k].second)});
        v.owner.emplace_back(c, k);
      }
      q[k] = it->second;
    }
    v.quads.push_back(q);
  }
  return v;
}

void write_geometry(std::ostream& os, const LeafGrid& grid, const VtkPoints& v,
                    const std::string& title) {
  char buf[96];
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << v.coords.size() << " double\n";
  for (const auto& p : v.coords) {
    std::snprintf(buf, sizeof buf, "%.15g %.15g 0\n", p.x, p.y);
    os << buf;
  }
  os << "CELLS " << v.quads.size() << ' ' << 5 * v.quads.size() << '\n';
  for (const auto& q : v.quads) os << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  os << "CELL_TYPES " << v.quads.size() << '\n';
  for (std::size_t i = 0; i < v.quads.size(); ++i) os << "9\n";
  os << "CELL_DATA " << grid.size() << "\nSCALARS level int 1\nLOOKUP_TABLE default\n";
  for (const auto& c : grid.cells()) os << c.key.level << '\n';
  os << "SCALARS size double 1\nLOOKUP_TABLE default\n";
  for (const auto& c : grid.cells()) {
    std::snprintf(buf, sizeof buf, "%.15g\n", std::max(c.rect.hx, c.rect.hy));
    os << buf;
  }
}

}  // namespace

void write_vtk(std::ostream& os, const LeafGrid& grid, const std::string& title) {
  write_geometry(os, grid, collect(grid), title);
}

void write_vtk(std::ostream& os, const FESpace& space, std::span<const double> u,
               const std::string& field_name, std::span<const ElementEstimate> eta,
               const std::string& title) {
  const LeafGrid& grid = space.grid();
  const VtkPoints v = collect(grid);
  write_geometry(os, grid, v, title);
  char buf[48];
  if (!eta.empty()) {
    std::vector<double> cell_eta(grid.size(), 0.0);
    for (const auto& e : eta) cell_eta.at(e.element) = e.eta;
    os << "SCALARS eta double 1\nLOOKUP_TABLE default\n";
    for (double e : cell_eta) {
      std::snprintf(buf, sizeof buf, "%.15g\n", e);
      os << buf;
    }
  }
  static constexpr double kCornerS[4] = {0.0, 1.0, 1.0, 0.0};
  static constexpr double kCornerT[4] = {0.0, 0.0, 1.0, 1.0};
  os << "POINT_DATA " << v.coords.size() << "\nSCALARS " << field_name
     << " double 1\nLOOKUP_TABLE default\n";
  for (const auto& [cell, k] : v.owner) {
    std::snprintf(buf, sizeof buf, "%.15g\n", space.value_in_cell(u, cell, kCornerS[k], kCornerT[k]));
    os << buf;
  }
}

}  // namespace aniso
