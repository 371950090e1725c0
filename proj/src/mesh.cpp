#include "aniso/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "aniso/error.hpp"

namespace aniso {

// ---------------------------------------------------------------------------
// AxisMap

AxisMap AxisMap::dyadic(double origin, double length, std::int64_t intervals) {
  if (intervals < 1 || !(length > 0.0)) throw MeshError("AxisMap: invalid dyadic axis");
  AxisMap m;
  m.origin_ = origin;
  m.length_ = length;
  m.intervals_ = intervals;
  return m;
}

AxisMap AxisMap::table(std::vector<double> coords) {
  if (coords.size() < 2) throw MeshError("AxisMap: table needs at least two points");
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (!(coords[i] > coords[i - 1])) {
      throw MeshError("AxisMap: coordinates must be strictly increasing");
    }
  }
  AxisMap m;
  m.origin_ = coords.front();
  m.length_ = coords.back() - coords.front();
  m.intervals_ = static_cast<std::int64_t>(coords.size()) - 1;
  m.table_ = std::move(coords);
  return m;
}

double AxisMap::operator()(std::int64_t i) const {
  if (!table_.empty()) return table_[static_cast<std::size_t>(i)];
  if (i == intervals_) return origin_ + length_;
  return origin_ + length_ * (static_cast<double>(i) / static_cast<double>(intervals_));
}

std::int64_t AxisMap::locate(double x) const {
  std::int64_t k = 0;
  if (!table_.empty()) {
    auto it = std::upper_bound(table_.begin(), table_.end(), x);
    k = static_cast<std::int64_t>(it - table_.begin()) - 1;
  } else {
    k = static_cast<std::int64_t>(
        std::floor((x - origin_) / length_ * static_cast<double>(intervals_)));
  }
  return std::clamp<std::int64_t>(k, 0, intervals_ - 1);
}

// ---------------------------------------------------------------------------
// LeafGrid

LeafGrid::LeafGrid(Rect domain, AxisMap xs, AxisMap ys, int max_level, bool periodic_y,
                   std::vector<LeafCell> cells)
    : domain_(domain),
      xs_(std::move(xs)),
      ys_(std::move(ys)),
      max_level_(max_level),
      periodic_y_(periodic_y),
      cells_(std::move(cells)) {
  index_.reserve(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    index_.emplace(cells_[i].key, static_cast<int>(i));
  }
}

std::optional<int> LeafGrid::locate(Point p) const {
  const double tol = 1e-12 * std::max(domain_.hx, domain_.hy);
  if (!domain_.contains(p, tol)) return std::nullopt;
  const std::int64_t li = xs_.locate(p.x);
  const std::int64_t lj = ys_.locate(p.y);
  for (int level = max_level_; level >= 0; --level) {
    const int shift = max_level_ - level;
    auto it = index_.find(CellKey{level, li >> shift, lj >> shift});
    if (it != index_.end()) return it->second;
  }
  return std::nullopt;
}

double LeafGrid::min_element_size() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& c : cells_) h = std::min({h, c.rect.hx, c.rect.hy});
  return h;
}

// ---------------------------------------------------------------------------
// QuadtreeMesh

QuadtreeMesh::QuadtreeMesh(Rect domain, int roots_x, int roots_y, bool periodic_y)
    : domain_(domain), roots_x_(roots_x), roots_y_(roots_y), periodic_y_(periodic_y) {
  if (roots_x < 1 || roots_y < 1) throw MeshError("QuadtreeMesh: root counts must be >= 1");
  if (!(domain.hx > 0.0 && domain.hy > 0.0)) throw MeshError("QuadtreeMesh: empty domain");
  for (int j = 0; j < roots_y; ++j) {
    for (int i = 0; i < roots_x; ++i) {
      Node n;
      n.key = CellKey{0, i, j};
      index_.emplace(n.key, static_cast<int>(nodes_.size()));
      nodes_.push_back(n);
    }
  }
  rebuild_leaves();
}

QuadtreeMesh QuadtreeMesh::uniform(Rect domain, int roots_x, int roots_y, int levels,
                                   bool periodic_y) {
  QuadtreeMesh m(domain, roots_x, roots_y, periodic_y);
  for (int l = 0; l < levels; ++l) m = m.refined_uniformly();
  return m;
}

Rect QuadtreeMesh::rect(int id) const {
  const CellKey& k = node(id).key;
  const double sx = static_cast<double>(roots_x_) * std::ldexp(1.0, k.level);
  const double sy = static_cast<double>(roots_y_) * std::ldexp(1.0, k.level);
  const double x0 = domain_.x0 + domain_.hx * (static_cast<double>(k.ix) / sx);
  const double y0 = domain_.y0 + domain_.hy * (static_cast<double>(k.iy) / sy);
  const double x1 = domain_.x0 + domain_.hx * (static_cast<double>(k.ix + 1) / sx);
  const double y1 = domain_.y0 + domain_.hy * (static_cast<double>(k.iy + 1) / sy);
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

int QuadtreeMesh::max_level() const {
  int l = 0;
  for (int id : leaves_) l = std::max(l, node(id).key.level);
  return l;
}

double QuadtreeMesh::min_element_size() const {
  double h = std::numeric_limits<double>::infinity();
  for (int id : leaves_) {
    const Rect r = rect(id);
    h = std::min({h, r.hx, r.hy});
  }
  return h;
}

std::vector<CellKey> QuadtreeMesh::leaf_keys() const {
  std::vector<CellKey> keys;
  keys.reserve(leaves_.size());
  for (int id : leaves_) keys.push_back(node(id).key);
  return keys;
}

void QuadtreeMesh::split(int id) {
  const CellKey k = nodes_[static_cast<std::size_t>(id)].key;
  if (k.level >= kMaxLevel) {
    throw MeshError("QuadtreeMesh: refinement beyond level " + std::to_string(kMaxLevel));
  }
  const int first = static_cast<int>(nodes_.size());
  nodes_[static_cast<std::size_t>(id)].first_child = first;
  for (int c = 0; c < 4; ++c) {
    Node child;
    child.key = CellKey{k.level + 1, 2 * k.ix + (c & 1), 2 * k.iy + (c >> 1)};
    child.parent = id;
    index_.emplace(child.key, static_cast<int>(nodes_.size()));
    nodes_.push_back(child);
  }
}

void QuadtreeMesh::rebuild_leaves() {
  leaves_.clear();
  std::vector<int> stack;
  const int roots = roots_x_ * roots_y_;
  for (int r = 0; r < roots; ++r) {
    stack.push_back(r);
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const Node& n = node(id);
      if (n.is_leaf()) {
        leaves_.push_back(id);
      } else {
        for (int c = 3; c >= 0; --c) stack.push_back(n.first_child + c);
      }
    }
  }
}

std::optional<int> QuadtreeMesh::covering(int level, std::int64_t ix, std::int64_t iy) const {
  const std::int64_t nx = static_cast<std::int64_t>(roots_x_) << level;
  const std::int64_t ny = static_cast<std::int64_t>(roots_y_) << level;
  if (ix < 0 || ix >= nx) return std::nullopt;
  if (iy < 0 || iy >= ny) {
    if (!periodic_y_) return std::nullopt;
    iy = ((iy % ny) + ny) % ny;
  }
  for (int l = level; l >= 0; --l) {
    const int shift = level - l;
    auto it = index_.find(CellKey{l, ix >> shift, iy >> shift});
    if (it != index_.end()) return it->second;
  }
  return std::nullopt;
}

namespace {
constexpr int kDirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
}

QuadtreeMesh QuadtreeMesh::refined(std::span<const int> marked_leaves) const {
  QuadtreeMesh out = *this;
  std::set<int> queue;
  for (int pos : marked_leaves) {
    if (pos < 0 || static_cast<std::size_t>(pos) >= leaves_.size()) {
      throw MeshError("QuadtreeMesh::refined: marked index is not a leaf");
    }
    queue.insert(leaves_[static_cast<std::size_t>(pos)]);
  }
  while (!queue.empty()) {
    const int id = *queue.begin();
    queue.erase(queue.begin());
    if (!out.node(id).is_leaf()) continue;
    const CellKey k = out.node(id).key;
    for (const auto& d : kDirs) {
      auto nb = out.covering(k.level, k.ix + d[0], k.iy + d[1]);
      if (nb && out.node(*nb).is_leaf() && out.node(*nb).key.level < k.level) {
        queue.insert(*nb);
      }
    }
    out.split(id);
  }
  out.rebuild_leaves();
  return out;
}

QuadtreeMesh QuadtreeMesh::refined_uniformly() const {
  std::vector<int> all(leaves_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return refined(all);
}

bool QuadtreeMesh::is_one_irregular() const {
  for (int id : leaves_) {
    const CellKey k = node(id).key;
    for (const auto& d : kDirs) {
      auto nb = covering(k.level, k.ix + d[0], k.iy + d[1]);
      if (nb && node(*nb).is_leaf() && node(*nb).key.level < k.level - 1) return false;
    }
  }
  return true;
}

LeafGrid QuadtreeMesh::leaf_grid() const {
  const int lmax = max_level();
  if (lmax > 61 - static_cast<int>(std::ceil(std::log2(std::max(roots_x_, roots_y_) + 1.0)))) {
    throw MeshError("QuadtreeMesh: refinement too deep for the integer lattice");
  }
  AxisMap xs = AxisMap::dyadic(domain_.x0, domain_.hx, static_cast<std::int64_t>(roots_x_) << lmax);
  AxisMap ys = AxisMap::dyadic(domain_.y0, domain_.hy, static_cast<std::int64_t>(roots_y_) << lmax);
  std::vector<LeafCell> cells;
  cells.reserve(leaves_.size());
  for (int id : leaves_) {
    const CellKey k = node(id).key;
    const int shift = lmax - k.level;
    LeafCell c;
    c.key = k;
    c.i0 = k.ix << shift;
    c.i1 = (k.ix + 1) << shift;
    c.j0 = k.iy << shift;
    c.j1 = (k.iy + 1) << shift;
    c.rect = Rect{xs(c.i0), ys(c.j0), xs(c.i1) - xs(c.i0), ys(c.j1) - ys(c.j0)};
    cells.push_back(c);
  }
  return LeafGrid(domain_, std::move(xs), std::move(ys), lmax, periodic_y_, std::move(cells));
}

// ---------------------------------------------------------------------------
// TensorMesh

TensorMesh::TensorMesh(std::vector<double> xs, std::vector<double> ys, bool periodic_y)
    : xs_(std::move(xs)), ys_(std::move(ys)), periodic_y_(periodic_y) {
  auto check = [](const std::vector<double>& v, const char* axis) {
    if (v.size() < 2) throw MeshError(std::string("TensorMesh: need >= 2 ") + axis + " breakpoints");
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] > v[i - 1])) {
        throw MeshError(std::string("TensorMesh: ") + axis + " breakpoints not strictly increasing");
      }
    }
  };
  check(xs_, "x");
  check(ys_, "y");
}

Rect TensorMesh::domain() const {
  return Rect{xs_.front(), ys_.front(), xs_.back() - xs_.front(), ys_.back() - ys_.front()};
}

double TensorMesh::min_element_size() const {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < xs_.size(); ++i) h = std::min(h, xs_[i] - xs_[i - 1]);
  for (std::size_t j = 1; j < ys_.size(); ++j) h = std::min(h, ys_[j] - ys_[j - 1]);
  return h;
}

LeafGrid TensorMesh::leaf_grid() const {
  std::vector<LeafCell> cells;
  cells.reserve(num_cells());
  for (int j = 0; j < my(); ++j) {
    for (int i = 0; i < mx(); ++i) {
      LeafCell c;
      c.key = CellKey{0, i, j};
      c.i0 = i;
      c.i1 = i + 1;
      c.j0 = j;
      c.j1 = j + 1;
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      c.rect = Rect{xs_[ui], ys_[uj], xs_[ui + 1] - xs_[ui], ys_[uj + 1] - ys_[uj]};
      cells.push_back(c);
    }
  }
  return LeafGrid(domain(), AxisMap::table(xs_), AxisMap::table(ys_), 0, periodic_y_,
                  std::move(cells));
}

namespace {
std::vector<double> uniform_breaks(double a, double length, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    v[static_cast<std::size_t>(i)] = a + length * (static_cast<double>(i) / n);
  }
  v.back() = a + length;
  return v;
}
}  // namespace

TensorMesh uniform_tensor(int mx, int my, Rect domain) {
  if (mx < 1 || my < 1) throw MeshError("uniform_tensor: cell counts must be >= 1");
  return TensorMesh(uniform_breaks(domain.x0, domain.hx, mx),
                    uniform_breaks(domain.y0, domain.hy, my));
}

TensorMesh graded_tensor_y(int mx, double hs, double rate, Rect domain, int max_levels) {
  if (mx < 1) throw MeshError("graded_tensor_y: mx must be >= 1");
  const double ly = domain.hy;
  if (!(hs > 0.0 && hs < ly)) throw MeshError("graded_tensor_y: need 0 < hs < Ly");
  if (!(rate >= 0.0)) throw MeshError("graded_tensor_y: growth rate must be >= 0");
  // Rows touching y0 or y1 need h <= hs.
  if (std::ceil(std::log2(ly / hs) - 1e-12) > max_levels) {
    throw MeshError("graded_tensor_y: layer size hs=" + std::to_string(hs) + " needs more than " +
                    std::to_string(max_levels) + " bisection levels");
  }
  constexpr std::size_t kMaxRows = std::size_t{1} << 24;

  struct Row {
    int level;
    std::int64_t index;
  };
  auto violates = [&](const Row& r) {
    const double h = std::ldexp(ly, -r.level);
    const double a = h * static_cast<double>(r.index);
    return h > hs * std::exp(a * rate) || h > hs * std::exp((ly - (a + h)) * rate);
  };

  std::vector<Row> rows{{0, 0}};
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<Row> next;
    next.reserve(rows.size() * 2);
    for (const Row& r : rows) {
      if (!violates(r)) {
        next.push_back(r);
        continue;
      }
      if (r.level >= max_levels) {
        throw MeshError("graded_tensor_y: layer size hs=" + std::to_string(hs) +
                        " needs more than " + std::to_string(max_levels) +
                        " bisection levels");
      }
      next.push_back({r.level + 1, 2 * r.index});
      next.push_back({r.level + 1, 2 * r.index + 1});
      changed = true;
    }
    rows = std::move(next);
    if (rows.size() > kMaxRows) {
      throw MeshError("graded_tensor_y: more than " + std::to_string(kMaxRows) + " rows");
    }
  }

  std::vector<double> ys;
  ys.reserve(rows.size() + 1);
  for (const Row& r : rows) {
    ys.push_back(domain.y0 + std::ldexp(ly, -r.level) * static_cast<double>(r.index));
  }
  ys.push_back(domain.y1());
  return TensorMesh(uniform_breaks(domain.x0, domain.hx, mx), std::move(ys));
}

}  // namespace aniso
