#include "aniso/fespace.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "aniso/basis.hpp"
#include "aniso/error.hpp"

namespace aniso {

namespace {

// Topological entity on the finest lattice: vertex (i, j), horizontal edge
// (i0, i1, j) or vertical edge (i, j0, j1).
struct EntityKey {
  int type;
  std::int64_t a, b, c;
  friend bool operator==(const EntityKey&, const EntityKey&) = default;
};

struct EntityKeyHash {
  std::size_t operator()(const EntityKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.type) + 0x9E3779B97F4A7C15ULL;
    for (std::int64_t v : {k.a, k.b, k.c}) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

struct RawDof {
  Point point;
  int side = -1;
  bool constrained = false;
  std::vector<std::pair<int, double>> masters;  // raw dof, weight
};

}  // namespace

FESpace::FESpace(LeafGrid grid, int p, const BoundarySpec& bc, bool dirichlet)
    : grid_(std::move(grid)), p_(p) {
  if (bc.periodic_y != grid_.periodic_y()) {
    throw ConfigError("FESpace: periodic pairing of the boundary data does not match the mesh");
  }
  const auto nodes = gll_nodes(p);
  const int np = p + 1;
  const int ne = p - 1;
  const AxisMap& X = grid_.x_axis();
  const AxisMap& Y = grid_.y_axis();
  const std::int64_t ni = X.intervals();
  const std::int64_t nj = Y.intervals();
  const bool periodic = grid_.periodic_y();
  auto cj = [&](std::int64_t j) { return periodic && j == nj ? std::int64_t{0} : j; };

  std::vector<RawDof> raw;
  std::unordered_map<EntityKey, int, EntityKeyHash> entity;

  auto vertex = [&](std::int64_t i, std::int64_t j) {
    const EntityKey k{0, i, cj(j), 0};
    auto [it, fresh] = entity.try_emplace(k, static_cast<int>(raw.size()));
    if (fresh) {
      RawDof d;
      d.point = {X(i), Y(cj(j))};
      if (dirichlet) {
        if (i == 0) d.side = 0;
        else if (i == ni) d.side = 1;
        else if (!periodic && j == 0) d.side = 2;
        else if (!periodic && j == nj) d.side = 3;
      }
      raw.push_back(std::move(d));
    }
    return it->second;
  };
  auto hedge = [&](std::int64_t i0, std::int64_t i1, std::int64_t j) {
    const EntityKey k{1, i0, i1, cj(j)};
    auto [it, fresh] = entity.try_emplace(k, static_cast<int>(raw.size()));
    if (fresh) {
      for (int m = 1; m <= ne; ++m) {
        RawDof d;
        d.point = {X(i0) + nodes[m] * (X(i1) - X(i0)), Y(cj(j))};
        if (dirichlet && !periodic) {
          if (j == 0) d.side = 2;
          else if (j == nj) d.side = 3;
        }
        raw.push_back(std::move(d));
      }
    }
    return it->second;
  };
  auto vedge = [&](std::int64_t i, std::int64_t j0, std::int64_t j1) {
    const EntityKey k{2, i, j0, j1};
    auto [it, fresh] = entity.try_emplace(k, static_cast<int>(raw.size()));
    if (fresh) {
      for (int m = 1; m <= ne; ++m) {
        RawDof d;
        d.point = {X(i), Y(j0) + nodes[m] * (Y(j1) - Y(j0))};
        if (dirichlet) {
          if (i == 0) d.side = 0;
          else if (i == ni) d.side = 1;
        }
        raw.push_back(std::move(d));
      }
    }
    return it->second;
  };

  // Register entities cell by cell and record raw dofs per local slot.
  const std::size_t nc = grid_.size();
  const int ls = local_size();
  std::vector<int> slots(nc * static_cast<std::size_t>(ls));
  for (std::size_t c = 0; c < nc; ++c) {
    const LeafCell& cell = grid_.cell(c);
    int* s = &slots[c * static_cast<std::size_t>(ls)];
    s[0] = vertex(cell.i0, cell.j0);
    s[p] = vertex(cell.i1, cell.j0);
    s[p * np] = vertex(cell.i0, cell.j1);
    s[p * np + p] = vertex(cell.i1, cell.j1);
    const int eb = hedge(cell.i0, cell.i1, cell.j0);
    const int et = hedge(cell.i0, cell.i1, cell.j1);
    const int el = vedge(cell.i0, cell.j0, cell.j1);
    const int er = vedge(cell.i1, cell.j0, cell.j1);
    for (int m = 1; m <= ne; ++m) {
      s[m] = eb + m - 1;
      s[p * np + m] = et + m - 1;
      s[m * np] = el + m - 1;
      s[m * np + p] = er + m - 1;
    }
    for (int b = 1; b <= ne; ++b) {
      for (int a = 1; a <= ne; ++a) {
        RawDof d;
        d.point = {cell.rect.x0 + nodes[a] * cell.rect.hx, cell.rect.y0 + nodes[b] * cell.rect.hy};
        s[b * np + a] = static_cast<int>(raw.size());
        raw.push_back(std::move(d));
      }
    }
  }

  // Hanging edges: a cell edge whose midpoint is a vertex of the neighbours
  // on the other side.  Its two halves and the midpoint follow the trace.
  std::vector<double> w(static_cast<std::size_t>(np));
  auto constrain = [&](int slave, const std::vector<int>& trace, double t) {
    lagrange_values(nodes, t, w);
    RawDof& d = raw[static_cast<std::size_t>(slave)];
    if (d.constrained) return;
    d.constrained = true;
    for (int k = 0; k < np; ++k) {
      if (std::abs(w[k]) > 1e-15) d.masters.emplace_back(trace[k], w[k]);
    }
  };
  auto find = [&](const EntityKey& k) -> std::optional<int> {
    auto it = entity.find(k);
    if (it == entity.end()) return std::nullopt;
    return it->second;
  };
  std::unordered_set<EntityKey, EntityKeyHash> done;
  for (std::size_t c = 0; c < nc; ++c) {
    const LeafCell& cell = grid_.cell(c);
    for (int e = 0; e < 4; ++e) {
      const bool horizontal = e < 2;
      const std::int64_t lo = horizontal ? cell.i0 : cell.j0;
      const std::int64_t hi = horizontal ? cell.i1 : cell.j1;
      if ((hi - lo) % 2 != 0) continue;
      const std::int64_t mid = (lo + hi) / 2;
      const std::int64_t fixed =
          horizontal ? cj(e == 0 ? cell.j0 : cell.j1) : (e == 2 ? cell.i0 : cell.i1);
      const EntityKey mv = horizontal ? EntityKey{0, mid, fixed, 0} : EntityKey{0, fixed, cj(mid), 0};
      const auto mid_vertex = find(mv);
      if (!mid_vertex) continue;
      const EntityKey master = horizontal ? EntityKey{1, lo, hi, fixed} : EntityKey{2, fixed, lo, hi};
      if (!done.insert(master).second) continue;
      const EntityKey h1 = horizontal ? EntityKey{1, lo, mid, fixed} : EntityKey{2, fixed, lo, mid};
      const EntityKey h2 = horizontal ? EntityKey{1, mid, hi, fixed} : EntityKey{2, fixed, mid, hi};
      const auto e1 = find(h1);
      const auto e2 = find(h2);
      if (!e1 || !e2) {
        throw MeshError("FESpace: mesh is not 1-irregular near cell " + std::to_string(c));
      }
      std::vector<int> trace(static_cast<std::size_t>(np));
      const int me = entity.at(master);
      if (horizontal) {
        trace[0] = entity.at(EntityKey{0, lo, fixed, 0});
        trace[p] = entity.at(EntityKey{0, hi, fixed, 0});
      } else {
        trace[0] = entity.at(EntityKey{0, fixed, cj(lo), 0});
        trace[p] = entity.at(EntityKey{0, fixed, cj(hi), 0});
      }
      for (int m = 1; m <= ne; ++m) trace[m] = me + m - 1;
      constrain(*mid_vertex, trace, 0.5);
      for (int m = 1; m <= ne; ++m) {
        constrain(*e1 + m - 1, trace, 0.5 * nodes[m]);
        constrain(*e2 + m - 1, trace, 0.5 + 0.5 * nodes[m]);
      }
    }
  }

  // Number the true dofs lexicographically by (y, x).
  std::vector<int> order;
  for (int r = 0; r < static_cast<int>(raw.size()); ++r) {
    if (!raw[r].constrained) order.push_back(r);
    else ++num_constrained_;
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Point pa = raw[a].point, pb = raw[b].point;
    if (pa.y != pb.y) return pa.y < pb.y;
    if (pa.x != pb.x) return pa.x < pb.x;
    return a < b;
  });
  std::vector<int> true_id(raw.size(), -1);
  points_.resize(order.size());
  side_.resize(order.size());
  free_index_.assign(order.size(), -1);
  for (std::size_t t = 0; t < order.size(); ++t) {
    const RawDof& d = raw[static_cast<std::size_t>(order[t])];
    true_id[static_cast<std::size_t>(order[t])] = static_cast<int>(t);
    points_[t] = d.point;
    side_[t] = static_cast<signed char>(d.side);
    if (d.side < 0) {
      free_index_[t] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(t));
    }
  }

  // Resolve constrained dofs recursively onto true dofs.
  std::vector<std::optional<std::vector<Term>>> memo(raw.size());
  std::function<const std::vector<Term>&(int, int)> resolve =
      [&](int r, int depth) -> const std::vector<Term>& {
    auto& slot = memo[static_cast<std::size_t>(r)];
    if (slot) return *slot;
    if (depth > 64) throw MeshError("FESpace: cyclic hanging-node constraints");
    const RawDof& d = raw[static_cast<std::size_t>(r)];
    if (!d.constrained) {
      slot = std::vector<Term>{{true_id[static_cast<std::size_t>(r)], 1.0}};
      return *slot;
    }
    std::map<int, double> acc;
    for (const auto& [m, wm] : d.masters) {
      for (const Term& t : resolve(m, depth + 1)) acc[t.dof] += wm * t.weight;
    }
    std::vector<Term> out;
    for (const auto& [dof, wt] : acc) {
      if (std::abs(wt) > 1e-15) out.push_back({dof, wt});
    }
    slot = std::move(out);
    return *slot;
  };

  slot_begin_.reserve(slots.size() + 1);
  slot_begin_.push_back(0);
  for (int r : slots) {
    const auto& ex = resolve(r, 0);
    terms_.insert(terms_.end(), ex.begin(), ex.end());
    slot_begin_.push_back(terms_.size());
  }
}

Side FESpace::dirichlet_side(int dof) const {
  const int s = side_[static_cast<std::size_t>(dof)];
  if (s < 0) throw Error("FESpace: dof " + std::to_string(dof) + " is not a Dirichlet dof");
  return static_cast<Side>(s);
}

std::span<const FESpace::Term> FESpace::expansion(std::size_t cell, int l) const {
  const std::size_t k = cell * static_cast<std::size_t>(local_size()) + static_cast<std::size_t>(l);
  return {terms_.data() + slot_begin_[k], slot_begin_[k + 1] - slot_begin_[k]};
}

std::vector<double> FESpace::interpolate(const std::function<double(Point)>& f) const {
  std::vector<double> u(num_dofs());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(points_[i]);
  return u;
}

std::vector<double> FESpace::boundary_vector(const FieldModel& model) const {
  std::vector<double> u(num_dofs(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (side_[i] >= 0) u[i] = model.boundary_value(static_cast<Side>(side_[i]), points_[i]);
  }
  return u;
}

void FESpace::local_coefficients(std::span<const double> u, std::size_t cell,
                                 std::span<double> out) const {
  for (int l = 0; l < local_size(); ++l) {
    double v = 0.0;
    for (const Term& t : expansion(cell, l)) v += t.weight * u[static_cast<std::size_t>(t.dof)];
    out[static_cast<std::size_t>(l)] = v;
  }
}

double FESpace::value_in_cell(std::span<const double> u, std::size_t cell, double s,
                              double t) const {
  const auto nodes = gll_nodes(p_);
  const int np = p_ + 1;
  double c[16], bs[4], bt[4];
  local_coefficients(u, cell, std::span<double>(c, static_cast<std::size_t>(np * np)));
  lagrange_values(nodes, s, std::span<double>(bs, static_cast<std::size_t>(np)));
  lagrange_values(nodes, t, std::span<double>(bt, static_cast<std::size_t>(np)));
  double v = 0.0;
  for (int b = 0; b < np; ++b) {
    for (int a = 0; a < np; ++a) v += c[b * np + a] * bs[a] * bt[b];
  }
  return v;
}

Vec2 FESpace::gradient_in_cell(std::span<const double> u, std::size_t cell, double s,
                               double t) const {
  const auto nodes = gll_nodes(p_);
  const int np = p_ + 1;
  double c[16], bs[4], ds[4], bt[4], dt[4];
  local_coefficients(u, cell, std::span<double>(c, static_cast<std::size_t>(np * np)));
  lagrange_basis(nodes, s, std::span<double>(bs, 4), std::span<double>(ds, 4));
  lagrange_basis(nodes, t, std::span<double>(bt, 4), std::span<double>(dt, 4));
  double gx = 0.0, gy = 0.0;
  for (int b = 0; b < np; ++b) {
    for (int a = 0; a < np; ++a) {
      gx += c[b * np + a] * ds[a] * bt[b];
      gy += c[b * np + a] * bs[a] * dt[b];
    }
  }
  const Rect& r = grid_.cell(cell).rect;
  return {gx / r.hx, gy / r.hy};
}

std::pair<std::size_t, Vec2> FESpace::locate(Point x) const {
  const auto c = grid_.locate(x);
  if (!c) throw Error("point outside the domain");
  const Rect& r = grid_.cell(static_cast<std::size_t>(*c)).rect;
  const double s = std::clamp((x.x - r.x0) / r.hx, 0.0, 1.0);
  const double t = std::clamp((x.y - r.y0) / r.hy, 0.0, 1.0);
  return {static_cast<std::size_t>(*c), Vec2{s, t}};
}

double FESpace::evaluate(std::span<const double> u, Point x) const {
  const auto [c, st] = locate(x);
  return value_in_cell(u, c, st.x, st.y);
}

Vec2 FESpace::evaluate_gradient(std::span<const double> u, Point x) const {
  const auto [c, st] = locate(x);
  return gradient_in_cell(u, c, st.x, st.y);
}

}  // namespace aniso
