#include "aniso/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "aniso/error.hpp"

namespace aniso {

void ScalingInputs::validate() const {
  if (!(w > 0.0 && L > w)) throw ConfigError("scaling: need L > w > 0");
  if (J < 1) throw ConfigError("scaling: need J >= 1");
  if (d != 2 && d != 3) throw ConfigError("scaling: dimension must be 2 or 3");
  for (double n : {n_r, n_p, n_t, n_s, n_par}) {
    if (!(n >= 1.0)) throw ConfigError("scaling: resolution counts must be >= 1");
  }
}

ElementCounts closed_forms(const ScalingInputs& in) {
  in.validate();
  const double r = in.L / in.w;
  const double lg = std::log(r);
  const double d = in.d;
  const double j = in.J;
  ElementCounts c{};
  c.uniform = std::pow(r, d);
  c.aniso_layer = j + 1.0;
  c.iso_layer_2d = 3.0 * std::pow(2.0, j) - 2.0;
  c.iso_layer_3d = 7.0 / 3.0 * std::pow(4.0, j) - 4.0 / 3.0;
  c.iso_general = std::pow(r, d - 1.0);
  c.aniso_general = std::pow(in.n_s, d - 1.0) * in.n_r * lg;
  c.aniso_2d = in.n_p * in.n_r * lg;
  c.aniso_3d = in.n_p * in.n_t * in.n_r * lg;
  c.corner = std::pow(2.0, d) * j;
  c.interior_point = std::pow(2.0, 2.0 * d) * j;
  c.filament_iso = 3.0 * std::pow(2.0, 2.0 * (d - 1.0)) * r;
  c.filament_aniso = in.n_par * std::pow(2.0, 2.0 * (d - 1.0)) * lg;
  return c;
}

std::string to_string(RecursionTarget t) {
  switch (t) {
    case RecursionTarget::boundary_layer: return "boundary_layer";
    case RecursionTarget::corner: return "corner";
    case RecursionTarget::filament: return "filament";
  }
  return "?";
}

RecursionTarget parse_recursion_target(const std::string& s) {
  for (auto t : {RecursionTarget::boundary_layer, RecursionTarget::corner,
                 RecursionTarget::filament}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown recursion target '" + s + "'");
}

namespace {

// Per-axis target set: the whole axis, the point 0, or the point 1/2.
enum class AxisTarget { all, zero, half };

struct Recursion {
  int d;
  int J;
  std::vector<AxisTarget> axes;
  std::vector<bool> splits;  // axes bisected at each round
  std::map<std::vector<std::int64_t>, std::uint64_t> memo;

  bool touches(std::span<const std::int64_t> idx, std::span<const int> levels) const {
    for (int k = 0; k < d; ++k) {
      const std::int64_t n = std::int64_t{1} << levels[k];
      switch (axes[k]) {
        case AxisTarget::all: break;
        case AxisTarget::zero:
          if (idx[k] != 0) return false;
          break;
        case AxisTarget::half:
          // Closed interval [i/n, (i+1)/n] contains 1/2.
          if (2 * idx[k] > n || 2 * (idx[k] + 1) < n) return false;
          break;
      }
    }
    return true;
  }

  // Canonical key under the symmetries of the target: translations along
  // full axes and reflection about 1/2.
  std::vector<std::int64_t> key(int round, std::span<const std::int64_t> idx,
                                std::span<const int> levels) const {
    std::vector<std::int64_t> k{round};
    for (int a = 0; a < d; ++a) {
      const std::int64_t n = std::int64_t{1} << levels[a];
      switch (axes[a]) {
        case AxisTarget::all: k.push_back(0); break;
        case AxisTarget::zero: k.push_back(idx[a]); break;
        case AxisTarget::half: k.push_back(std::min(idx[a], n - 1 - idx[a])); break;
      }
    }
    return k;
  }

  std::uint64_t visit(int round, std::vector<std::int64_t>& idx, std::vector<int>& levels) {
    if (round == J || !touches(idx, levels)) return 1;
    const auto k = key(round, idx, levels);
    if (auto it = memo.find(k); it != memo.end()) return it->second;
    std::uint64_t total = 0;
    std::vector<int> child_levels = levels;
    for (int a = 0; a < d; ++a) child_levels[a] += splits[a] ? 1 : 0;
    const int split_axes = static_cast<int>(std::count(splits.begin(), splits.end(), true));
    for (int c = 0; c < (1 << split_axes); ++c) {
      std::vector<std::int64_t> child(idx.size());
      int bit = 0;
      for (int a = 0; a < d; ++a) {
        child[a] = splits[a] ? 2 * idx[a] + ((c >> bit++) & 1) : idx[a];
      }
      const std::uint64_t sub = visit(round + 1, child, child_levels);
      if (__builtin_add_overflow(total, sub, &total)) {
        throw Error("simulate_recursion: element count overflows 64 bits");
      }
    }
    memo.emplace(k, total);
    return total;
  }
};

}  // namespace

std::uint64_t simulate_recursion(int d, int J, RecursionTarget target, SplitMode mode) {
  if (d < 1 || d > 3) throw ConfigError("simulate_recursion: dimension must be 1, 2 or 3");
  if (J < 0) throw ConfigError("simulate_recursion: need J >= 0");
  if (mode == SplitMode::anisotropic && target != RecursionTarget::boundary_layer) {
    throw ConfigError("simulate_recursion: anisotropic splitting needs the boundary_layer target");
  }
  Recursion r{d, J, std::vector<AxisTarget>(static_cast<std::size_t>(d), AxisTarget::all),
              std::vector<bool>(static_cast<std::size_t>(d), true), {}};
  // Axis 0 is x, axis 1 is y (normal to the layer), axis 2 is z.
  const int normal = d >= 2 ? 1 : 0;
  switch (target) {
    case RecursionTarget::boundary_layer: r.axes[normal] = AxisTarget::zero; break;
    case RecursionTarget::corner:
      std::fill(r.axes.begin(), r.axes.end(), AxisTarget::zero);
      break;
    case RecursionTarget::filament:
      std::fill(r.axes.begin(), r.axes.end(), AxisTarget::half);
      r.axes[0] = AxisTarget::all;
      break;
  }
  if (mode == SplitMode::anisotropic) {
    std::fill(r.splits.begin(), r.splits.end(), false);
    r.splits[normal] = true;
  }
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<int> levels(static_cast<std::size_t>(d), 0);
  if (J > 62) throw Error("simulate_recursion: J too large for the integer lattice");
  return r.visit(0, idx, levels);
}

double cost_model(const ScalingInputs& in, CostRegime regime) {
  if (!(in.w > 0.0 && in.L >= in.w)) throw ConfigError("cost_model: need L >= w > 0");
  const double r = in.L / in.w;
  switch (regime) {
    case CostRegime::uniform: return std::pow(r, in.d + 1);
    case CostRegime::iso_amr: return std::pow(r, in.d);
    case CostRegime::aniso_amr: return r * std::log(r);
  }
  return 0.0;
}

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("fit_power_law: need >= 2 pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw Error("fit_power_law: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 1e-300)) throw Error("fit_power_law: x values are not distinct");
  const double beta = (n * sxy - sx * sy) / den;
  return {beta, std::exp((sy - beta * sx) / n)};
}

double dofs_at_error(std::span<const double> dofs, std::span<const double> error, double target) {
  for (std::size_t i = 0; i < error.size(); ++i) {
    if (!(error[i] <= target)) continue;
    if (i == 0) return dofs[0];
    const double e0 = std::log(error[i - 1]), e1 = std::log(error[i]);
    const double n0 = std::log(dofs[i - 1]), n1 = std::log(dofs[i]);
    const double t = e0 == e1 ? 1.0 : (std::log(target) - e0) / (e1 - e0);
    return std::exp(n0 + std::clamp(t, 0.0, 1.0) * (n1 - n0));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double leaf_overlap(std::span<const CellKey> a, std::span<const CellKey> b) {
  if (a.empty() && b.empty()) return 1.0;
  const std::set<CellKey> sa(a.begin(), a.end());
  std::size_t common = 0;
  for (const auto& k : std::set<CellKey>(b.begin(), b.end())) common += sa.count(k);
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

int stagnation_index(std::span<const double> error, int window, double drop) {
  for (std::size_t k = 0; k + static_cast<std::size_t>(window) < error.size(); ++k) {
    if (error[k + static_cast<std::size_t>(window)] >= (1.0 - drop) * error[k]) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

}  // namespace aniso
