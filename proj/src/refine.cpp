#include "aniso/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "aniso/basis.hpp"

namespace aniso {

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::uniform: return "uniform";
    case StrategyKind::zz_threshold: return "zz_threshold";
    case StrategyKind::reference_threshold: return "reference_threshold";
    case StrategyKind::exponential_flux: return "exponential_flux";
    case StrategyKind::exponential_aligned: return "exponential_aligned";
    case StrategyKind::aspect_ratio: return "aspect_ratio";
  }
  return "?";
}

StrategyKind parse_strategy(const std::string& s) {
  for (auto k : {StrategyKind::uniform, StrategyKind::zz_threshold,
                 StrategyKind::reference_threshold, StrategyKind::exponential_flux,
                 StrategyKind::exponential_aligned, StrategyKind::aspect_ratio}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown strategy '" + s + "'");
}

void Strategy::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("strategy threshold must lie in (0, 1]");
  }
}

std::vector<int> mark_zz(std::span<const ElementEstimate> estimates, double factor) {
  if (estimates.empty()) throw ConfigError("mark_zz: no estimates");
  if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("mark_zz: factor must lie in (0, 1]");
  const double cut = factor * total(estimates) / static_cast<double>(estimates.size());
  std::vector<int> marked;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].eta > cut) marked.push_back(static_cast<int>(estimates[i].element));
  }
  return marked;
}

namespace {

double safe_eval(const std::function<double(Point)>& phi, Point x) {
  try {
    return phi(x);
  } catch (const SingularityError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

struct CellSamples {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double min_abs_gauss = std::numeric_limits<double>::infinity();
};

CellSamples sample_cell(const Rect& r, const std::function<double(Point)>& phi,
                        const QuadratureRule& q) {
  CellSamples s;
  auto add = [&](double v, bool gauss) {
    s.lo = std::min(s.lo, v);
    s.hi = std::max(s.hi, v);
    if (gauss) s.min_abs_gauss = std::min(s.min_abs_gauss, std::abs(v));
  };
  for (Point c : {Point{r.x0, r.y0}, Point{r.x1(), r.y0}, Point{r.x0, r.y1()},
                  Point{r.x1(), r.y1()}}) {
    add(safe_eval(phi, c), false);
  }
  for (double t : q.points) {
    for (double s0 : q.points) add(safe_eval(phi, {r.x0 + s0 * r.hx, r.y0 + t * r.hy}), true);
  }
  return s;
}

double cell_size(const Rect& r) { return std::max(r.hx, r.hy); }

}  // namespace

std::vector<int> separatrix_cells(const LeafGrid& grid, const std::function<double(Point)>& phi,
                                  int nq) {
  const auto& q = gauss_legendre(nq);
  std::vector<int> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto s = sample_cell(grid.cell(i).rect, phi, q);
    if (s.lo < 0.0 && s.hi > 0.0) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> mark_exponential(const LeafGrid& grid, const std::function<double(Point)>& phi,
                                  double normalization, double hs, double growth, int nq) {
  if (!(normalization > 0.0) || !(hs > 0.0) || !(growth >= 0.0)) {
    throw ConfigError("mark_exponential: normalization and hs must be positive, growth >= 0");
  }
  const auto& q = gauss_legendre(nq);
  std::vector<int> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Rect& r = grid.cell(i).rect;
    const auto s = sample_cell(r, phi, q);
    const bool on_separatrix = s.lo < 0.0 && s.hi > 0.0;
    const double d = s.min_abs_gauss / normalization;
    if (on_separatrix || cell_size(r) > hs * std::exp(d * growth)) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> mark_exponential_flux(const LeafGrid& grid, const FieldModel& model, double hs,
                                       int p) {
  const double as = model.separatrix_flux();
  const double norm = model.flux_normalization();
  const auto phi = [&model, as](Point x) { return model.flux(x) - as; };
  return mark_exponential(grid, phi, norm, hs, std::sqrt(model.anisotropy().ratio()) / (p + 1),
                          p + 2);
}

TensorMesh build_aspect_ratio(int mx, double ratio, Rect domain) {
  if (mx < 1 || !(ratio > 0.0)) throw ConfigError("build_aspect_ratio: need mx >= 1, ratio > 0");
  const double my = ratio * mx;
  const double rounded = std::round(my);
  if (std::abs(my - rounded) > 1e-9 * std::max(1.0, my) || rounded < 1.0) {
    throw ConfigError("build_aspect_ratio: ratio * mx = " + std::to_string(my) +
                      " is not an integral row count");
  }
  return uniform_tensor(mx, static_cast<int>(rounded), domain);
}

LayerElementSize solve_transcendental_hy(double y_e, double w, double hs, int p) {
  if (!(y_e >= 0.0) || !(w > 0.0) || !(hs > 0.0) || p < 1) {
    throw ConfigError("solve_transcendental_hy: need yE >= 0, w > 0, hs > 0, p >= 1");
  }
  const double k = p + 1.0;
  // Residual in log form; increasing in log h.
  auto f = [&](double logh) {
    const double x = 2.0 * std::exp(logh) / w;
    const double g = -std::expm1(-x) / x;
    return k * logh - y_e / w + 0.5 * std::log(g) - k * std::log(hs);
  };
  double lo = std::log(hs);
  double hi = lo;
  int steps = 0;
  while (f(hi) < 0.0) {
    hi += 1.0;
    if (++steps > 100000 || !std::isfinite(f(hi))) {
      throw Error("solve_transcendental_hy: failed to bracket the root");
    }
  }
  if (f(lo) > 0.0) throw Error("solve_transcendental_hy: failed to bracket the root");
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  LayerElementSize out;
  out.root = std::exp(0.5 * (lo + hi));
  out.inner = hs * std::exp(y_e / (w * k));
  out.outer = std::pow(hs, k / (p + 0.5)) * std::pow(2.0 / w, 1.0 / (2.0 * p + 1.0)) *
              std::exp(y_e / (w * (p + 0.5)));
  return out;
}

double aligned_layer_size(const Anisotropy& a, int mx) { return 3.0 * a.width() / mx; }

Reference solve_reference(const FieldModel& model, int levels, int p, const SolverOptions& solver,
                          int threads) {
  const auto mesh = QuadtreeMesh::uniform(model.domain(), 1, 1, levels, model.periodic_y());
  FESpace space(mesh.leaf_grid(), p, model.boundary());
  AssemblyOptions ao;
  ao.threads = threads;
  SolverOptions so = solver;
  so.threads = threads;
  SolveReport rep;
  auto u = solve_system(space, assemble(space, model, ao), so, &rep);
  return {std::move(space), std::move(u), rep};
}

namespace {

bool is_tensor_strategy(StrategyKind k) {
  return k == StrategyKind::exponential_aligned || k == StrategyKind::aspect_ratio;
}

struct Solved {
  std::vector<double> u;
  SolveReport report;
};

Solved solve(const FESpace& space, const FieldModel& model, const DriveOptions& opts) {
  AssemblyOptions ao;
  ao.threads = opts.threads;
  SolverOptions so = opts.solver;
  so.threads = opts.threads;
  Solved s;
  s.u = solve_system(space, assemble(space, model, ao), so, &s.report);
  return s;
}

void measure(IterationRecord& rec, const FieldModel& model, const FESpace& space,
             std::span<const double> u, const DriveOptions& opts) {
  EstimatorOptions eo;
  eo.threads = opts.threads;
  if (model.has_exact_solution()) {
    const Truth exact = exact_truth(model);
    rec.l1_error = l1_error(space, u, exact, eo);
    rec.flux_error = flux_error_total(space, u, exact, model, eo);
    if (3.0 * model.anisotropy().width() <= model.domain().y1()) {
      rec.layer_norm = layer_norm(space, u, model);
    }
  } else if (opts.reference) {
    rec.l1_error = l1_error(space, u, opts.reference->space, opts.reference->u, eo);
    rec.flux_error =
        flux_error_total(space, u, opts.reference->space, opts.reference->u, model, eo);
  }
}

double default_halt_size(const FieldModel& model, const DriveOptions& opts) {
  if (opts.budget.halt_size > 0.0) return opts.budget.halt_size;
  if (opts.reference) return opts.reference->element_size();
  return 0.25 * model.anisotropy().width();
}

RefinementTrace drive_tensor(const FieldModel& model, const DriveOptions& opts) {
  if (model.kind() != FieldKind::constant) {
    throw ConfigError("strategy " + to_string(opts.strategy.kind) +
                      " requires the field-aligned constant model");
  }
  if (opts.sweep.empty()) throw ConfigError("aligned strategies need a non-empty mx sweep");
  RefinementTrace trace;
  trace.halt_reason = "sweep complete";
  const Rect domain = model.domain();
  const double w = model.anisotropy().width();
  for (std::size_t k = 0; k < opts.sweep.size(); ++k) {
    if (static_cast<int>(k) >= opts.budget.max_iterations) {
      trace.halt_reason = "iteration budget";
      break;
    }
    const int mx = opts.sweep[k];
    const double hs = aligned_layer_size(model.anisotropy(), mx);
    const TensorMesh mesh =
        opts.strategy.kind == StrategyKind::aspect_ratio
            ? uniform_tensor(mx, std::max(1, static_cast<int>(std::lround(domain.hy / hs))), domain)
            : graded_tensor_y(mx, hs, 1.0 / (w * (opts.p + 1)), domain);
    const FESpace space(mesh.leaf_grid(), opts.p, model.boundary());
    if (space.num_dofs() > opts.budget.max_dofs) {
      trace.halt_reason = "dof budget";
      break;
    }
    IterationRecord rec;
    rec.iteration = static_cast<int>(k);
    rec.dofs = space.num_dofs();
    rec.cells = space.num_cells();
    rec.h_min = space.grid().min_element_size();
    try {
      auto s = solve(space, model, opts);
      rec.solve = s.report;
      if (opts.on_solution) opts.on_solution(space, s.u);
      measure(rec, model, space, s.u, opts);
      if (opts.always_estimate) {
        EstimatorOptions eo;
        eo.threads = opts.threads;
        rec.eta_sum = total(zz_estimate(space, s.u, model, eo));
      }
    } catch (const SolverError& e) {
      throw DriveError(e, trace);
    }
    trace.records.push_back(rec);
  }
  return trace;
}

}  // namespace

RefinementTrace drive(const FieldModel& model, const DriveOptions& opts) {
  opts.strategy.validate();
  if (opts.p < 1 || opts.p > 3) throw ConfigError("drive: order p must be 1, 2 or 3");
  if (is_tensor_strategy(opts.strategy.kind)) return drive_tensor(model, opts);
  const StrategyKind kind = opts.strategy.kind;
  if (kind == StrategyKind::reference_threshold && !opts.reference) {
    throw ConfigError("reference_threshold strategy needs a reference solution");
  }
  if (kind == StrategyKind::exponential_flux && model.kind() == FieldKind::constant) {
    throw ConfigError("exponential_flux needs a model with a flux function");
  }
  const double halt = default_halt_size(model, opts);

  RefinementTrace trace;
  QuadtreeMesh mesh = QuadtreeMesh::uniform(model.domain(), opts.roots_x, opts.roots_y,
                                            opts.initial_levels, model.periodic_y());
  auto space = std::make_unique<FESpace>(mesh.leaf_grid(), opts.p, model.boundary());
  if (space->num_dofs() > opts.budget.max_dofs) {
    trace.halt_reason = "dof budget";
    return trace;
  }
  EstimatorOptions eo;
  eo.threads = opts.threads;
  for (int it = 0;; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.dofs = space->num_dofs();
    rec.cells = space->num_cells();
    rec.h_min = space->grid().min_element_size();
    if (opts.keep_meshes) trace.meshes.push_back(mesh.leaf_keys());
    std::vector<ElementEstimate> eta;
    std::vector<double> u;
    try {
      auto s = solve(*space, model, opts);
      u = std::move(s.u);
      rec.solve = s.report;
    } catch (const SolverError& e) {
      throw DriveError(e, trace);
    }
    if (opts.on_solution) opts.on_solution(*space, u);
    measure(rec, model, *space, u, opts);
    if (kind == StrategyKind::zz_threshold || opts.always_estimate) {
      eta = zz_estimate(*space, u, model, eo);
      rec.eta_sum = total(eta);
    }
    if (kind == StrategyKind::reference_threshold) {
      eta = reference_estimate(*space, u, opts.reference->space, opts.reference->u, model, eo);
      rec.eta_sum = total(eta);
    }
    trace.records.push_back(rec);

    if (rec.h_min <= halt * (1.0 + 1e-12)) {
      trace.halt_reason = "min element size reached";
      break;
    }
    if (it + 1 >= opts.budget.max_iterations) {
      trace.halt_reason = "iteration budget";
      break;
    }
    std::vector<int> marked;
    switch (kind) {
      case StrategyKind::uniform:
        marked.resize(mesh.num_leaves());
        for (std::size_t i = 0; i < marked.size(); ++i) marked[i] = static_cast<int>(i);
        break;
      case StrategyKind::zz_threshold:
      case StrategyKind::reference_threshold:
        marked = mark_zz(eta, opts.strategy.threshold);
        break;
      case StrategyKind::exponential_flux: {
        const double as = model.separatrix_flux();
        const auto on_sep = separatrix_cells(
            space->grid(), [&](Point x) { return model.flux(x) - as; }, opts.p + 2);
        double hs = 0.5 * rec.h_min;
        if (!on_sep.empty()) {
          hs = std::numeric_limits<double>::infinity();
          for (int c : on_sep) hs = std::min(hs, 0.5 * cell_size(space->grid().cell(c).rect));
        }
        marked = mark_exponential_flux(space->grid(), model, hs, opts.p);
        break;
      }
      default:
        break;
    }
    if (marked.empty()) {
      trace.halt_reason = "no elements marked";
      break;
    }
    QuadtreeMesh next = mesh.refined(marked);
    auto next_space = std::make_unique<FESpace>(next.leaf_grid(), opts.p, model.boundary());
    if (next_space->num_dofs() > opts.budget.max_dofs) {
      trace.halt_reason = "dof budget";
      break;
    }
    mesh = std::move(next);
    space = std::move(next_space);
  }
  return trace;
}

}  // namespace aniso
