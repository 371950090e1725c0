#include "aniso/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aniso/basis.hpp"
#include "aniso/error.hpp"
#include "aniso/fem.hpp"
#include "aniso/parallel.hpp"
#include "aniso/solver.hpp"

namespace aniso {

double total(std::span<const ElementEstimate> e) {
  double s = 0.0;
  for (const auto& x : e) s += x.eta;
  return s;
}

namespace {

// Tensor-product Gauss rule with basis values and derivatives tabulated at the
// 1D points.
struct CellRule {
  int np = 0;
  int nq = 0;
  std::vector<double> points, weights;
  std::vector<double> val, der;  // [q * np + a]

  CellRule(int p, int n) : np(p + 1), nq(n) {
    const auto& rule = gauss_legendre(n);
    points = rule.points;
    weights = rule.weights;
    val.resize(static_cast<std::size_t>(n * np));
    der.resize(val.size());
    const auto nodes = gll_nodes(p);
    for (int q = 0; q < n; ++q) {
      lagrange_basis(nodes, points[q], std::span<double>(&val[static_cast<std::size_t>(q * np)], np),
                     std::span<double>(&der[static_cast<std::size_t>(q * np)], np));
    }
  }

  // Physical point, weight, value and gradient at quadrature point (qx, qy)
  // from element-local coefficients.
  struct Sample {
    Point x;
    double w;
    double value;
    Vec2 grad;
  };
  Sample sample(const Rect& r, std::span<const double> coef, int qx, int qy) const {
    Sample s{{r.x0 + points[qx] * r.hx, r.y0 + points[qy] * r.hy},
             weights[qx] * weights[qy] * r.hx * r.hy,
             0.0,
             {}};
    const double* vx = &val[static_cast<std::size_t>(qx * np)];
    const double* dx = &der[static_cast<std::size_t>(qx * np)];
    const double* vy = &val[static_cast<std::size_t>(qy * np)];
    const double* dy = &der[static_cast<std::size_t>(qy * np)];
    double gx = 0.0, gy = 0.0;
    for (int b = 0; b < np; ++b) {
      for (int a = 0; a < np; ++a) {
        const double c = coef[static_cast<std::size_t>(b * np + a)];
        s.value += c * vx[a] * vy[b];
        gx += c * dx[a] * vy[b];
        gy += c * vx[a] * dy[b];
      }
    }
    s.grad = {gx / r.hx, gy / r.hy};
    return s;
  }
};

int rule_size(const FESpace& space, const EstimatorOptions& opts) {
  return opts.quadrature_points > 0 ? opts.quadrature_points : space.order() + 2;
}

// Per-cell integral of integrand(sample) over the cells of `space`.
template <class Fn>
std::vector<double> integrate_cells(const FESpace& space, std::span<const double> u,
                                    const EstimatorOptions& opts, Fn&& integrand) {
  const CellRule rule(space.order(), rule_size(space, opts));
  std::vector<double> out(space.num_cells(), 0.0);
  parallel_for(space.num_cells(), opts.threads, [&](std::size_t c) {
    std::vector<double> coef(static_cast<std::size_t>(space.local_size()));
    space.local_coefficients(u, c, coef);
    const Rect& r = space.grid().cell(c).rect;
    double acc = 0.0;
    for (int qy = 0; qy < rule.nq; ++qy) {
      for (int qx = 0; qx < rule.nq; ++qx) {
        const auto s = rule.sample(r, coef, qx, qy);
        acc += s.w * integrand(c, s);
      }
    }
    out[c] = acc;
  });
  return out;
}

std::vector<ElementEstimate> to_estimates(const std::vector<double>& v) {
  std::vector<ElementEstimate> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = {i, v[i]};
  return e;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

using Sample = CellRule::Sample;

}  // namespace

Truth exact_truth(const FieldModel& model) {
  if (!model.has_exact_solution()) {
    throw UnsupportedError("exact_truth: model " + to_string(model.kind()) +
                           " has no exact solution");
  }
  return {[&model](Point x) { return model.exact_solution(x); },
          [&model](Point x) { return model.exact_gradient(x); }};
}

Truth discrete_truth(const FESpace& space, std::span<const double> u) {
  return {[&space, u](Point x) { return space.evaluate(u, x); },
          [&space, u](Point x) { return space.evaluate_gradient(u, x); }};
}

std::vector<ElementEstimate> zz_estimate(const FESpace& space, std::span<const double> u,
                                         const FieldModel& model, const EstimatorOptions& opts) {
  BoundarySpec rbc;
  rbc.periodic_y = space.grid().periodic_y();
  const FESpace rec(space.grid(), space.order(), rbc, false);
  AssemblyOptions aopts;
  aopts.quadrature_points = opts.quadrature_points;
  aopts.threads = opts.threads;
  const CsrMatrix mass = assemble_mass(rec, aopts);

  // Right-hand sides int phi_i (kappa grad T), computed per cell and scattered
  // in cell order.
  const CellRule rule(space.order(), rule_size(space, opts));
  const int ls = space.local_size();
  const std::size_t nc = space.num_cells();
  std::vector<double> local(nc * 2 * static_cast<std::size_t>(ls), 0.0);
  parallel_for(nc, opts.threads, [&](std::size_t c) {
    std::vector<double> coef(static_cast<std::size_t>(ls));
    space.local_coefficients(u, c, coef);
    const Rect& r = space.grid().cell(c).rect;
    double* lx = &local[c * 2 * static_cast<std::size_t>(ls)];
    double* ly = lx + ls;
    for (int qy = 0; qy < rule.nq; ++qy) {
      for (int qx = 0; qx < rule.nq; ++qx) {
        const auto s = rule.sample(r, coef, qx, qy);
        const Vec2 q = model.conductivity(s.x).apply(s.grad);
        for (int b = 0; b < rule.np; ++b) {
          for (int a = 0; a < rule.np; ++a) {
            const double phi = rule.val[static_cast<std::size_t>(qx * rule.np + a)] *
                               rule.val[static_cast<std::size_t>(qy * rule.np + b)] * s.w;
            lx[b * rule.np + a] += phi * q.x;
            ly[b * rule.np + a] += phi * q.y;
          }
        }
      }
    }
  });
  std::vector<double> bx(rec.num_dofs(), 0.0), by(rec.num_dofs(), 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const double* lx = &local[c * 2 * static_cast<std::size_t>(ls)];
    for (int l = 0; l < ls; ++l) {
      for (const auto& t : rec.expansion(c, l)) {
        bx[static_cast<std::size_t>(t.dof)] += t.weight * lx[l];
        by[static_cast<std::size_t>(t.dof)] += t.weight * lx[ls + l];
      }
    }
  }
  SolverOptions so;
  so.preconditioner = PreconditionerKind::jacobi;
  so.rtol = opts.mass_rtol;
  so.threads = opts.threads;
  std::vector<double> sx(rec.num_dofs(), 0.0), sy(rec.num_dofs(), 0.0);
  const JacobiPreconditioner jac(mass);
  pcg(mass, bx, sx, jac, so);
  pcg(mass, by, sy, jac, so);

  std::vector<double> eta(nc, 0.0);
  parallel_for(nc, opts.threads, [&](std::size_t c) {
    std::vector<double> coef(static_cast<std::size_t>(ls)), cx(coef.size()), cy(coef.size());
    space.local_coefficients(u, c, coef);
    rec.local_coefficients(sx, c, cx);
    rec.local_coefficients(sy, c, cy);
    const Rect& r = space.grid().cell(c).rect;
    double acc = 0.0;
    for (int qy = 0; qy < rule.nq; ++qy) {
      for (int qx = 0; qx < rule.nq; ++qx) {
        const auto s = rule.sample(r, coef, qx, qy);
        const Vec2 q = model.conductivity(s.x).apply(s.grad);
        const Vec2 sigma{rule.sample(r, cx, qx, qy).value, rule.sample(r, cy, qx, qy).value};
        acc += s.w * norm(q - sigma);
      }
    }
    eta[c] = acc;
  });
  return to_estimates(eta);
}

std::vector<ElementEstimate> flux_error_indicators(const FESpace& space,
                                                   std::span<const double> u,
                                                   const Truth& truth, const FieldModel& model,
                                                   const EstimatorOptions& opts) {
  return to_estimates(integrate_cells(space, u, opts, [&](std::size_t, const Sample& s) {
    return norm(model.conductivity(s.x).apply(s.grad - truth.gradient(s.x)));
  }));
}

std::vector<ElementEstimate> reference_estimate(const FESpace& space, std::span<const double> u,
                                                const FESpace& ref, std::span<const double> ref_u,
                                                const FieldModel& model,
                                                const EstimatorOptions& opts) {
  const double h = space.grid().min_element_size();
  const double href = ref.grid().min_element_size();
  if (href > h * (1.0 + 1e-12)) {
    throw Error("reference_estimate: reference element size " + std::to_string(href) +
                " exceeds the current minimum element size " + std::to_string(h));
  }
  return flux_error_indicators(space, u, discrete_truth(ref, ref_u), model, opts);
}

double layer_norm(const FESpace& space, std::span<const double> u, const FieldModel& model) {
  if (model.kind() != FieldKind::constant) {
    throw UnsupportedError("layer_norm: requires the constant model");
  }
  const double w = model.anisotropy().width();
  if (3.0 * w > model.domain().y1()) {
    throw ConfigError("layer_norm: sample lattice leaves the domain (need kpar/kperp >= 9)");
  }
  double s = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 150; ++j) {
      const Point x{i * std::numbers::pi / 100.0, (j / 50.0) * w};
      const double e = space.evaluate(u, x) - model.exact_solution(x);
      s += e * e;
    }
  }
  return std::sqrt(s / 15000.0);
}

double l1_error(const FESpace& space, std::span<const double> u, const Truth& truth,
                const EstimatorOptions& opts) {
  return sum(integrate_cells(space, u, opts, [&](std::size_t, const Sample& s) {
    return std::abs(s.value - truth.value(s.x));
  }));
}

double flux_error_total(const FESpace& space, std::span<const double> u, const Truth& truth,
                        const FieldModel& model, const EstimatorOptions& opts) {
  return total(flux_error_indicators(space, u, truth, model, opts));
}

double l1_error(const FESpace& space, std::span<const double> u, const FESpace& ref,
                std::span<const double> ref_u, const EstimatorOptions& opts) {
  return sum(integrate_cells(ref, ref_u, opts, [&](std::size_t, const Sample& s) {
    return std::abs(space.evaluate(u, s.x) - s.value);
  }));
}

double flux_error_total(const FESpace& space, std::span<const double> u, const FESpace& ref,
                        std::span<const double> ref_u, const FieldModel& model,
                        const EstimatorOptions& opts) {
  return sum(integrate_cells(ref, ref_u, opts, [&](std::size_t, const Sample& s) {
    return norm(model.conductivity(s.x).apply(space.evaluate_gradient(u, s.x) - s.grad));
  }));
}

}  // namespace aniso
