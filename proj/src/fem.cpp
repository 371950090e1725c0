#include "aniso/fem.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "aniso/basis.hpp"
#include "aniso/error.hpp"
#include "aniso/parallel.hpp"

namespace aniso {

std::vector<double> SystemPair::rhs() const {
  std::vector<double> b(load.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = load[i] + lift[i];
  return b;
}

namespace {

enum class Integrand { stiffness, mass };

struct Tabulation {
  int np = 0;
  int nq = 0;
  std::vector<double> weights;
  std::vector<double> points;
  std::vector<double> val;  // [q * np + a]
  std::vector<double> der;
};

Tabulation tabulate(int p, int nq) {
  Tabulation t;
  t.np = p + 1;
  t.nq = nq;
  const auto& rule = gauss_legendre(nq);
  t.weights = rule.weights;
  t.points = rule.points;
  t.val.resize(static_cast<std::size_t>(nq * t.np));
  t.der.resize(t.val.size());
  const auto nodes = gll_nodes(p);
  for (int q = 0; q < nq; ++q) {
    lagrange_basis(nodes, rule.points[q],
                   std::span<double>(&t.val[static_cast<std::size_t>(q * t.np)], t.np),
                   std::span<double>(&t.der[static_cast<std::size_t>(q * t.np)], t.np));
  }
  return t;
}

// Element system condensed onto the distinct true dofs the element touches.
struct CellSystem {
  std::vector<int> dofs;
  std::vector<double> k;  // dofs.size()^2, row-major
  std::vector<double> f;
};

std::vector<int> cell_dofs(const FESpace& space, std::size_t c) {
  std::vector<int> d;
  for (int l = 0; l < space.local_size(); ++l) {
    for (const auto& t : space.expansion(c, l)) d.push_back(t.dof);
  }
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

CellSystem compute_cell(const FESpace& space, std::size_t c, const Tabulation& tab,
                        Integrand kind, const TensorField* kappa, const ScalarField* source) {
  const int np = tab.np;
  const int ls = np * np;
  const Rect& r = space.grid().cell(c).rect;
  std::vector<double> ke(static_cast<std::size_t>(ls * ls), 0.0);
  std::vector<double> fe(static_cast<std::size_t>(ls), 0.0);
  std::vector<double> gx(static_cast<std::size_t>(ls)), gy(gx.size()), phi(gx.size());
  const double jac = r.hx * r.hy;
  for (int qy = 0; qy < tab.nq; ++qy) {
    for (int qx = 0; qx < tab.nq; ++qx) {
      const Point x{r.x0 + tab.points[qx] * r.hx, r.y0 + tab.points[qy] * r.hy};
      const double w = tab.weights[qx] * tab.weights[qy] * jac;
      const double* vx = &tab.val[static_cast<std::size_t>(qx * np)];
      const double* dx = &tab.der[static_cast<std::size_t>(qx * np)];
      const double* vy = &tab.val[static_cast<std::size_t>(qy * np)];
      const double* dy = &tab.der[static_cast<std::size_t>(qy * np)];
      for (int b = 0; b < np; ++b) {
        for (int a = 0; a < np; ++a) {
          const int l = b * np + a;
          phi[l] = vx[a] * vy[b];
          gx[l] = dx[a] * vy[b] / r.hx;
          gy[l] = vx[a] * dy[b] / r.hy;
        }
      }
      if (kind == Integrand::mass) {
        for (int i = 0; i < ls; ++i) {
          for (int j = 0; j < ls; ++j) ke[i * ls + j] += w * phi[i] * phi[j];
        }
        continue;
      }
      Tensor2 kq;
      double s = 0.0;
      try {
        kq = (*kappa)(x);
        if (source) s = (*source)(x);
      } catch (const SingularityError& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf, " (cell %zu, quadrature point (%.6g, %.6g))", c, x.x, x.y);
        throw SingularityError(e.what() + std::string(buf));
      }
      for (int i = 0; i < ls; ++i) {
        const double kx = kq.xx * gx[i] + kq.xy * gy[i];
        const double ky = kq.xy * gx[i] + kq.yy * gy[i];
        for (int j = 0; j < ls; ++j) ke[i * ls + j] += w * (kx * gx[j] + ky * gy[j]);
        fe[i] += w * s * phi[i];
      }
    }
  }

  CellSystem out;
  out.dofs = cell_dofs(space, c);
  const std::size_t nu = out.dofs.size();
  // T maps condensed dofs to local slots: u_local = T u_cell.
  std::vector<double> t(static_cast<std::size_t>(ls) * nu, 0.0);
  for (int l = 0; l < ls; ++l) {
    for (const auto& term : space.expansion(c, l)) {
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(out.dofs.begin(), out.dofs.end(), term.dof) - out.dofs.begin());
      t[static_cast<std::size_t>(l) * nu + pos] += term.weight;
    }
  }
  std::vector<double> kt(static_cast<std::size_t>(ls) * nu, 0.0);  // K_e T
  for (int i = 0; i < ls; ++i) {
    for (int l = 0; l < ls; ++l) {
      const double kil = ke[i * ls + l];
      if (kil == 0.0) continue;
      for (std::size_t u = 0; u < nu; ++u) kt[i * nu + u] += kil * t[l * nu + u];
    }
  }
  out.k.assign(nu * nu, 0.0);
  out.f.assign(nu, 0.0);
  for (int i = 0; i < ls; ++i) {
    for (std::size_t u = 0; u < nu; ++u) {
      const double tiu = t[i * nu + u];
      if (tiu == 0.0) continue;
      out.f[u] += tiu * fe[i];
      for (std::size_t v = 0; v < nu; ++v) out.k[u * nu + v] += tiu * kt[i * nu + v];
    }
  }
  return out;
}

// CSR pattern over the rows/columns selected by `index` (-1 excluded).
CsrMatrix build_pattern(const FESpace& space, std::span<const int> index, int n) {
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < space.num_cells(); ++c) {
    const auto d = cell_dofs(space, c);
    for (int a : d) {
      const int ra = index[a];
      if (ra < 0) continue;
      for (int b : d) {
        const int cb = index[b];
        if (cb >= 0) rows[ra].push_back(cb);
      }
    }
  }
  std::vector<int> rp(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> cl;
  for (int r = 0; r < n; ++r) {
    auto& v = rows[r];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    cl.insert(cl.end(), v.begin(), v.end());
    rp[r + 1] = static_cast<int>(cl.size());
    std::vector<int>().swap(v);
  }
  std::vector<double> val(cl.size(), 0.0);
  return CsrMatrix(n, n, std::move(rp), std::move(cl), std::move(val));
}

// Computes element systems in parallel blocks and accumulates them in cell
// order through `sink`.
template <class Sink>
void for_each_cell_system(const FESpace& space, const AssemblyOptions& opts, Integrand kind,
                          const TensorField* kappa, const ScalarField* source, Sink&& sink) {
  const int nq = opts.quadrature_points > 0 ? opts.quadrature_points : space.order() + 2;
  const Tabulation tab = tabulate(space.order(), nq);
  const std::size_t nc = space.num_cells();
  const std::size_t block = 512 * static_cast<std::size_t>(std::max(1, opts.threads));
  std::vector<CellSystem> buf;
  for (std::size_t lo = 0; lo < nc; lo += block) {
    const std::size_t hi = std::min(nc, lo + block);
    buf.assign(hi - lo, CellSystem{});
    parallel_for(hi - lo, opts.threads, [&](std::size_t i) {
      buf[i] = compute_cell(space, lo + i, tab, kind, kappa, source);
    });
    for (std::size_t i = 0; i < buf.size(); ++i) sink(buf[i]);
  }
}

void scatter(CsrMatrix& a, std::span<const int> index, const CellSystem& cs) {
  auto v = a.values();
  const std::size_t nu = cs.dofs.size();
  for (std::size_t u = 0; u < nu; ++u) {
    const int r = index[cs.dofs[u]];
    if (r < 0) continue;
    for (std::size_t w = 0; w < nu; ++w) {
      const int c = index[cs.dofs[w]];
      if (c < 0) continue;
      v[static_cast<std::size_t>(a.find(r, c))] += cs.k[u * nu + w];
    }
  }
}

}  // namespace

SystemPair assemble(const FESpace& space, const FieldModel& model, const AssemblyOptions& opts) {
  const TensorField kappa = [&model](Point x) { return model.conductivity(x); };
  const ScalarField source = [&model](Point x) { return model.source(x); };
  const auto g = space.boundary_vector(model);
  return assemble(space, kappa, source, g, opts);
}

SystemPair assemble(const FESpace& space, const TensorField& kappa, const ScalarField& source,
                    std::span<const double> boundary, const AssemblyOptions& opts) {
  std::vector<int> index(space.num_dofs());
  for (std::size_t d = 0; d < index.size(); ++d) index[d] = space.free_index(static_cast<int>(d));
  const int n = static_cast<int>(space.num_free());
  SystemPair sys;
  sys.stiffness = build_pattern(space, index, n);
  sys.load.assign(static_cast<std::size_t>(n), 0.0);
  sys.lift.assign(static_cast<std::size_t>(n), 0.0);
  sys.boundary.assign(space.num_dofs(), 0.0);
  for (std::size_t d = 0; d < index.size(); ++d) {
    if (index[d] < 0) sys.boundary[d] = boundary[d];
  }
  for_each_cell_system(space, opts, Integrand::stiffness, &kappa, &source,
                       [&](const CellSystem& cs) {
                         scatter(sys.stiffness, index, cs);
                         const std::size_t nu = cs.dofs.size();
                         for (std::size_t u = 0; u < nu; ++u) {
                           const int r = index[cs.dofs[u]];
                           if (r < 0) continue;
                           sys.load[r] += cs.f[u];
                           for (std::size_t w = 0; w < nu; ++w) {
                             if (index[cs.dofs[w]] < 0) {
                               sys.lift[r] -= cs.k[u * nu + w] * sys.boundary[cs.dofs[w]];
                             }
                           }
                         }
                       });
  return sys;
}

CsrMatrix assemble_global(const FESpace& space, const TensorField& kappa,
                          const AssemblyOptions& opts) {
  std::vector<int> index(space.num_dofs());
  for (std::size_t d = 0; d < index.size(); ++d) index[d] = static_cast<int>(d);
  CsrMatrix a = build_pattern(space, index, static_cast<int>(index.size()));
  for_each_cell_system(space, opts, Integrand::stiffness, &kappa, nullptr,
                       [&](const CellSystem& cs) { scatter(a, index, cs); });
  return a;
}

CsrMatrix assemble_mass(const FESpace& space, const AssemblyOptions& opts) {
  std::vector<int> index(space.num_dofs());
  for (std::size_t d = 0; d < index.size(); ++d) index[d] = static_cast<int>(d);
  CsrMatrix a = build_pattern(space, index, static_cast<int>(index.size()));
  for_each_cell_system(space, opts, Integrand::mass, nullptr, nullptr,
                       [&](const CellSystem& cs) { scatter(a, index, cs); });
  return a;
}

std::vector<double> solve_system(const FESpace& space, const SystemPair& sys,
                                 const SolverOptions& opts, SolveReport* report) {
  std::vector<double> u = sys.boundary;
  const auto b = sys.rhs();
  std::vector<double> x(b.size(), 0.0);
  SolveReport rep;
  if (!b.empty()) rep = pcg(sys.stiffness, b, x, opts);
  else rep.converged = true;
  const auto fd = space.free_dofs();
  for (std::size_t k = 0; k < fd.size(); ++k) u[static_cast<std::size_t>(fd[k])] = x[k];
  if (report) *report = rep;
  return u;
}

}  // namespace aniso
