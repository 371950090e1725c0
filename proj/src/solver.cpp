#include "aniso/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "aniso/error.hpp"
#include "aniso/parallel.hpp"

namespace aniso {

CsrMatrix::CsrMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col,
                     std::vector<double> val)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col)),
      val_(std::move(val)) {
  if (rows < 0 || cols < 0 || row_ptr_.size() != static_cast<std::size_t>(rows) + 1 ||
      col_.size() != val_.size() || row_ptr_.back() != static_cast<int>(col_.size())) {
    throw Error("CsrMatrix: inconsistent CSR arrays");
  }
  for (int r = 0; r < rows; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_[k] < 0 || col_[k] >= cols || (k > row_ptr_[r] && col_[k] <= col_[k - 1])) {
        throw Error("CsrMatrix: columns must be sorted, unique and in range");
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> rp(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> cl;
  std::vector<double> vl;
  for (std::size_t i = 0; i < t.size();) {
    const int r = t[i].row, c = t[i].col;
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw Error("CsrMatrix: triplet out of range");
    double v = 0.0;
    while (i < t.size() && t[i].row == r && t[i].col == c) v += t[i++].value;
    cl.push_back(c);
    vl.push_back(v);
    ++rp[static_cast<std::size_t>(r) + 1];
  }
  for (int r = 0; r < rows; ++r) rp[r + 1] += rp[r];
  return CsrMatrix(rows, cols, std::move(rp), std::move(cl), std::move(vl));
}

CsrMatrix CsrMatrix::identity(int n) {
  std::vector<double> d(static_cast<std::size_t>(n), 1.0);
  return diagonal(d);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> rp(d.size() + 1), cl(d.size());
  for (int i = 0; i < n; ++i) {
    rp[i + 1] = i + 1;
    cl[i] = i;
  }
  return CsrMatrix(n, n, std::move(rp), std::move(cl), std::vector<double>(d.begin(), d.end()));
}

std::ptrdiff_t CsrMatrix::find(int r, int c) const {
  const auto b = col_.begin() + row_ptr_[r];
  const auto e = col_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(b, e, c);
  if (it == e || *it != c) return -1;
  return it - col_.begin();
}

double CsrMatrix::at(int r, int c) const {
  const auto k = find(r, c);
  return k < 0 ? 0.0 : val_[static_cast<std::size_t>(k)];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y, int threads) const {
  auto row = [&](std::size_t r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
    y[r] = s;
  };
  if (threads > 1 && rows_ > 4096) {
    const std::size_t chunks = static_cast<std::size_t>(threads);
    const std::size_t block = (static_cast<std::size_t>(rows_) + chunks - 1) / chunks;
    parallel_for(chunks, threads, [&](std::size_t c) {
      const std::size_t hi = std::min<std::size_t>(rows_, (c + 1) * block);
      for (std::size_t r = c * block; r < hi; ++r) row(r);
    });
  } else {
    for (std::size_t r = 0; r < static_cast<std::size_t>(rows_); ++r) row(r);
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::diagonal_values() const {
  std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
  for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = at(r, r);
  return d;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : val_) m = std::max(m, std::abs(v));
  return m;
}

double CsrMatrix::max_asymmetry() const {
  double m = 0.0;
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int c = col_[k];
      const double mirror = c < rows_ && r < cols_ ? at(c, r) : 0.0;
      m = std::max(m, std::abs(val_[k] - mirror));
    }
  }
  return m;
}

void CsrMatrix::write_matrix_market(std::ostream& os) const {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
  const auto old = os.precision(17);
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      os << r + 1 << ' ' << col_[k] + 1 << ' ' << val_[k] << '\n';
    }
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Preconditioners

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  std::copy(r.begin(), r.end(), z.begin());
}

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& a) {
  const auto d = a.diagonal_values();
  inv_diag_.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      throw SolverError("jacobi: nonpositive diagonal entry at row " + std::to_string(i));
    }
    inv_diag_[i] = 1.0 / d[i];
  }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

Ilu0Preconditioner::Ilu0Preconditioner(const CsrMatrix& a) : lu_(a) {
  const int n = a.rows();
  const auto rp = lu_.row_ptr();
  const auto cl = lu_.col();
  auto v = lu_.values();
  diag_pos_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const auto k = lu_.find(i, i);
    if (k < 0) throw SolverError("ilu0: missing diagonal at row " + std::to_string(i));
    diag_pos_[i] = static_cast<int>(k);
  }
  // Row-wise IKJ elimination restricted to the existing pattern.
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    for (int k = rp[i]; k < rp[i + 1]; ++k) pos[cl[k]] = k;
    for (int kk = rp[i]; kk < rp[i + 1] && cl[kk] < i; ++kk) {
      const int k = cl[kk];
      const double lik = v[kk] / v[diag_pos_[k]];
      v[kk] = lik;
      for (int jj = diag_pos_[k] + 1; jj < rp[k + 1]; ++jj) {
        const int p = pos[cl[jj]];
        if (p >= 0) v[p] -= lik * v[jj];
      }
    }
    for (int k = rp[i]; k < rp[i + 1]; ++k) pos[cl[k]] = -1;
    const double piv = v[diag_pos_[i]];
    if (!(piv > 0.0)) {
      throw SolverError("ilu0: nonpositive pivot at row " + std::to_string(i));
    }
  }
}

void Ilu0Preconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const int n = lu_.rows();
  const auto rp = lu_.row_ptr();
  const auto cl = lu_.col();
  const auto v = lu_.values();
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (int k = rp[i]; k < diag_pos_[i]; ++k) s -= v[k] * z[cl[k]];
    z[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (int k = diag_pos_[i] + 1; k < rp[i + 1]; ++k) s -= v[k] * z[cl[k]];
    z[i] = s / v[diag_pos_[i]];
  }
}

std::string to_string(PreconditionerKind k) {
  switch (k) {
    case PreconditionerKind::none: return "none";
    case PreconditionerKind::jacobi: return "jacobi";
    case PreconditionerKind::ilu0: return "ilu0";
  }
  return "?";
}

PreconditionerKind parse_preconditioner(const std::string& s) {
  if (s == "none" || s == "identity") return PreconditionerKind::none;
  if (s == "jacobi") return PreconditionerKind::jacobi;
  if (s == "ilu0" || s == "ilu") return PreconditionerKind::ilu0;
  throw ConfigError("unknown preconditioner '" + s + "'");
}

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind k, const CsrMatrix& a) {
  switch (k) {
    case PreconditionerKind::none: return std::make_unique<IdentityPreconditioner>();
    case PreconditionerKind::jacobi: return std::make_unique<JacobiPreconditioner>(a);
    case PreconditionerKind::ilu0: return std::make_unique<Ilu0Preconditioner>(a);
  }
  throw ConfigError("unknown preconditioner");
}

// ---------------------------------------------------------------------------
// CG

namespace {

// Number of eigenvalues of the tridiagonal matrix strictly below x.
int sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : off / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection.
double bisect_eigenvalue(std::span<const double> d, std::span<const double> e, int k,
                         double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(d, e, mid) > k) hi = mid;
    else lo = mid;
    if (hi - lo <= 1e-15 * std::max(std::abs(lo), std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> tridiagonal_extremes(std::span<const double> diag,
                                               std::span<const double> offdiag) {
  const std::size_t n = diag.size();
  if (n == 0) throw Error("tridiagonal_extremes: empty matrix");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
                     (i + 1 < n ? std::abs(offdiag[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double pad = 1e-12 * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
  lo -= pad;
  hi += pad;
  return {bisect_eigenvalue(diag, offdiag, 0, lo, hi),
          bisect_eigenvalue(diag, offdiag, static_cast<int>(n) - 1, lo, hi)};
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void fill_lanczos(SolveReport& rep, const std::vector<double>& alpha,
                  const std::vector<double>& beta) {
  const std::size_t k = alpha.size();
  if (k == 0) return;
  std::vector<double> d(k), e(k > 0 ? k - 1 : 0);
  d[0] = 1.0 / alpha[0];
  for (std::size_t j = 1; j < k; ++j) {
    d[j] = 1.0 / alpha[j] + beta[j - 1] / alpha[j - 1];
    e[j - 1] = std::sqrt(beta[j - 1]) / alpha[j - 1];
  }
  const auto [lmin, lmax] = tridiagonal_extremes(d, e);
  rep.lambda_min = lmin;
  rep.lambda_max = lmax;
  rep.eigen_reliable = k >= 5;
}

}  // namespace

SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                const Preconditioner& m, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  if (a.rows() != static_cast<int>(n) || a.cols() != static_cast<int>(n) || x.size() != n) {
    throw Error("pcg: dimension mismatch");
  }
  SolveReport rep;
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, q, opts.threads);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  const double bnorm = std::sqrt(dot(b, b));
  auto finish = [&] {
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return finish();
  }
  double rnorm = std::sqrt(dot(r, r));
  rep.relative_residual = rnorm / bnorm;
  if (rep.relative_residual <= opts.rtol) {
    rep.converged = true;
    return finish();
  }
  m.apply(r, z);
  p = z;
  double rz = dot(r, z);
  std::vector<double> alpha, beta;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    a.multiply(p, q, opts.threads);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      throw SolverError("pcg: indefinite operator detected (p^T A p = " + std::to_string(pq) +
                            ") at iteration " + std::to_string(it),
                        it);
    }
    const double al = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += al * p[i];
      r[i] -= al * q[i];
    }
    alpha.push_back(al);
    rep.iterations = it;
    rnorm = std::sqrt(dot(r, r));
    rep.relative_residual = rnorm / bnorm;
    if (opts.on_iterate) opts.on_iterate(it, x);
    if (rep.relative_residual <= opts.rtol) {
      rep.converged = true;
      break;
    }
    m.apply(r, z);
    const double rz_new = dot(r, z);
    if (!(rz_new > 0.0)) {
      throw SolverError("pcg: preconditioner is not positive definite at iteration " +
                            std::to_string(it),
                        it);
    }
    const double be = rz_new / rz;
    beta.push_back(be);
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + be * p[i];
  }
  fill_lanczos(rep, alpha, beta);
  if (!rep.converged && opts.throw_on_failure) {
    throw SolverError("pcg: no convergence after " + std::to_string(rep.iterations) +
                          " iterations (relative residual " +
                          std::to_string(rep.relative_residual) + ")",
                      rep.iterations);
  }
  return finish();
}

SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                const SolverOptions& opts) {
  const auto m = make_preconditioner(opts.preconditioner, a);
  return pcg(a, b, x, *m, opts);
}

double estimate_condition(const SolveReport& r) {
  if (!r.eigen_reliable || !(r.lambda_min > 0.0)) {
    throw Error("condition estimate needs a converged run with at least 5 CG iterations");
  }
  return r.lambda_max / r.lambda_min;
}

}  // namespace aniso
