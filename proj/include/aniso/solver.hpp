#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

/// Compressed-row sparse matrix with sorted, unique column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Takes ownership of a CSR triple; validates shape and column ordering.
  CsrMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col,
            std::vector<double> val);
  /// Builds from (row, col, value) triplets, summing duplicates.
  struct Triplet {
    int row, col;
    double value;
  };
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> t);
  static CsrMatrix identity(int n);
  static CsrMatrix diagonal(std::span<const double> d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }
  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col() const { return col_; }
  std::span<const double> values() const { return val_; }
  std::span<double> values() { return val_; }

  /// Position of (r, c) in values(), or -1 when structurally zero.
  std::ptrdiff_t find(int r, int c) const;
  double at(int r, int c) const;

  void multiply(std::span<const double> x, std::span<double> y, int threads = 1) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal_values() const;
  double max_abs() const;
  /// max |A_ij - A_ji| over stored entries (missing mirror entries count as 0).
  double max_asymmetry() const;

  void write_matrix_market(std::ostream& os) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  /// z = M^{-1} r.
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "none"; }
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  /// Throws SolverError naming the row of a nonpositive diagonal entry.
  explicit JacobiPreconditioner(const CsrMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "jacobi"; }
  std::span<const double> inverse_diagonal() const { return inv_diag_; }

 private:
  std::vector<double> inv_diag_;
};

/// Zero-fill incomplete LU on the sparsity pattern of A in the given row
/// order.  Triangular solves are sequential.
class Ilu0Preconditioner final : public Preconditioner {
 public:
  /// Throws SolverError naming the row of a zero or negative pivot.
  explicit Ilu0Preconditioner(const CsrMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "ilu0"; }

 private:
  CsrMatrix lu_;
  std::vector<int> diag_pos_;
};

enum class PreconditionerKind { none, jacobi, ilu0 };
std::string to_string(PreconditionerKind k);
PreconditionerKind parse_preconditioner(const std::string& s);
std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind k, const CsrMatrix& a);

struct SolverOptions {
  PreconditionerKind preconditioner = PreconditionerKind::ilu0;
  double rtol = 1e-10;
  int max_iterations = 20000;
  int threads = 1;
  /// When set, failure to converge throws SolverError; otherwise it is
  /// reported through SolveReport::converged.
  bool throw_on_failure = true;
  /// Called after every iteration with the iteration number and current iterate.
  std::function<void(int, std::span<const double>)> on_iterate;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// Eigenvalue estimates come from fewer than 5 Lanczos steps when false.
  bool eigen_reliable = false;
  double seconds = 0.0;
};

/// Preconditioned conjugate gradients.  x holds the initial guess on entry.
/// Throws SolverError on indefiniteness (p^T A p <= 0) naming the iteration.
SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                const Preconditioner& m, const SolverOptions& opts);

/// Convenience overload building the preconditioner from opts.
SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                const SolverOptions& opts);

/// lambda_max / lambda_min; throws Error when the report holds fewer than 5
/// Lanczos steps.
double estimate_condition(const SolveReport& r);

/// Smallest and largest eigenvalues of the symmetric tridiagonal matrix
/// (diag, offdiag) by Sturm-sequence bisection.
std::pair<double, double> tridiagonal_extremes(std::span<const double> diag,
                                               std::span<const double> offdiag);

}  // namespace aniso
