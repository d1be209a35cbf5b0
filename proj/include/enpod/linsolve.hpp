#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <span>
#include <vector>

#include "enpod/sparse_matrix.hpp"

namespace enpod {

/// Sparse LU with a fill-reducing column ordering. The symbolic analysis is
/// kept so that matrices with an identical pattern can be refactorized
/// numerically without re-analysis.
class SparseFactorization {
 public:
  /// Throws SingularMatrixError reporting the failing pivot.
  explicit SparseFactorization(const SparseMatrix& a);

  /// Numeric refactorization; re-runs the symbolic phase only if the
  /// pattern differs from the one analysed.
  void refactorize(const SparseMatrix& a);

  Vector solve(const Vector& b) const;
  int size() const { return n_; }
  /// Number of symbolic analyses performed so far.
  int symbolic_analyses() const { return analyses_; }

 private:
  using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
  void factorize(const SparseMatrix& a);

  int n_ = 0;
  int analyses_ = 0;
  std::vector<int> pattern_row_ptr_;
  std::vector<int> pattern_col_idx_;
  std::unique_ptr<Solver> lu_;
};

inline SparseFactorization sparse_factorize(const SparseMatrix& a) { return SparseFactorization(a); }

/// Solves each right-hand side independently against one factorization.
/// result[j] is bitwise identical to F.solve(rhs[j]); with threads > 1 the
/// solves are distributed over workers but output order is preserved.
std::vector<Vector> solve_many(const SparseFactorization& f, std::span<const Vector> rhs,
                               int threads = 1);

/// Dense LU with partial pivoting for the reduced systems.
class DenseFactorization {
 public:
  /// Throws SingularMatrixError when a pivot is below 1e-14 times the
  /// largest pivot.
  explicit DenseFactorization(const DenseMatrix& a);
  Vector solve(const Vector& b) const;
  int size() const { return static_cast<int>(lu_.rows()); }

 private:
  Eigen::PartialPivLU<DenseMatrix> lu_;
};

std::vector<Vector> solve_many(const DenseFactorization& f, std::span<const Vector> rhs,
                               int threads = 1);

/// Wall-clock comparison of "factorize once + J solves" against
/// "J x (factorize + solve)" for one matrix.
struct MultiRhsTiming {
  int members = 0;
  double shared_seconds = 0.0;
  double separate_seconds = 0.0;
};

std::vector<MultiRhsTiming> measure_multi_rhs_cost(const SparseMatrix& a,
                                                   std::span<const int> member_counts,
                                                   unsigned seed = 7);

}  // namespace enpod
