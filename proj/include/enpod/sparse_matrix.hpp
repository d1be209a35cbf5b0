#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <span>
#include <vector>

namespace enpod {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique
/// within each row; explicit zeros are allowed so that matrices assembled
/// from the same element loop share one sparsity pattern.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
               std::vector<double> values);

  /// Duplicates are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double coeff(int i, int j) const;
  Vector operator*(const Vector& x) const;
  /// y = A^T x without forming the transpose.
  Vector transpose_multiply(const Vector& x) const;
  SparseMatrix transpose() const;
  SparseMatrix scaled(double s) const;

  double max_abs() const;
  /// max |A - A^T| <= tol * max |A|.
  bool is_symmetric(double tol = 1e-12) const;
  /// Verifies symmetry and records it; throws InvariantError otherwise.
  void mark_symmetric(double tol = 1e-12);
  bool symmetric_flag() const { return symmetric_; }

  bool same_pattern(const SparseMatrix& other) const;
  Eigen::SparseMatrix<double> to_eigen() const;
  DenseMatrix to_dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

struct ScaledMatrix {
  double scale;
  const SparseMatrix* matrix;
};

/// Sum of scaled matrices of equal shape over the union of their patterns.
SparseMatrix linear_combination(std::span<const ScaledMatrix> terms);

/// [A  B^T  0; B  0  m; 0  m^T  0] with A square (n_vel), B (n_pr x n_vel)
/// and m (n_pr). The trailing row/column is the zero-mean multiplier.
SparseMatrix saddle_point_matrix(const SparseMatrix& a, const SparseMatrix& b, const Vector& m);

}  // namespace enpod
