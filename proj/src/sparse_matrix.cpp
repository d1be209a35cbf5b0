#include "enpod/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "enpod/errors.hpp"

namespace enpod {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                           std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || col_idx_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != values_.size())
    throw DimensionError("inconsistent CSR arrays");
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] < 0 || col_idx_[k] >= cols_) throw DimensionError("CSR column out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw InvariantError("CSR columns must be sorted and unique");
    }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DimensionError("triplet out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> row_ptr(rows + 1, 0);
  std::vector<int> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!col_idx.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  for (int i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<int> row_ptr(n + 1), col(n);
  for (int i = 0; i < n; ++i) {
    row_ptr[i + 1] = i + 1;
    col[i] = i;
  }
  SparseMatrix m(n, n, std::move(row_ptr), std::move(col), std::vector<double>(n, 1.0));
  m.symmetric_ = true;
  return m;
}

double SparseMatrix::coeff(int i, int j) const {
  auto first = col_idx_.begin() + row_ptr_[i];
  auto last = col_idx_.begin() + row_ptr_[i + 1];
  auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[it - col_idx_.begin()] : 0.0;
}

Vector SparseMatrix::operator*(const Vector& x) const {
  if (x.size() != cols_) throw DimensionError("matrix-vector size mismatch");
  Vector y(rows_);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
  return y;
}

Vector SparseMatrix::transpose_multiply(const Vector& x) const {
  if (x.size() != rows_) throw DimensionError("transpose-vector size mismatch");
  Vector y = Vector::Zero(cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * x[i];
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<int> row_ptr(cols_ + 1, 0);
  for (int c : col_idx_) ++row_ptr[c + 1];
  for (int j = 0; j < cols_; ++j) row_ptr[j + 1] += row_ptr[j];
  std::vector<int> col(values_.size());
  std::vector<double> val(values_.size());
  std::vector<int> next(row_ptr.begin(), row_ptr.end() - 1);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const int dst = next[col_idx_[k]]++;
      col[dst] = i;
      val[dst] = values_[k];
    }
  SparseMatrix t(cols_, rows_, std::move(row_ptr), std::move(col), std::move(val));
  t.symmetric_ = symmetric_;
  return t;
}

SparseMatrix SparseMatrix::scaled(double s) const {
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= s;
  return m;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  const double bound = tol * max_abs();
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (std::abs(values_[k] - coeff(col_idx_[k], i)) > bound) return false;
  return true;
}

void SparseMatrix::mark_symmetric(double tol) {
  if (!is_symmetric(tol)) throw InvariantError("matrix flagged symmetric is not symmetric");
  symmetric_ = true;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
         col_idx_ == other.col_idx_;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(rows_, cols_);
  rm.reserve(static_cast<Eigen::Index>(values_.size()));
  for (int i = 0; i < rows_; ++i) {
    rm.startVec(i);
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) rm.insertBack(i, col_idx_[k]) = values_[k];
  }
  rm.finalize();
  return Eigen::SparseMatrix<double>(rm);
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
  return d;
}

SparseMatrix linear_combination(std::span<const ScaledMatrix> terms) {
  if (terms.empty()) throw DimensionError("empty linear combination");
  const int rows = terms[0].matrix->rows();
  const int cols = terms[0].matrix->cols();
  for (const auto& t : terms)
    if (t.matrix->rows() != rows || t.matrix->cols() != cols)
      throw DimensionError("linear combination of matrices with different shapes");

  const bool shared = std::all_of(terms.begin(), terms.end(), [&](const ScaledMatrix& t) {
    return t.matrix->same_pattern(*terms[0].matrix);
  });
  if (shared) {
    SparseMatrix out = *terms[0].matrix;
    auto& vals = out.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      double s = 0.0;
      for (const auto& t : terms) s += t.scale * t.matrix->values()[k];
      vals[k] = s;
    }
    const bool sym = std::all_of(terms.begin(), terms.end(),
                                 [](const ScaledMatrix& t) { return t.matrix->symmetric_flag(); });
    if (!sym) out = SparseMatrix(rows, cols, out.row_ptr(), out.col_idx(), out.values());
    return out;
  }

  std::vector<Triplet> trip;
  for (const auto& t : terms) {
    const auto& m = *t.matrix;
    for (int i = 0; i < rows; ++i)
      for (int k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
        trip.push_back({i, m.col_idx()[k], t.scale * m.values()[k]});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(trip));
}

SparseMatrix saddle_point_matrix(const SparseMatrix& a, const SparseMatrix& b, const Vector& m) {
  const int nv = a.rows();
  const int np = b.rows();
  if (a.cols() != nv || b.cols() != nv || m.size() != np)
    throw DimensionError("saddle point blocks have inconsistent sizes");
  const SparseMatrix bt = b.transpose();
  const int n = nv + np + 1;
  std::vector<int> row_ptr(n + 1, 0);
  std::vector<int> col;
  std::vector<double> val;
  col.reserve(a.nnz() + 2 * b.nnz() + 2 * np);
  val.reserve(col.capacity());
  for (int i = 0; i < nv; ++i) {
    for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      col.push_back(a.col_idx()[k]);
      val.push_back(a.values()[k]);
    }
    for (int k = bt.row_ptr()[i]; k < bt.row_ptr()[i + 1]; ++k) {
      col.push_back(nv + bt.col_idx()[k]);
      val.push_back(bt.values()[k]);
    }
    row_ptr[i + 1] = static_cast<int>(col.size());
  }
  for (int q = 0; q < np; ++q) {
    for (int k = b.row_ptr()[q]; k < b.row_ptr()[q + 1]; ++k) {
      col.push_back(b.col_idx()[k]);
      val.push_back(b.values()[k]);
    }
    col.push_back(n - 1);
    val.push_back(m[q]);
    row_ptr[nv + q + 1] = static_cast<int>(col.size());
  }
  for (int q = 0; q < np; ++q) {
    col.push_back(nv + q);
    val.push_back(m[q]);
  }
  row_ptr[n] = static_cast<int>(col.size());
  return SparseMatrix(n, n, std::move(row_ptr), std::move(col), std::move(val));
}

}  // namespace enpod
