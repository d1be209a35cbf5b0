#include "enpod/linsolve.hpp"

#include <chrono>
#include <random>
#include <regex>

#include "enpod/errors.hpp"
#include "enpod/parallel.hpp"

namespace enpod {

namespace {

long trailing_index(const std::string& msg) {
  std::smatch m;
  static const std::regex number(R"((\d+)\s*$)");
  if (std::regex_search(msg, m, number)) return std::stol(m[1].str());
  return -1;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SparseFactorization::SparseFactorization(const SparseMatrix& a) : lu_(std::make_unique<Solver>()) {
  if (a.rows() != a.cols()) throw DimensionError("sparse factorization needs a square matrix");
  n_ = a.rows();
  factorize(a);
}

void SparseFactorization::refactorize(const SparseMatrix& a) {
  if (a.rows() != n_ || a.cols() != n_) throw DimensionError("refactorize: shape changed");
  factorize(a);
}

void SparseFactorization::factorize(const SparseMatrix& a) {
  Eigen::SparseMatrix<double> m = a.to_eigen();
  m.makeCompressed();
  if (analyses_ == 0 || a.row_ptr() != pattern_row_ptr_ || a.col_idx() != pattern_col_idx_) {
    lu_->analyzePattern(m);
    pattern_row_ptr_ = a.row_ptr();
    pattern_col_idx_ = a.col_idx();
    ++analyses_;
  }
  lu_->factorize(m);
  if (lu_->info() != Eigen::Success) {
    const std::string msg = lu_->lastErrorMessage();
    throw SingularMatrixError("sparse LU failed: " + msg, trailing_index(msg));
  }
}

Vector SparseFactorization::solve(const Vector& b) const {
  if (b.size() != n_) throw DimensionError("rhs length does not match factorization");
  Vector x = lu_->solve(b);
  return x;
}

std::vector<Vector> solve_many(const SparseFactorization& f, std::span<const Vector> rhs, int threads) {
  for (const auto& b : rhs)
    if (b.size() != f.size()) throw DimensionError("rhs length does not match factorization");
  std::vector<Vector> out(rhs.size());
  parallel_for(rhs.size(), threads, [&](std::size_t j) { out[j] = f.solve(rhs[j]); });
  return out;
}

DenseFactorization::DenseFactorization(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("dense factorization needs a square matrix");
  lu_.compute(a);
  const auto& lu = lu_.matrixLU();
  double largest = 0.0;
  for (Eigen::Index i = 0; i < lu.rows(); ++i) largest = std::max(largest, std::abs(lu(i, i)));
  for (Eigen::Index i = 0; i < lu.rows(); ++i)
    if (!(std::abs(lu(i, i)) > 1e-14 * largest))
      throw SingularMatrixError("dense LU hit a zero pivot", static_cast<long>(i));
}

Vector DenseFactorization::solve(const Vector& b) const {
  if (b.size() != lu_.rows()) throw DimensionError("rhs length does not match factorization");
  Vector x = lu_.solve(b);
  return x;
}

std::vector<Vector> solve_many(const DenseFactorization& f, std::span<const Vector> rhs, int threads) {
  for (const auto& b : rhs)
    if (b.size() != f.size()) throw DimensionError("rhs length does not match factorization");
  std::vector<Vector> out(rhs.size());
  parallel_for(rhs.size(), threads, [&](std::size_t j) { out[j] = f.solve(rhs[j]); });
  return out;
}

std::vector<MultiRhsTiming> measure_multi_rhs_cost(const SparseMatrix& a,
                                                   std::span<const int> member_counts,
                                                   unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<MultiRhsTiming> out;
  for (int members : member_counts) {
    std::vector<Vector> rhs(members, Vector(a.rows()));
    for (auto& b : rhs)
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = dist(gen);

    MultiRhsTiming t;
    t.members = members;
    auto start = std::chrono::steady_clock::now();
    {
      SparseFactorization f(a);
      auto x = solve_many(f, rhs);
      (void)x;
    }
    t.shared_seconds = seconds_since(start);

    start = std::chrono::steady_clock::now();
    for (const auto& b : rhs) {
      SparseFactorization f(a);
      auto x = f.solve(b);
      (void)x;
    }
    t.separate_seconds = seconds_since(start);
    out.push_back(t);
  }
  return out;
}

}  // namespace enpod
