#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "enpod/sparse_matrix.hpp"

namespace enpod {

/// 1/2 u^T M u
double energy(const SparseMatrix& mass, const Vector& u);
/// 1/2 |c|^2, valid because the reduced basis is mass-orthonormal.
double reduced_energy(const Vector& c);

/// 1/2 nu u^T C u with C the (curl, curl) Gram matrix.
double enstrophy(const SparseMatrix& curl_gram, const Vector& u, double nu);
double reduced_enstrophy(const DenseMatrix& reduced_curl_gram, const Vector& c, double nu);

/// Scalar series on a shared time grid, one row of values per label.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<std::string> labels = {});

  /// `values` has one entry per label; times must increase strictly.
  void append(double time, std::span<const double> values);

  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& values(std::size_t label) const { return values_[label]; }

  /// One row per (time, label): "time,label,value".
  std::string to_csv() const;

 private:
  std::vector<double> times_;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> values_;
};

/// (int_0^T ||a - b||^2 dt)^{1/2} / (int_0^T ||a||^2 dt)^{1/2} with the
/// spatial norm induced by `mass` and the composite trapezoidal rule on
/// `times`. Throws GridMismatchError if the trajectories are not sampled on
/// `times`.
double relative_l2_error(const SparseMatrix& mass, std::span<const double> times,
                         std::span<const Vector> reference, std::span<const Vector> candidate);

/// Rows "i,sigma,lambda" with sigma = sqrt(max(lambda, 0)).
std::string singular_values_csv(const Vector& spectrum);
void export_singular_values(const Vector& spectrum, const std::filesystem::path& path);

/// Rows "R,relative_error".
std::string error_table_csv(std::span<const int> ranks, std::span<const double> errors);

}  // namespace enpod
