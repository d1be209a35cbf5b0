#include "enpod/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "enpod/atomic_file.hpp"
#include "enpod/errors.hpp"

namespace enpod {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double energy(const SparseMatrix& mass, const Vector& u) {
  if (u.size() != mass.cols()) throw DimensionError("energy: field length mismatch");
  return 0.5 * u.dot(mass * u);
}

double reduced_energy(const Vector& c) { return 0.5 * c.squaredNorm(); }

double enstrophy(const SparseMatrix& curl_gram, const Vector& u, double nu) {
  if (u.size() != curl_gram.cols()) throw DimensionError("enstrophy: field length mismatch");
  return 0.5 * nu * u.dot(curl_gram * u);
}

double reduced_enstrophy(const DenseMatrix& reduced_curl_gram, const Vector& c, double nu) {
  if (c.size() != reduced_curl_gram.cols()) throw DimensionError("enstrophy: coefficient length mismatch");
  return 0.5 * nu * c.dot(reduced_curl_gram * c);
}

TimeSeries::TimeSeries(std::vector<std::string> labels)
    : labels_(std::move(labels)), values_(labels_.size()) {}

void TimeSeries::append(double time, std::span<const double> values) {
  if (values.size() != labels_.size()) throw DimensionError("time series: one value per label expected");
  if (!times_.empty() && !(time > times_.back()))
    throw InvariantError("time series: times must increase strictly");
  times_.push_back(time);
  for (std::size_t l = 0; l < values.size(); ++l) values_[l].push_back(values[l]);
}

std::string TimeSeries::to_csv() const {
  std::ostringstream out;
  out << "time,label,value\n";
  for (std::size_t n = 0; n < times_.size(); ++n)
    for (std::size_t l = 0; l < labels_.size(); ++l)
      out << fmt(times_[n]) << ',' << labels_[l] << ',' << fmt(values_[l][n]) << '\n';
  return out.str();
}

double relative_l2_error(const SparseMatrix& mass, std::span<const double> times,
                         std::span<const Vector> reference, std::span<const Vector> candidate) {
  if (reference.size() != times.size() || candidate.size() != times.size())
    throw GridMismatchError("trajectories are not sampled on the same time grid");
  if (times.empty()) throw GridMismatchError("empty time grid");
  for (std::size_t n = 1; n < times.size(); ++n)
    if (!(times[n] > times[n - 1])) throw GridMismatchError("time grid must increase strictly");

  std::vector<double> diff_sq(times.size()), ref_sq(times.size());
  for (std::size_t n = 0; n < times.size(); ++n) {
    if (reference[n].size() != mass.cols() || candidate[n].size() != mass.cols())
      throw DimensionError("trajectory sample has wrong length");
    const Vector d = reference[n] - candidate[n];
    diff_sq[n] = d.dot(mass * d);
    ref_sq[n] = reference[n].dot(mass * reference[n]);
  }
  auto trapezoid = [&](const std::vector<double>& f) {
    if (f.size() == 1) return f[0];
    double s = 0.0;
    for (std::size_t n = 1; n < f.size(); ++n) s += 0.5 * (times[n] - times[n - 1]) * (f[n] + f[n - 1]);
    return s;
  };
  const double den = trapezoid(ref_sq);
  const double num = trapezoid(diff_sq);
  if (den <= 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

std::string singular_values_csv(const Vector& spectrum) {
  std::ostringstream out;
  out << "i,sigma,lambda\n";
  for (Eigen::Index i = 0; i < spectrum.size(); ++i)
    out << (i + 1) << ',' << fmt(std::sqrt(std::max(spectrum[i], 0.0))) << ',' << fmt(spectrum[i]) << '\n';
  return out.str();
}

void export_singular_values(const Vector& spectrum, const std::filesystem::path& path) {
  write_file_atomic(path, singular_values_csv(spectrum));
}

std::string error_table_csv(std::span<const int> ranks, std::span<const double> errors) {
  if (ranks.size() != errors.size()) throw DimensionError("error table: ranks and errors differ in length");
  std::ostringstream out;
  out << "R,relative_error\n";
  for (std::size_t i = 0; i < ranks.size(); ++i) out << ranks[i] << ',' << fmt(errors[i]) << '\n';
  return out.str();
}

}  // namespace enpod
