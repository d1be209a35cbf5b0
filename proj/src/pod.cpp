#include "enpod/pod.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "enpod/errors.hpp"

namespace enpod {

namespace {

DenseMatrix sparse_times_dense(const SparseMatrix& a, const DenseMatrix& x) {
  const Eigen::SparseMatrix<double> e = a.to_eigen();
  return DenseMatrix(e * x);
}

double largest_eigenvalue(const DenseMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double relative_gap(double lhs, double rhs, double scale) {
  const double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-14 * scale});
  return denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
}

}  // namespace

DenseMatrix build_correlation(const SnapshotSet& snapshots, const SparseMatrix& mass) {
  if (snapshots.count() < 1) throw DimensionError("correlation of an empty snapshot set");
  if (snapshots.matrix.rows() != mass.rows())
    throw DimensionError("snapshot length does not match the mass matrix");
  const DenseMatrix ma = sparse_times_dense(mass, snapshots.matrix);
  DenseMatrix c = snapshots.matrix.transpose() * ma;
  // symmetrize away round-off so the eigensolver sees an exactly symmetric matrix
  return 0.5 * (c + c.transpose());
}

Vector PodBasis::project(const Vector& u) const {
  if (u.size() != n_vel()) throw DimensionError("field length does not match the basis");
  return modes_.transpose() * (*mass_ * u);
}

Vector PodBasis::lift(const Vector& c) const {
  if (c.size() != rank()) throw DimensionError("coefficient length does not match the basis rank");
  return modes_ * c;
}

void PodBasis::finish(const SparseMatrix& stiffness) {
  mass_gram_ = modes_.transpose() * sparse_times_dense(*mass_, modes_);
  grad_gram_ = modes_.transpose() * sparse_times_dense(stiffness, modes_);
  mass_gram_ = 0.5 * (mass_gram_ + mass_gram_.transpose()).eval();
  grad_gram_ = 0.5 * (grad_gram_ + grad_gram_.transpose()).eval();
  const auto norms = spectral_norms(*this);
  s_norm_ = norms.s_norm;
  m_inv_norm_ = norms.m_inv_norm;
}

PodBasis PodBasis::truncated(int R) const {
  if (R < 1 || R > rank())
    throw RankError("cannot truncate a rank-" + std::to_string(rank()) + " basis to " + std::to_string(R));
  PodBasis b = *this;
  b.modes_ = modes_.leftCols(R);
  b.eigenvalues_ = eigenvalues_.head(R);
  b.mass_gram_ = mass_gram_.topLeftCorner(R, R);
  b.grad_gram_ = grad_gram_.topLeftCorner(R, R);
  const auto norms = spectral_norms(b);
  b.s_norm_ = norms.s_norm;
  b.m_inv_norm_ = norms.m_inv_norm;
  return b;
}

PodBasis PodBasis::from_modes(DenseMatrix modes, Vector eigenvalues, Vector spectrum, const SparseMatrix& mass,
                              const SparseMatrix& stiffness, double nu) {
  if (modes.cols() != eigenvalues.size()) throw DimensionError("one eigenvalue per mode expected");
  if (modes.rows() != mass.rows() || mass.rows() != stiffness.rows())
    throw DimensionError("modes do not match the operators");
  if (!(nu > 0.0)) throw ConfigError("viscosity must be positive");
  PodBasis b;
  b.modes_ = std::move(modes);
  b.eigenvalues_ = std::move(eigenvalues);
  b.spectrum_ = std::move(spectrum);
  b.nu_ = nu;
  b.mass_ = std::make_shared<const SparseMatrix>(mass);
  b.finish(stiffness);
  return b;
}

PodDecomposition::PodDecomposition(SnapshotSet snapshots, SparseMatrix mass, SparseMatrix stiffness,
                                   double nu)
    : snapshots_(std::move(snapshots)),
      mass_(std::make_shared<const SparseMatrix>(std::move(mass))),
      stiffness_(std::make_shared<const SparseMatrix>(std::move(stiffness))),
      nu_(nu) {
  if (!(nu > 0.0)) throw ConfigError("viscosity must be positive");
  correlation_ = build_correlation(snapshots_, *mass_);
  const DenseMatrix ka = sparse_times_dense(*stiffness_, snapshots_.matrix);
  gradient_correlation_ = snapshots_.matrix.transpose() * ka;
  gradient_correlation_ = 0.5 * (gradient_correlation_ + gradient_correlation_.transpose());

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(correlation_);
  if (es.info() != Eigen::Success) throw InvariantError("correlation eigensolver failed");
  const int n = count();
  // ascending -> nonincreasing
  spectrum_.resize(n);
  eigenvectors_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    spectrum_[i] = es.eigenvalues()[n - 1 - i];
    Vector a = es.eigenvectors().col(n - 1 - i);
    Eigen::Index big = 0;
    a.cwiseAbs().maxCoeff(&big);
    if (a[big] < 0.0) a = -a;
    eigenvectors_.col(i) = a;
  }
}

Vector PodDecomposition::gradient_energies() const {
  Vector out(count());
  for (int i = 0; i < count(); ++i)
    out[i] = eigenvectors_.col(i).dot(gradient_correlation_ * eigenvectors_.col(i));
  return out;
}

int PodDecomposition::numerical_rank() const {
  const double cut = kRankTolerance * spectrum_[0];
  int r = 0;
  while (r < count() && spectrum_[r] > cut) ++r;
  return r;
}

PodBasis PodDecomposition::basis(int R) const {
  if (R < 1 || R > count())
    throw RankError("requested rank " + std::to_string(R) + " outside 1.." + std::to_string(count()));
  if (!(spectrum_[R - 1] > kRankTolerance * spectrum_[0]))
    throw RankError("mode " + std::to_string(R) + " is numerically null (lambda = " +
                    std::to_string(spectrum_[R - 1]) + ")");
  PodBasis b;
  b.eigenvalues_ = spectrum_.head(R);
  b.spectrum_ = spectrum_;
  b.modes_ = snapshots_.matrix * eigenvectors_.leftCols(R);
  for (int i = 0; i < R; ++i) b.modes_.col(i) /= std::sqrt(spectrum_[i]);
  b.nu_ = nu_;
  b.mass_ = mass_;
  b.finish(*stiffness_);
  return b;
}

PodBasis pod_basis(const SnapshotSet& snapshots, const SparseMatrix& mass, const SparseMatrix& stiffness,
                   double nu, int R) {
  return PodDecomposition(snapshots, mass, stiffness, nu).basis(R);
}

namespace {

/// Residuals A - Pi_R A, one column per snapshot.
DenseMatrix projection_residuals(const PodDecomposition& pod, int R) {
  if (R < 0 || R > pod.numerical_rank())
    throw RankError("identity rank " + std::to_string(R) + " outside 0.." +
                    std::to_string(pod.numerical_rank()));
  const DenseMatrix& a = pod.snapshots().matrix;
  if (R == 0) return a;
  const PodBasis b = pod.basis(R);
  const DenseMatrix coeffs = b.modes().transpose() * sparse_times_dense(pod.mass(), a);
  return a - b.modes() * coeffs;
}

double mean_quadratic_form(const SparseMatrix& q, const DenseMatrix& cols) {
  const DenseMatrix qc = sparse_times_dense(q, cols);
  return cols.cwiseProduct(qc).sum() / static_cast<double>(cols.cols());
}

}  // namespace

IdentityCheck projection_identity_l2(const PodDecomposition& pod, int R) {
  IdentityCheck out;
  out.lhs = mean_quadratic_form(pod.mass(), projection_residuals(pod, R));
  const Vector& lambda = pod.spectrum();
  // sum the tail from the smallest entry up to limit cancellation
  for (int i = pod.count() - 1; i >= R; --i) out.rhs += lambda[i];
  out.rhs /= pod.count();
  out.gap = relative_gap(out.lhs, out.rhs, lambda.sum() / pod.count());
  return out;
}

IdentityCheck projection_identity_h1(const PodDecomposition& pod, int R) {
  IdentityCheck out;
  out.lhs = mean_quadratic_form(pod.stiffness(), projection_residuals(pod, R));
  const Vector g = pod.gradient_energies();
  for (int i = pod.count() - 1; i >= R; --i) out.rhs += g[i];
  out.rhs /= pod.count();
  out.gap = relative_gap(out.lhs, out.rhs, pod.gradient_correlation().trace() / pod.count());
  return out;
}

SpectralNorms spectral_norms(const PodBasis& basis) {
  SpectralNorms n;
  n.s_norm = largest_eigenvalue(basis.s_matrix());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(basis.mass_gram(), Eigen::EigenvaluesOnly);
  const double smallest = es.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) throw InvariantError("reduced mass matrix is not positive definite");
  n.m_inv_norm = 1.0 / smallest;
  return n;
}

}  // namespace enpod
