#pragma once

#include <memory>

#include "enpod/snapshots.hpp"
#include "enpod/sparse_matrix.hpp"

namespace enpod {

/// Numerically null modes: lambda_i <= kRankTolerance * lambda_1.
inline constexpr double kRankTolerance = 1e-12;

/// C = A^T M A.
DenseMatrix build_correlation(const SnapshotSet& snapshots, const SparseMatrix& mass);

/// R mass-orthonormal modes phi_i = A a_i / sqrt(lambda_i) with their Gram
/// matrices. Modes are nested: basis(R) is the first R columns of basis(R').
class PodBasis {
 public:
  int rank() const { return static_cast<int>(modes_.cols()); }
  int n_vel() const { return static_cast<int>(modes_.rows()); }
  /// n_vel x R, column i is phi_i.
  const DenseMatrix& modes() const { return modes_; }
  /// lambda_1 >= ... >= lambda_R > 0.
  const Vector& eigenvalues() const { return eigenvalues_; }
  /// All eigenvalues of the correlation matrix, nonincreasing.
  const Vector& spectrum() const { return spectrum_; }
  /// M_R = Phi^T M Phi (identity up to round-off).
  const DenseMatrix& mass_gram() const { return mass_gram_; }
  /// K_R = Phi^T K Phi.
  const DenseMatrix& grad_gram() const { return grad_gram_; }
  /// S_R = M_R + nu K_R.
  DenseMatrix s_matrix() const { return mass_gram_ + nu_ * grad_gram_; }
  double nu() const { return nu_; }
  /// Largest eigenvalue of S_R.
  double s_norm() const { return s_norm_; }
  /// Largest eigenvalue of M_R^{-1}.
  double m_inv_norm() const { return m_inv_norm_; }
  const SparseMatrix& mass() const { return *mass_; }

  /// c_i = phi_i^T M u.
  Vector project(const Vector& u) const;
  /// Phi c.
  Vector lift(const Vector& c) const;

  /// The first R modes.
  PodBasis truncated(int R) const;

  /// Rebuilds a basis from stored modes; the Gram matrices and norms are
  /// recomputed from `mass` and `stiffness`.
  static PodBasis from_modes(DenseMatrix modes, Vector eigenvalues, Vector spectrum, const SparseMatrix& mass,
                             const SparseMatrix& stiffness, double nu);

 private:
  friend class PodDecomposition;
  void finish(const SparseMatrix& stiffness);
  DenseMatrix modes_;
  Vector eigenvalues_;
  Vector spectrum_;
  DenseMatrix mass_gram_;
  DenseMatrix grad_gram_;
  double nu_ = 0.0;
  double s_norm_ = 0.0;
  double m_inv_norm_ = 0.0;
  std::shared_ptr<const SparseMatrix> mass_;
};

/// Full eigen-decomposition of the correlation matrix of one snapshot set,
/// from which bases of every admissible rank are cut.
class PodDecomposition {
 public:
  PodDecomposition(SnapshotSet snapshots, SparseMatrix mass, SparseMatrix stiffness, double nu);

  const SnapshotSet& snapshots() const { return snapshots_; }
  int count() const { return snapshots_.count(); }
  const DenseMatrix& correlation() const { return correlation_; }
  /// G = A^T K A.
  const DenseMatrix& gradient_correlation() const { return gradient_correlation_; }
  /// Nonincreasing eigenvalues of the correlation matrix.
  const Vector& spectrum() const { return spectrum_; }
  /// Column i is the unit eigenvector a_i, with its largest-magnitude
  /// entry positive.
  const DenseMatrix& eigenvectors() const { return eigenvectors_; }
  /// a_i^T G a_i, equal to lambda_i ||grad phi_i||^2 when lambda_i > 0 and
  /// well defined for null modes as well.
  Vector gradient_energies() const;
  /// Number of eigenvalues above kRankTolerance * lambda_1.
  int numerical_rank() const;

  /// Throws RankError unless 1 <= R <= count and lambda_R > kRankTolerance * lambda_1.
  PodBasis basis(int R) const;

  const SparseMatrix& mass() const { return *mass_; }
  const SparseMatrix& stiffness() const { return *stiffness_; }
  double nu() const { return nu_; }

 private:
  SnapshotSet snapshots_;
  std::shared_ptr<const SparseMatrix> mass_;
  std::shared_ptr<const SparseMatrix> stiffness_;
  double nu_;
  DenseMatrix correlation_;
  DenseMatrix gradient_correlation_;
  Vector spectrum_;
  DenseMatrix eigenvectors_;
};

PodBasis pod_basis(const SnapshotSet& snapshots, const SparseMatrix& mass, const SparseMatrix& stiffness,
                   double nu, int R);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  /// |lhs - rhs| relative to the larger side; sides below 1e-14 of the mean
  /// snapshot norm count as round-off zeros.
  double gap = 0.0;
};

/// lhs: mean over snapshots of ||u - Pi_R u||^2 computed from the projected
/// fields; rhs: (1/count) sum_{i>R} lambda_i. 0 <= R <= numerical rank.
IdentityCheck projection_identity_l2(const PodDecomposition& pod, int R);
/// Same with ||grad .||^2; rhs: (1/count) sum_{i>R} lambda_i ||grad phi_i||^2.
IdentityCheck projection_identity_h1(const PodDecomposition& pod, int R);

struct SpectralNorms {
  double s_norm = 0.0;
  double m_inv_norm = 0.0;
};

SpectralNorms spectral_norms(const PodBasis& basis);

}  // namespace enpod
