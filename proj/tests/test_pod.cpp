#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "enpod/assembly.hpp"
#include "enpod/errors.hpp"
#include "enpod/full_order.hpp"
#include "enpod/mesh.hpp"
#include "enpod/pod.hpp"
#include "oracles.hpp"

using namespace enpod;

namespace {

/// Small space with discretely divergence-free fields from Stokes solves.
struct PodFixture : ::testing::Test {
  TaylorHoodSpace space{generate_offset_annulus(16, 4, {})};
  FlowSolver solver{space, 0.01};

  Vector stokes_field(double a, double b, double k) const {
    return solver
        .solve_steady_stokes([a, b, k](double x, double y, double) {
          return std::array<double, 2>{a * std::sin(k * y) + b * x, std::cos(k * x) - b * y * y};
        })
        .velocity;
  }

  /// Stokes response to a random combination of low Fourier modes; columns
  /// of a set are then mixtures of many independent fields.
  Vector random_field(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::array<double, 18> a{};
    for (double& v : a) v = u(rng);
    return solver
        .solve_steady_stokes([a](double x, double y, double) {
          std::array<double, 2> f{0.0, 0.0};
          int n = 0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q, ++n) {
              f[0] += a[2 * n] * std::sin((p + 1) * x + q * y);
              f[1] += a[2 * n + 1] * std::cos(q * x - (p + 1) * y);
            }
          return f;
        })
        .velocity;
  }

  SnapshotSet random_set(int members, int per_member, unsigned seed) const {
    std::mt19937_64 rng(seed);
    SnapshotSet set;
    set.matrix.resize(space.n_vel(), members * per_member);
    for (int j = 0; j < members; ++j)
      for (int m = 0; m < per_member; ++m) {
        set.matrix.col(j * per_member + m) = random_field(rng);
        set.columns.push_back({j, m, 0.1 * m, 0.01 * j});
      }
    return set;
  }

  /// Mass-orthonormal pair from Gram-Schmidt on two Stokes fields.
  std::pair<Vector, Vector> orthonormal_pair() const {
    const auto& m = solver.mass();
    Vector e1 = stokes_field(1.0, 0.2, 2.0);
    e1 /= std::sqrt(e1.dot(m * e1));
    Vector e2 = stokes_field(-0.3, 0.7, 4.0);
    e2 -= e1.dot(m * e2) * e1;
    e2 /= std::sqrt(e2.dot(m * e2));
    return {e1, e2};
  }
};

SnapshotSet from_columns(std::vector<Vector> cols) {
  SnapshotSet set;
  set.matrix.resize(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    set.matrix.col(static_cast<Eigen::Index>(i)) = cols[i];
    set.columns.push_back({0, static_cast<int>(i), 0.1 * static_cast<double>(i), 0.0});
  }
  return set;
}

}  // namespace

TEST_F(PodFixture, CorrelationMatchesDenseOracle) {
  const SnapshotSet set = random_set(2, 4, 1);
  const oracle::Reference ref(space);
  const DenseMatrix expected = set.matrix.transpose() * ref.mass() * set.matrix;
  const DenseMatrix c = build_correlation(set, solver.mass());
  EXPECT_LE((c - expected).norm() / expected.norm(), 1e-12);
  EXPECT_EQ(c, c.transpose());
}

TEST_F(PodFixture, CorrelationOfSimpleSets) {
  Vector u = stokes_field(1.0, 0.0, 2.0);
  u *= std::sqrt(3.0 / u.dot(solver.mass() * u));
  EXPECT_NEAR(build_correlation(from_columns({u}), solver.mass())(0, 0), 3.0, 1e-12);
  const auto [e1, e2] = orthonormal_pair();
  const DenseMatrix c = build_correlation(from_columns({e1, 2.0 * e2}), solver.mass());
  EXPECT_NEAR(c(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(c(1, 1), 4.0, 1e-12);
  EXPECT_NEAR(c(0, 1), 0.0, 1e-12);
}

TEST_F(PodFixture, HandComputedTwoModeBasis) {
  const auto [eu, ew] = orthonormal_pair();
  const PodDecomposition pod(from_columns({eu, 2.0 * ew}), solver.mass(), solver.stiffness(), 0.01);
  EXPECT_NEAR(pod.spectrum()[0], 4.0, 1e-12);
  EXPECT_NEAR(pod.spectrum()[1], 1.0, 1e-12);
  const PodBasis b = pod.basis(2);
  EXPECT_LE((b.modes().col(0) - ew).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((b.modes().col(1) - eu).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(PodFixture, SingleSnapshotBasis) {
  const Vector u = stokes_field(0.5, 0.5, 3.0);
  const double norm2 = u.dot(solver.mass() * u);
  const PodBasis b = pod_basis(from_columns({u}), solver.mass(), solver.stiffness(), 0.01, 1);
  EXPECT_NEAR(b.eigenvalues()[0], norm2, 1e-12 * norm2);
  EXPECT_LE((b.modes().col(0) - u / std::sqrt(norm2)).norm(), 1e-10 * b.modes().col(0).norm());
  EXPECT_NEAR(b.s_norm(), 1.0 + 0.01 * b.grad_gram()(0, 0), 1e-12);
}

TEST_F(PodFixture, RankErrors) {
  const SnapshotSet set = random_set(1, 3, 2);
  const PodDecomposition pod(set, solver.mass(), solver.stiffness(), 0.01);
  EXPECT_THROW(pod.basis(0), RankError);
  EXPECT_THROW(pod.basis(4), RankError);
  // duplicated column: rank stays 3 of 4
  SnapshotSet dup = set;
  dup.matrix.conservativeResize(Eigen::NoChange, 4);
  dup.matrix.col(3) = dup.matrix.col(0);
  dup.columns.push_back({0, 3, 0.3, 0.0});
  const PodDecomposition pd(dup, solver.mass(), solver.stiffness(), 0.01);
  EXPECT_EQ(pd.numerical_rank(), 3);
  EXPECT_THROW(pd.basis(4), RankError);
}

TEST_F(PodFixture, BasisInvariants) {
  const SnapshotSet set = random_set(2, 6, 3);
  const PodDecomposition pod(set, solver.mass(), solver.stiffness(), 0.01);
  const PodBasis b = pod.basis(8);
  const DenseMatrix id = DenseMatrix::Identity(8, 8);
  EXPECT_LE((b.modes().transpose() * (solver.mass().to_eigen() * b.modes()) - id).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 0; i < 8; ++i) EXPECT_LE(solver.divergence_norm(b.modes().col(i)), 1e-9);
  for (int i = 1; i < pod.count(); ++i) EXPECT_GE(pod.spectrum()[i - 1], pod.spectrum()[i]);
  EXPECT_GT(b.eigenvalues()[7], 0.0);
  EXPECT_LE((b.s_matrix() - (b.mass_gram() + 0.01 * b.grad_gram())).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(b.m_inv_norm(), 1.0, 1e-8);
  // sign rule
  for (int i = 0; i < pod.count(); ++i) {
    Eigen::Index k = 0;
    pod.eigenvectors().col(i).cwiseAbs().maxCoeff(&k);
    EXPECT_GT(pod.eigenvectors()(k, i), 0.0);
  }
}

TEST_F(PodFixture, TraceIdentity) {
  const SnapshotSet set = random_set(2, 5, 4);
  const PodDecomposition pod(set, solver.mass(), solver.stiffness(), 0.01);
  double energy = 0.0;
  for (int c = 0; c < set.count(); ++c) energy += set.matrix.col(c).dot(solver.mass() * set.matrix.col(c));
  EXPECT_NEAR(pod.spectrum().sum(), energy, 1e-10 * energy);
}

TEST_F(PodFixture, NestedBases) {
  const PodDecomposition pod(random_set(2, 5, 5), solver.mass(), solver.stiffness(), 0.01);
  const PodBasis small = pod.basis(3), large = pod.basis(7);
  EXPECT_EQ(small.modes(), large.modes().leftCols(3));
  const PodBasis cut = large.truncated(3);
  EXPECT_EQ(cut.modes(), small.modes());
  EXPECT_LE((cut.grad_gram() - small.grad_gram()).cwiseAbs().maxCoeff(), 1e-12 * small.grad_gram().norm());
  EXPECT_THROW(large.truncated(8), RankError);
}

TEST_F(PodFixture, ProjectionIdentitiesHold) {
  const PodDecomposition pod(random_set(2, 6, 6), solver.mass(), solver.stiffness(), 0.01);
  for (int r = 0; r <= pod.numerical_rank(); ++r) {
    const auto l2 = projection_identity_l2(pod, r);
    const auto h1 = projection_identity_h1(pod, r);
    EXPECT_LE(l2.gap, 1e-9) << "R = " << r;
    EXPECT_LE(h1.gap, 1e-8) << "R = " << r;
  }
  const auto all = projection_identity_l2(pod, pod.numerical_rank());
  EXPECT_LE(all.lhs, 1e-12 * pod.spectrum()[0]);
  const auto none = projection_identity_l2(pod, 0);
  EXPECT_NEAR(none.lhs, pod.spectrum().sum() / pod.count(), 1e-12 * none.lhs);
  EXPECT_THROW(projection_identity_l2(pod, pod.numerical_rank() + 1), RankError);
}

TEST_F(PodFixture, OneSnapshotGradientIdentity) {
  const Vector u = stokes_field(0.4, -0.2, 2.5);
  const PodDecomposition pod(from_columns({u}), solver.mass(), solver.stiffness(), 0.01);
  const auto h1 = projection_identity_h1(pod, 0);
  const double grad2 = u.dot(solver.stiffness() * u);
  EXPECT_NEAR(h1.lhs, grad2, 1e-12 * grad2);
  EXPECT_NEAR(h1.rhs, grad2, 1e-10 * grad2);
}

TEST_F(PodFixture, ProjectionResidualIsOrthogonal) {
  const PodBasis b = PodDecomposition(random_set(2, 4, 7), solver.mass(), solver.stiffness(), 0.01).basis(5);
  std::mt19937_64 rng(8);
  const Vector u = oracle::random_vector(space.n_vel(), rng);
  const Vector c = b.project(u);
  const Vector residual = u - b.lift(c);
  const oracle::Reference ref(space);
  EXPECT_LE((b.modes().transpose() * ref.mass() * residual).cwiseAbs().maxCoeff(), 1e-10 * u.norm());
  const Vector e1 = b.project(b.modes().col(0));
  EXPECT_LE((e1 - Vector::Unit(5, 0)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(b.project(Vector::Zero(3)), DimensionError);
}

TEST_F(PodFixture, InverseInequality) {
  // with nu = 1, S_R = M_R + K_R and the bound holds as stated
  const SnapshotSet set = random_set(2, 5, 9);
  const PodBasis unit = PodDecomposition(set, solver.mass(), solver.stiffness(), 1.0).basis(6);
  const PodBasis b = PodDecomposition(set, solver.mass(), solver.stiffness(), 0.01).basis(6);
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector c = oracle::random_vector(6, rng);
    const Vector v = unit.lift(c);
    const double grad = std::sqrt(v.dot(solver.stiffness() * v)), l2 = std::sqrt(v.dot(solver.mass() * v));
    EXPECT_LE(grad, std::sqrt(unit.s_norm() * unit.m_inv_norm()) * l2 * (1 + 1e-8));
    // for general nu the viscosity weights the gradient: nu |grad v|^2 <= |S_R| |M_R^-1| |v|^2
    const Vector w = b.lift(c);
    const double grad_w = w.dot(solver.stiffness() * w), l2_w = w.dot(solver.mass() * w);
    EXPECT_LE(0.01 * grad_w, b.s_norm() * b.m_inv_norm() * l2_w * (1 + 1e-8));
  }
}

TEST_F(PodFixture, SpectralNormsMatchDenseEigensolver) {
  const PodBasis b = PodDecomposition(random_set(2, 5, 11), solver.mass(), solver.stiffness(), 0.01).basis(6);
  const auto n = spectral_norms(b);
  const DenseMatrix s = b.s_matrix();
  const double ref = Eigen::EigenSolver<DenseMatrix>(s).eigenvalues().real().maxCoeff();
  EXPECT_NEAR(n.s_norm, ref, 1e-10 * ref);
  EXPECT_NEAR(n.m_inv_norm, 1.0, 1e-8);
}

TEST_F(PodFixture, PodIsOptimalAgainstRandomSubspaces) {
  const SnapshotSet set = random_set(2, 6, 12);
  const PodDecomposition pod(set, solver.mass(), solver.stiffness(), 0.01);
  const int r = 4;
  const double pod_error = projection_identity_l2(pod, r).lhs;
  const auto m = solver.mass().to_eigen();
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    // random M-orthonormal R-subspace of the snapshot span
    DenseMatrix q = set.matrix * DenseMatrix::NullaryExpr(set.count(), r, [&]() {
                      return std::uniform_real_distribution<double>(-1, 1)(rng);
                    });
    for (int i = 0; i < r; ++i) {
      for (int k = 0; k < i; ++k) q.col(i) -= q.col(k).dot(m * q.col(i)) * q.col(k);
      q.col(i) /= std::sqrt(q.col(i).dot(m * q.col(i)));
    }
    const DenseMatrix res = set.matrix - q * (q.transpose() * (m * set.matrix));
    const double err = res.cwiseProduct(m * res).sum() / set.count();
    EXPECT_LE(pod_error, err * (1 + 1e-12));
  }
}
