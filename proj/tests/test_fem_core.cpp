#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <set>

#include "enpod/assembly.hpp"
#include "enpod/errors.hpp"
#include "enpod/linsolve.hpp"
#include "enpod/mesh.hpp"
#include "enpod/quadrature.hpp"
#include "enpod/sparse_matrix.hpp"
#include "enpod/taylor_hood.hpp"
#include "oracles.hpp"

using namespace enpod;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

/// Small meshes with at most 8 triangles, one of them skewed.
std::vector<Mesh> small_meshes() {
  std::vector<Mesh> out;
  out.push_back(generate_unit_square(2));
  out.push_back(generate_unit_square(3));
  out.push_back(Mesh({{0.0, 0.0}, {1.3, 0.2}, {0.4, 1.1}, {1.6, 1.4}, {-0.3, 0.9}},
                     {{0, 1, 2}, {1, 3, 2}, {0, 2, 4}},
                     std::vector<BoundaryMarker>(5, BoundaryMarker::Other)));
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

double rel_matrix(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).norm() / b.norm(); }

Vector field_vector(const TaylorHoodSpace& s, std::function<std::array<double, 2>(double, double)> f) {
  return s.interpolate([f](double x, double y, double) { return f(x, y); }, 0.0);
}

}  // namespace

TEST(Quadrature, WeightsSumToReferenceArea) {
  for (int d : {1, 2, 5, 6}) {
    double sum = 0.0;
    for (const auto& p : triangle_rule(d).points) sum += p.weight;
    EXPECT_NEAR(sum, 0.5, 1e-15) << "degree " << d;
  }
}

TEST(Quadrature, ExactForMonomialsUpToDegree) {
  // int_ref l0^a l1^b l2^c = a! b! c! 2! / (a+b+c+2)! * (1/2)
  for (int d : {1, 2, 5, 6}) {
    const auto& rule = triangle_rule(d);
    EXPECT_EQ(rule.degree, d);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b)
        for (int c = 0; a + b + c <= d; ++c) {
          double q = 0.0;
          for (const auto& p : rule.points)
            q += p.weight * std::pow(p.barycentric[0], a) * std::pow(p.barycentric[1], b) *
                 std::pow(p.barycentric[2], c);
          const double exact = factorial(a) * factorial(b) * factorial(c) * 2.0 / factorial(a + b + c + 2) * 0.5;
          EXPECT_NEAR(q, exact, 1e-13) << "degree " << d << " exponents " << a << b << c;
        }
  }
}

TEST(Quadrature, UnknownDegreeThrows) { EXPECT_THROW(triangle_rule(9), std::exception); }

TEST(Oracle, GaussLegendreIntegratesPolynomials) {
  const auto g = oracle::gauss_legendre(6);
  for (int k = 0; k <= 11; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], k);
    EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14);
  }
}

TEST(TaylorHood, DofCounts) {
  for (const Mesh& m : {generate_unit_square(4), generate_offset_annulus(16, 3, {})}) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other, BoundaryMarker::OuterCircle, BoundaryMarker::InnerCircle});
    EXPECT_EQ(s.n_vel(), static_cast<int>(2 * (m.num_vertices() + m.num_edges())));
    EXPECT_EQ(s.n_pr(), static_cast<int>(m.num_vertices()));
  }
}

TEST(TaylorHood, DirichletDofsCoverMarkedBoundary) {
  const Mesh m = generate_offset_annulus(16, 3, {});
  const TaylorHoodSpace s(m);
  std::set<int> expected;
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (!m.is_boundary_edge(e)) continue;
    const int nodes[3] = {m.edges()[e][0], m.edges()[e][1], static_cast<int>(m.num_vertices() + e)};
    for (int n : nodes)
      for (int c = 0; c < 2; ++c) expected.insert(s.velocity_dof(c, n));
  }
  const std::set<int> got(s.dirichlet_dofs().begin(), s.dirichlet_dofs().end());
  EXPECT_EQ(got, expected);
  for (int d = 0; d < s.n_vel(); ++d) EXPECT_EQ(s.is_dirichlet(d), expected.count(d) == 1);
}

TEST(TaylorHood, SampleReproducesQuadraticFields) {
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  auto f = [](double x, double y) { return std::array<double, 2>{x * x - 2 * x * y + 3, y * y + x}; };
  const Vector u = field_vector(s, f);
  for (std::size_t t = 0; t < s.mesh().num_triangles(); t += 7) {
    const std::array<double, 3> bary{0.2, 0.3, 0.5};
    const auto p = s.map_to_physical(t, bary);
    const auto v = s.sample(u, t, bary);
    EXPECT_NEAR(v.value[0], p.x * p.x - 2 * p.x * p.y + 3, 1e-12);
    EXPECT_NEAR(v.value[1], p.y * p.y + p.x, 1e-12);
    EXPECT_NEAR(v.grad[0][0], 2 * p.x - 2 * p.y, 1e-11);
    EXPECT_NEAR(v.grad[0][1], -2 * p.x, 1e-11);
    EXPECT_NEAR(v.grad[1][0], 1.0, 1e-11);
    EXPECT_NEAR(v.grad[1][1], 2 * p.y, 1e-11);
  }
}

TEST(SparseMatrix, TripletsSumDuplicatesAndSortColumns) {
  const auto a = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, -1.0}});
  EXPECT_EQ(a.nnz(), 3U);
  EXPECT_EQ(a.coeff(0, 2), 4.0);
  EXPECT_EQ(a.coeff(0, 0), 2.0);
  EXPECT_EQ(a.coeff(1, 0), 0.0);
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.row_ptr()[r] + 1; k < a.row_ptr()[r + 1]; ++k) EXPECT_LT(a.col_idx()[k - 1], a.col_idx()[k]);
}

TEST(SparseMatrix, ProductsMatchDense) {
  std::mt19937_64 rng(5);
  std::vector<Triplet> t;
  std::uniform_int_distribution<int> ri(0, 14), ci(0, 9);
  std::uniform_real_distribution<double> v(-1, 1);
  for (int k = 0; k < 60; ++k) t.push_back({ri(rng), ci(rng), v(rng)});
  const auto a = SparseMatrix::from_triplets(15, 10, t);
  const DenseMatrix d = a.to_dense();
  const Vector x = oracle::random_vector(10, rng), y = oracle::random_vector(15, rng);
  EXPECT_LE((a * x - d * x).norm(), 1e-14);
  EXPECT_LE((a.transpose_multiply(y) - d.transpose() * y).norm(), 1e-14);
  EXPECT_LE((a.transpose().to_dense() - d.transpose()).norm(), 0.0);
  EXPECT_LE((DenseMatrix(a.to_eigen()) - d).norm(), 0.0);
}

TEST(SparseMatrix, SymmetryFlagIsVerified) {
  auto s = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  EXPECT_NO_THROW(s.mark_symmetric());
  EXPECT_TRUE(s.symmetric_flag());
  auto n = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.5}});
  EXPECT_THROW(n.mark_symmetric(), InvariantError);
}

TEST(SparseMatrix, SaddlePointLayout) {
  const auto a = SparseMatrix::identity(2);
  const auto b = SparseMatrix::from_triplets(1, 2, {{0, 0, 2.0}, {0, 1, 3.0}});
  Vector m(1);
  m << 0.5;
  const DenseMatrix s = saddle_point_matrix(a, b, m).to_dense();
  DenseMatrix expected(4, 4);
  expected << 1, 0, 2, 0, 0, 1, 3, 0, 2, 3, 0, 0.5, 0, 0, 0.5, 0;
  EXPECT_EQ(s, expected);
}

TEST(Assembly, MassMatchesOracle) {
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    const auto mass = assemble_velocity_mass(s);
    EXPECT_LE(rel_matrix(mass.to_dense(), ref.mass()), 1e-10);
    EXPECT_TRUE(mass.is_symmetric());
  }
}

TEST(Assembly, StiffnessMatchesOracle) {
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    EXPECT_LE(rel_matrix(assemble_velocity_stiffness(s).to_dense(), ref.stiffness()), 1e-10);
  }
}

TEST(Assembly, DivergenceMatchesOracle) {
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    EXPECT_LE(rel_matrix(assemble_divergence(s).to_dense(), ref.divergence()), 1e-10);
  }
}

TEST(Assembly, MassIsPositiveDefiniteAndIntegratesConstants) {
  const TaylorHoodSpace s(generate_unit_square(2), {BoundaryMarker::Other});
  const auto mass = assemble_velocity_mass(s);
  const Vector one_x = field_vector(s, [](double, double) { return std::array<double, 2>{1.0, 0.0}; });
  EXPECT_NEAR(one_x.dot(mass * one_x), 1.0, 1e-12);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(mass.to_dense());
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Assembly, StiffnessKernelAndDirichletEnergy) {
  const TaylorHoodSpace s(generate_unit_square(4), {BoundaryMarker::Other});
  const auto k = assemble_velocity_stiffness(s);
  const Vector c = field_vector(s, [](double, double) { return std::array<double, 2>{2.5, -1.0}; });
  EXPECT_LE((k * c).cwiseAbs().maxCoeff(), 1e-12);
  const Vector x = field_vector(s, [](double x, double) { return std::array<double, 2>{x, 0.0}; });
  EXPECT_NEAR(x.dot(k * x), 1.0, 1e-10);
  EXPECT_TRUE(k.is_symmetric());
}

TEST(Assembly, DivergenceOfSimpleFields) {
  const TaylorHoodSpace s(generate_unit_square(4), {BoundaryMarker::Other});
  const auto b = assemble_divergence(s);
  const Vector free = field_vector(s, [](double x, double y) { return std::array<double, 2>{x, -y}; });
  EXPECT_LE((b * free).norm(), 1e-10);
  const Vector ux = field_vector(s, [](double x, double) { return std::array<double, 2>{x, 0.0}; });
  // -(div u, 1) summed over the pressure partition of unity
  EXPECT_NEAR(-(b * ux).sum(), 1.0, 1e-10);
}

TEST(Assembly, PressureMeanWeightsSumToArea) {
  const TaylorHoodSpace s(generate_offset_annulus(16, 3, {}));
  EXPECT_NEAR(pressure_mean_weights(s).sum(), s.mesh().area(), 1e-12);
}

TEST(Assembly, TrilinearMatchesOracle) {
  std::mt19937_64 rng(17);
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector w = oracle::random_vector(s.n_vel(), rng), u = oracle::random_vector(s.n_vel(), rng),
                   v = oracle::random_vector(s.n_vel(), rng);
      EXPECT_LE(rel(trilinear_bstar(s, w, u, v), ref.bstar(w, u, v)), 1e-10);
    }
  }
}

TEST(Assembly, TrilinearIsSkewAndLinear) {
  std::mt19937_64 rng(19);
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  const int n = s.n_vel();
  for (int trial = 0; trial < 10; ++trial) {
    const Vector w = oracle::random_vector(n, rng), u = oracle::random_vector(n, rng),
                 v = oracle::random_vector(n, rng);
    const double scale = trilinear_bstar(s, w, u, v) == 0.0 ? 1.0 : std::abs(trilinear_bstar(s, w, u, v));
    EXPECT_LE(std::abs(trilinear_bstar(s, w, u, u)), 1e-12 * std::max(scale, 1.0));
    EXPECT_NEAR(trilinear_bstar(s, w, u, v), -trilinear_bstar(s, w, v, u), 1e-11 * scale);
    EXPECT_NEAR(trilinear_bstar(s, 2.0 * w + u, u, v),
                2.0 * trilinear_bstar(s, w, u, v) + trilinear_bstar(s, u, u, v), 1e-10 * scale);
  }
  EXPECT_EQ(trilinear_bstar(s, Vector::Zero(n), Vector::Ones(n), Vector::Ones(n)), 0.0);
  EXPECT_THROW(trilinear_bstar(s, Vector::Zero(3), Vector::Ones(n), Vector::Ones(n)), DimensionError);
}

TEST(Assembly, SkewFormEqualsConvectiveFormWithDivergenceCorrection) {
  std::mt19937_64 rng(23);
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    // with v vanishing on the boundary the two forms coincide after integrating by parts
    for (int trial = 0; trial < 3; ++trial) {
      const Vector w = oracle::random_vector(s.n_vel(), rng), u = oracle::random_vector(s.n_vel(), rng);
      Vector v = oracle::random_vector(s.n_vel(), rng);
      s.zero_dirichlet(v);
      EXPECT_LE(rel(trilinear_bstar(s, w, u, v), ref.convective_form(w, u, v)), 1e-11);
    }
  }
}

TEST(Assembly, ConvectionMatrixRepresentsTrilinearForm) {
  std::mt19937_64 rng(29);
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  const int n = s.n_vel();
  const Vector w = oracle::random_vector(n, rng);
  const auto conv = assemble_convection(s, w);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = oracle::random_vector(n, rng), v = oracle::random_vector(n, rng);
    EXPECT_LE(rel(v.dot(conv * u), trilinear_bstar(s, w, u, v)), 1e-12);
    EXPECT_LE(std::abs(u.dot(conv * u)), 1e-12 * (conv * u).norm() * u.norm());
  }
  EXPECT_EQ(assemble_convection(s, Vector::Zero(n)).max_abs(), 0.0);
  const Vector u = oracle::random_vector(n, rng);
  EXPECT_LE((convection_action(s, w, u) - conv * u).norm(), 1e-12 * (conv * u).norm());
}

TEST(Assembly, ConvectionDerivativeMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  const int n = s.n_vel();
  const Vector u = oracle::random_vector(n, rng), dir = oracle::random_vector(n, rng);
  const SparseMatrix nmat = assemble_convection(s, u);
  const SparseMatrix dmat = assemble_convection_derivative(s, u);
  // D(u) w = N(w) u exactly (bilinearity)
  EXPECT_LE((dmat * dir - assemble_convection(s, dir) * u).norm(), 1e-12 * (dmat * dir).norm());
  // central difference of u -> N(u) u is exact for a quadratic map
  const double h = 1e-3;
  const Vector fd = (convection_action(s, u + h * dir, u + h * dir) - convection_action(s, u - h * dir, u - h * dir)) /
                    (2.0 * h);
  const Vector jd = nmat * dir + dmat * dir;
  EXPECT_LE((fd - jd).norm(), 1e-9 * jd.norm());
}

TEST(Assembly, LoadMatchesOracleForRotationalForce) {
  for (const Mesh& m : small_meshes()) {
    const TaylorHoodSpace s(m, {BoundaryMarker::Other});
    const oracle::Reference ref(s);
    auto f = [](double x, double y) {
      const double r = 1.0 - x * x - y * y;
      return std::array<double, 2>{-4.0 * y * r, 4.0 * x * r};
    };
    const Vector got = project_force(s, [f](double x, double y, double) { return f(x, y); }, 0.0);
    EXPECT_LE((got - ref.load(f)).norm() / ref.load(f).norm(), 1e-10);
  }
}

TEST(Assembly, LoadOfConstantsAndZero) {
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  const Vector zero = project_force(s, [](double, double, double) { return std::array<double, 2>{0.0, 0.0}; }, 0.0);
  EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
  const Vector one = project_force(s, [](double, double, double) { return std::array<double, 2>{1.0, 0.0}; }, 0.0);
  EXPECT_NEAR(one.head(s.num_nodes()).sum(), s.mesh().area(), 1e-10);
  EXPECT_NEAR(one.tail(s.num_nodes()).sum(), 0.0, 1e-14);
  EXPECT_NEAR(force_l2_norm_squared(s, [](double, double, double) { return std::array<double, 2>{1.0, 2.0}; }, 0.0),
              5.0 * s.mesh().area(), 1e-10);
}

TEST(Assembly, DirichletEliminationReproducesLinearHarmonic) {
  const TaylorHoodSpace s(generate_unit_square(6), {BoundaryMarker::Other});
  const auto k = assemble_velocity_stiffness(s);
  const Vector exact = field_vector(s, [](double x, double y) { return std::array<double, 2>{x, 2.0 * y - x}; });
  const auto& dofs = s.dirichlet_dofs();
  std::vector<double> values;
  for (int d : dofs) values.push_back(exact[d]);
  auto sys = apply_dirichlet(k, {Vector::Zero(s.n_vel())}, dofs, values);
  EXPECT_TRUE(sys.matrix.is_symmetric());
  const Vector u = SparseFactorization(sys.matrix).solve(sys.rhs[0]);
  EXPECT_LE((u - exact).cwiseAbs().maxCoeff(), 1e-10);
  for (std::size_t i = 0; i < dofs.size(); ++i) EXPECT_EQ(u[dofs[i]], values[i]);
}

TEST(Assembly, HomogeneousDirichletGivesZeroBoundary) {
  const TaylorHoodSpace s(generate_offset_annulus(12, 3, {}));
  const auto k = assemble_velocity_stiffness(s);
  auto m = assemble_velocity_mass(s);
  const ScaledMatrix terms[] = {{1.0, &k}, {1.0, &m}};
  const auto a = linear_combination(terms);
  std::mt19937_64 rng(37);
  auto sys = apply_dirichlet(a, {oracle::random_vector(s.n_vel(), rng)}, s.dirichlet_dofs(),
                             std::vector<double>(s.dirichlet_dofs().size(), 0.0));
  const Vector u = SparseFactorization(sys.matrix).solve(sys.rhs[0]);
  for (int d : s.dirichlet_dofs()) EXPECT_EQ(u[d], 0.0);
}

TEST(Assembly, CurlGramOfRigidRotation) {
  const TaylorHoodSpace s(generate_unit_square(4), {BoundaryMarker::Other});
  const Vector u = field_vector(s, [](double x, double y) { return std::array<double, 2>{-y, x}; });
  EXPECT_NEAR(u.dot(assemble_curl_gram(s) * u), 4.0, 1e-10);
}

TEST(Assembly, InfSupConstantDoesNotDegenerate) {
  // beta^2 = smallest nonzero eigenvalue of B K^{-1} B^T against the pressure mass
  std::vector<double> betas;
  for (int n : {5, 9, 17}) {
    const TaylorHoodSpace s(generate_unit_square(n), {BoundaryMarker::Other});
    const auto k = assemble_velocity_stiffness(s);
    const auto dofs = s.dirichlet_dofs();
    const auto sys = apply_dirichlet(k, {}, dofs, std::vector<double>(dofs.size(), 0.0));
    DenseMatrix b = assemble_divergence(s).to_dense();
    for (int d : dofs) b.col(d).setZero();
    const SparseFactorization lu(sys.matrix);
    DenseMatrix kinv_bt(s.n_vel(), s.n_pr());
    for (int j = 0; j < s.n_pr(); ++j) kinv_bt.col(j) = lu.solve(b.row(j).transpose());
    const DenseMatrix schur = b * kinv_bt;
    const DenseMatrix q = assemble_pressure_mass(s).to_dense();
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(0.5 * (schur + schur.transpose()), q);
    // the constant pressure lies in the kernel; take the next eigenvalue
    betas.push_back(std::sqrt(es.eigenvalues()[1]));
  }
  for (double beta : betas) EXPECT_GT(beta, 0.2);
  EXPECT_GT(betas.back(), 0.8 * betas.front());
}
