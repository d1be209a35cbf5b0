#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "enpod/assembly.hpp"
#include "enpod/errors.hpp"
#include "enpod/full_order.hpp"
#include "enpod/mesh.hpp"
#include "manufactured.hpp"
#include "oracles.hpp"

using namespace enpod;

namespace {

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

using oracle::observed_order;
using oracle::temporal_error;

}  // namespace

TEST(Stokes, ZeroForceGivesZeroSolution) {
  const TaylorHoodSpace space(generate_offset_annulus(12, 3, {}));
  const FlowSolver solver(space, 0.005);
  const FlowField u = solver.solve_steady_stokes([](double, double, double) { return std::array<double, 2>{0, 0}; });
  EXPECT_EQ(u.velocity.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(u.pressure.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stokes, SolutionIsDivergenceFreeWithZeroMeanPressure) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  const FlowSolver solver(space, 0.005);
  const FlowField u = solver.solve_steady_stokes(PerturbationSpec{1e-3}.force());
  EXPECT_LE(solver.divergence_norm(u.velocity), 1e-9);
  EXPECT_LE(std::abs(pressure_mean_weights(space).dot(u.pressure)), 1e-10 * u.pressure.norm());
  for (int d : space.dirichlet_dofs()) EXPECT_EQ(u.velocity[d], 0.0);
}

TEST(Stokes, ManufacturedSolutionConvergesAtThirdOrder) {
  const double e8 = oracle::stokes_error(8), e16 = oracle::stokes_error(16), e32 = oracle::stokes_error(32);
  EXPECT_NEAR(observed_order(e8, e16), 3.0, 0.3);
  EXPECT_NEAR(observed_order(e16, e32), 3.0, 0.3);
}

TEST(CrankNicolson, ZeroDataStaysZero) {
  const TaylorHoodSpace space(generate_offset_annulus(12, 3, {}));
  const FlowSolver solver(space, 0.005);
  const FlowField zero{Vector::Zero(space.n_vel()), Vector::Zero(space.n_pr()), 0.0};
  const FlowField u1 =
      solver.cn_step(zero, 0.025, [](double, double, double) { return std::array<double, 2>{0.0, 0.0}; });
  EXPECT_EQ(u1.velocity.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(u1.time, 0.025);
}

TEST(CrankNicolson, TemporalOrderTwo) {
  const double e1 = temporal_error(TimeScheme::CrankNicolson, 0.04, true);
  const double e2 = temporal_error(TimeScheme::CrankNicolson, 0.02, true);
  const double e3 = temporal_error(TimeScheme::CrankNicolson, 0.01, true);
  EXPECT_NEAR(observed_order(e1, e2), 2.0, 0.2) << e1 << " " << e2;
  EXPECT_NEAR(observed_order(e2, e3), 2.0, 0.2) << e2 << " " << e3;
}

TEST(CrankNicolson, StokesRegimeReachesSteadyState) {
  const TaylorHoodSpace space(generate_unit_square(9), {BoundaryMarker::Other});
  FlowOptions options;
  options.convection = false;
  const FlowSolver solver(space, 0.1, options);
  auto f = [](double x, double y, double) { return std::array<double, 2>{std::sin(3 * x + y), x * y - 0.25}; };
  const FlowField steady = solver.solve_steady_stokes(f);
  FlowField u{Vector::Zero(space.n_vel()), Vector::Zero(space.n_pr()), 0.0};
  SaddleCache cache;
  for (int n = 0; n < 200; ++n) u = solver.cn_step(u, 0.05, f, &cache);
  EXPECT_LE((u.velocity - steady.velocity).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(CrankNicolson, StepsAreDivergenceFree) {
  const TaylorHoodSpace space(generate_offset_annulus(24, 6, {}));
  const FlowSolver solver(space, 0.005);
  FlowField u = solver.solve_steady_stokes(PerturbationSpec{1e-3}.force());
  int iterations = 0;
  for (int n = 0; n < 3; ++n) {
    u = solver.cn_step(u, 0.025, rotational_body_force(), nullptr, &iterations);
    EXPECT_LE(solver.divergence_norm(u.velocity), 1e-9);
    EXPECT_GE(iterations, 1);
    EXPECT_LE(iterations, 25);
  }
}

TEST(CrankNicolson, IterationCapRaisesNonConvergence) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  FlowOptions options;
  options.picard_max_iterations = 1;
  const FlowSolver solver(space, 0.005, options);
  const FlowField u = solver.solve_steady_stokes(PerturbationSpec{1e-3}.force());
  try {
    solver.cn_step(u, 0.025, rotational_body_force());
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.residual(), 1e-9);
  }
}

TEST(CrankNicolson, PicardAndNewtonAgree) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  FlowOptions picard;
  picard.linearization = Linearization::Picard;
  picard.picard_max_iterations = 100;
  const FlowSolver sp(space, 0.05, picard), sn(space, 0.05);
  const FlowField u0 = sn.solve_steady_stokes(rotational_body_force());
  const FlowField a = sp.cn_step(u0, 0.025, rotational_body_force());
  const FlowField b = sn.cn_step(u0, 0.025, rotational_body_force());
  EXPECT_LE((a.velocity - b.velocity).norm(), 1e-8 * b.velocity.norm());
}

TEST(EnFullFE, TemporalOrderOne) {
  const double e1 = temporal_error(TimeScheme::EnFullFE, 0.04, true);
  const double e2 = temporal_error(TimeScheme::EnFullFE, 0.02, true);
  const double e3 = temporal_error(TimeScheme::EnFullFE, 0.01, true);
  EXPECT_NEAR(observed_order(e1, e2), 1.0, 0.2) << e1 << " " << e2;
  EXPECT_NEAR(observed_order(e2, e3), 1.0, 0.2) << e2 << " " << e3;
}

TEST(EnFullFE, SingleMemberIsLinearlyImplicitEulerStep) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  const FlowSolver solver(space, 0.005);
  const FlowField u0 = solver.solve_steady_stokes(PerturbationSpec{1e-3}.force());
  const double dt = 0.025;
  const auto f = rotational_body_force();
  const std::vector<VectorField> forces{f};
  const EnsembleState next = solver.en_full_fe_step(EnsembleState({u0}), dt, forces);
  const FlowField& u1 = next.member(0);
  // residual of (u1 - u0)/dt + N(u0) u1 + nu K u1 + B^T p1 = F(dt) on free dofs
  Vector r = solver.mass() * (u1.velocity - u0.velocity) / dt + convection_action(space, u0.velocity, u1.velocity) +
             solver.nu() * (solver.stiffness() * u1.velocity) + solver.divergence().transpose_multiply(u1.pressure) -
             project_force(space, f, dt);
  space.zero_dirichlet(r);
  EXPECT_LE(r.norm(), 1e-9 * project_force(space, f, dt).norm());
  EXPECT_LE(solver.divergence_norm(u1.velocity), 1e-9);
}

TEST(EnFullFE, SharedMatrixAcrossMembers) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  const FlowSolver solver(space, 0.005);
  const EnsembleState state({solver.solve_steady_stokes(PerturbationSpec{0.1}.force()),
                             solver.solve_steady_stokes(PerturbationSpec{1.0}.force())});
  const SparseMatrix a0 = solver.en_full_fe_member_matrix(state, 0, 0.025);
  const SparseMatrix a1 = solver.en_full_fe_member_matrix(state, 1, 0.025);
  ASSERT_TRUE(a0.same_pattern(a1));
  EXPECT_EQ(a0.values(), a1.values());
}

TEST(EnFullFE, IdenticalMembersGiveBitwiseIdenticalResults) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  const FlowSolver solver(space, 0.005);
  const FlowField u0 = solver.solve_steady_stokes(PerturbationSpec{1e-3}.force());
  const std::vector<VectorField> forces{rotational_body_force(), rotational_body_force()};
  const EnsembleState next = solver.en_full_fe_step(EnsembleState({u0, u0}), 0.025, forces);
  EXPECT_TRUE(bitwise_equal(next.member(0).velocity, next.member(1).velocity));
  EXPECT_TRUE(bitwise_equal(next.member(0).pressure, next.member(1).pressure));
}

TEST(EnsembleState, MeanAndInvariants) {
  FlowField a{Vector::Ones(4), Vector::Zero(2), 0.5}, b{3.0 * Vector::Ones(4), Vector::Zero(2), 0.5};
  const EnsembleState s({a, b});
  EXPECT_LE((s.mean() - 2.0 * Vector::Ones(4)).norm(), 1e-15);
  FlowField c = b;
  c.time = 0.6;
  EXPECT_THROW(EnsembleState({a, c}), InvariantError);
  FlowField d{Vector::Ones(3), Vector::Zero(2), 0.5};
  EXPECT_THROW(EnsembleState({a, d}), InvariantError);
}

TEST(TimeGrid, CountsAndValidation) {
  const TimeGrid g(0.025, 5.0, 0.1);
  EXPECT_EQ(g.steps(), 200);
  EXPECT_EQ(g.snapshot_stride(), 4);
  EXPECT_EQ(g.snapshot_count(), 51);
  EXPECT_THROW(TimeGrid(0.03, 5.0, 0.1), ConfigError);
  EXPECT_THROW(TimeGrid(0.0, 5.0, 0.1), ConfigError);
  EXPECT_THROW(TimeGrid(0.025, 5.01, 0.1), ConfigError);
}

TEST(RunTransient, RecordsSnapshotsAndSeries) {
  const TaylorHoodSpace space(generate_offset_annulus(16, 4, {}));
  const FlowSolver solver(space, 0.05);
  const std::vector<double> eps{1e-3, -1e-3};
  const EnsembleState init(
      {solver.solve_steady_stokes(PerturbationSpec{eps[0]}.force()), solver.solve_steady_stokes(PerturbationSpec{eps[1]}.force())});
  const std::vector<VectorField> forces{rotational_body_force(), rotational_body_force()};
  const TimeGrid grid(0.025, 0.2, 0.1);
  for (TimeScheme scheme : {TimeScheme::CrankNicolson, TimeScheme::EnFullFE}) {
    const auto run = run_transient(solver, init, scheme, grid, forces);
    ASSERT_EQ(run.snapshots.size(), 3U);
    EXPECT_EQ(run.steps, 8);
    EXPECT_DOUBLE_EQ(run.snapshot_times[2], 0.2);
    EXPECT_EQ(run.energy.times().size(), 9U);
    EXPECT_EQ(run.energy.labels().back(), "mean");
    EXPECT_NEAR(run.energy.values(0).front(), energy(solver.mass(), init.member(0).velocity), 1e-12);
    const SnapshotSet set = make_snapshot_set(run, eps);
    EXPECT_EQ(set.count(), 6);
    EXPECT_EQ(set.columns[4].member, 1);
    EXPECT_EQ(set.columns[4].index, 1);
    EXPECT_DOUBLE_EQ(set.columns[4].epsilon, -1e-3);
    EXPECT_NO_THROW(validate_snapshots(set, solver.divergence()));
  }
}

TEST(Snapshots, ValidationRejectsBadLayoutAndDivergence) {
  const TaylorHoodSpace space(generate_offset_annulus(12, 3, {}));
  const FlowSolver solver(space, 0.005);
  SnapshotSet set;
  set.matrix = DenseMatrix::Zero(space.n_vel(), 2);
  set.columns = {{0, 0, 0.0, 0.0}, {0, 1, 0.1, 0.0}};
  EXPECT_NO_THROW(validate_snapshots(set, solver.divergence()));
  set.columns.pop_back();
  EXPECT_THROW(validate_snapshots(set, solver.divergence()), InvariantError);
  set.columns = {{0, 0, 0.0, 0.0}, {0, 1, 0.1, 0.0}};
  std::mt19937_64 rng(71);
  set.matrix.col(1) = oracle::random_vector(space.n_vel(), rng);
  EXPECT_THROW(validate_snapshots(set, solver.divergence()), InvariantError);
}
