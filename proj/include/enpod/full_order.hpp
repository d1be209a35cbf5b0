#pragma once

#include <memory>
#include <span>
#include <vector>

#include "enpod/diagnostics.hpp"
#include "enpod/linsolve.hpp"
#include "enpod/snapshots.hpp"
#include "enpod/sparse_matrix.hpp"
#include "enpod/taylor_hood.hpp"

namespace enpod {

struct FlowField {
  Vector velocity;
  Vector pressure;
  double time = 0.0;
};

/// J flow fields at a common time together with their velocity mean.
class EnsembleState {
 public:
  EnsembleState() = default;
  /// Throws InvariantError if members disagree on time or sizes.
  explicit EnsembleState(std::vector<FlowField> members);

  const std::vector<FlowField>& members() const { return members_; }
  const FlowField& member(std::size_t j) const { return members_[j]; }
  const Vector& mean() const { return mean_; }
  std::size_t size() const { return members_.size(); }
  double time() const { return members_.empty() ? 0.0 : members_.front().time; }

 private:
  std::vector<FlowField> members_;
  Vector mean_;
};

/// Counterclockwise rotational body force (-4y(1-x^2-y^2), 4x(1-x^2-y^2)).
VectorField rotational_body_force();
/// (sin(3 pi x) sin(3 pi y), cos(3 pi x) cos(3 pi y)).
VectorField perturbation_shape();

/// f_eps = f + eps * shape.
struct PerturbationSpec {
  double epsilon = 0.0;
  VectorField base = rotational_body_force();
  VectorField shape = perturbation_shape();

  VectorField force() const;
};

/// Linearization used inside each Crank-Nicolson step. Picard freezes the
/// convecting field at the previous iterate; Newton adds the derivative of
/// the convecting field and converges quadratically.
enum class Linearization { Picard, Newton };

struct FlowOptions {
  Linearization linearization = Linearization::Newton;
  double picard_tolerance = 1e-9;
  int picard_max_iterations = 25;
  /// false drops the convective term (Stokes regime).
  bool convection = true;
  /// Velocity prescribed on constrained dofs; empty means no-slip.
  VectorField boundary;
  int threads = 1;
};

/// Keeps the symbolic analysis of the saddle-point matrix between steps.
struct SaddleCache {
  std::unique_ptr<SparseFactorization> factorization;
};

/// Full-order Taylor-Hood solvers. The space must outlive the solver.
class FlowSolver {
 public:
  FlowSolver(const TaylorHoodSpace& space, double nu, FlowOptions options = {});

  const TaylorHoodSpace& space() const { return *space_; }
  double nu() const { return nu_; }
  const FlowOptions& options() const { return options_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& divergence() const { return divergence_; }

  /// nu (grad u, grad v) - (p, div v) = (f, v), (div u, q) = 0, mean(p) = 0.
  /// A positive `viscosity` replaces the solver's nu for this solve.
  FlowField solve_steady_stokes(const VectorField& force, double viscosity = 0.0) const;

  /// Crank-Nicolson step on the skew-symmetric form, iterated until the
  /// absolute velocity residual on free dofs is <= picard_tolerance.
  /// Throws NonConvergence after picard_max_iterations.
  FlowField cn_step(const FlowField& state, double dt, const VectorField& force,
                    SaddleCache* cache = nullptr, int* iterations = nullptr) const;

  /// One ensemble step: a single coefficient matrix (depending on the mean
  /// only) is factorized once and all members are solved against it.
  EnsembleState en_full_fe_step(const EnsembleState& state, double dt,
                                std::span<const VectorField> forces,
                                SaddleCache* cache = nullptr) const;

  /// Velocity block M/dt + N(mean) + nu K of the ensemble step.
  SparseMatrix en_full_fe_velocity_matrix(const Vector& mean, double dt) const;
  /// Member-j coefficient matrix assembled from member j's view of the
  /// ensemble (used to verify that it is independent of j).
  SparseMatrix en_full_fe_member_matrix(const EnsembleState& state, std::size_t j, double dt) const;
  /// M u^j/dt - N(u^j - mean) u^j + F^{j}(t + dt).
  Vector en_full_fe_rhs(const EnsembleState& state, std::size_t j, double dt,
                        const VectorField& force) const;

  /// Euclidean norm of B u.
  double divergence_norm(const Vector& u) const;

 private:
  std::vector<FlowField> solve_saddle(const SparseMatrix& velocity_block, std::vector<Vector> rhs,
                                      double boundary_time, SaddleCache* cache) const;
  std::vector<double> boundary_values(double t) const;

  const TaylorHoodSpace* space_;
  double nu_;
  FlowOptions options_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  SparseMatrix divergence_;
  Vector pressure_weights_;
  std::vector<int> constrained_;
};

enum class TimeScheme { CrankNicolson, EnFullFE };

/// Uniform time grid; construction validates that T and snapshot_every
/// are integer multiples of dt (ConfigError otherwise).
class TimeGrid {
 public:
  TimeGrid(double dt, double final_time, double snapshot_every);
  double dt() const { return dt_; }
  double final_time() const { return final_time_; }
  double snapshot_every() const { return snapshot_every_; }
  int steps() const { return steps_; }
  int snapshot_stride() const { return stride_; }
  int snapshot_count() const { return steps_ / stride_ + 1; }

 private:
  double dt_, final_time_, snapshot_every_;
  int steps_, stride_;
};

struct TransientResult {
  std::vector<double> snapshot_times;
  /// Ensemble states at the snapshot times, t = 0 included.
  std::vector<EnsembleState> snapshots;
  /// Per step; labels are member indices followed by "mean".
  TimeSeries energy;
  TimeSeries enstrophy;
  int steps = 0;
  int max_picard_iterations = 0;
};

/// Advances `initial` to T. With CrankNicolson the members are independent
/// runs; with EnFullFE they are coupled through the ensemble mean.
TransientResult run_transient(const FlowSolver& solver, const EnsembleState& initial,
                              TimeScheme scheme, const TimeGrid& grid,
                              std::span<const VectorField> forces);

/// Stacks snapshot states into the member-major snapshot matrix.
SnapshotSet make_snapshot_set(const TransientResult& result, std::span<const double> epsilons);

}  // namespace enpod
