#pragma once

#include <string>
#include <vector>

#include "enpod/linsolve.hpp"
#include "enpod/pod.hpp"
#include "enpod/taylor_hood.hpp"

namespace enpod {

/// Constant C_P of ||v|| <= C_P ||grad v|| on the constrained velocity
/// space, from inverse iteration on the (stiffness, mass) pencil. The
/// Rayleigh quotient is converged to `rel_tol`.
double estimate_poincare_constant(const TaylorHoodSpace& space, const SparseMatrix& mass,
                                  const SparseMatrix& stiffness, double rel_tol = 1e-12,
                                  int max_iterations = 500);

/// Everything an online step needs, independent of the ensemble.
class ReducedModel {
 public:
  ReducedModel() = default;
  int rank() const { return rank_; }
  double nu() const { return nu_; }
  double dt() const { return dt_; }
  /// K_R, the gradient Gram matrix of the basis.
  const DenseMatrix& grad_gram() const { return grad_gram_; }
  /// Reduced (curl, curl) Gram matrix for enstrophy.
  const DenseMatrix& curl_gram() const { return curl_gram_; }
  double s_norm() const { return s_norm_; }
  double poincare_constant() const { return poincare_; }

  /// T[i][k][l] = b*(phi_k, phi_l, phi_i).
  double tensor(int i, int k, int l) const { return tensor_[(static_cast<std::size_t>(i) * rank_ + k) * rank_ + l]; }
  /// N(a)[i][l] = sum_k a_k T[i][k][l].
  DenseMatrix convection(const Vector& a) const;
  /// (1/dt) I + nu K_R + N(mean).
  DenseMatrix step_matrix(const Vector& mean) const;

 private:
  friend ReducedModel build_reduced_model(const TaylorHoodSpace&, const PodBasis&, double, double);
  friend ReducedModel make_reduced_model(DenseMatrix, std::vector<double>, double, double, double);
  int rank_ = 0;
  double nu_ = 0.0;
  double dt_ = 0.0;
  DenseMatrix grad_gram_;
  DenseMatrix curl_gram_;
  std::vector<double> tensor_;
  double s_norm_ = 0.0;
  double poincare_ = 0.0;
};

ReducedModel build_reduced_model(const TaylorHoodSpace& space, const PodBasis& basis, double nu, double dt);

/// Model from explicit operators (K_R, tensor in [i][k][l] order); the curl
/// Gram is set to K_R and the Poincare constant to `poincare`.
ReducedModel make_reduced_model(DenseMatrix grad_gram, std::vector<double> tensor, double nu, double dt,
                                double poincare);

/// Reduced loads F^j(t)_i = (f^j(t), phi_i) and ||f^j(t)||^2 per member.
class ReducedForcing {
 public:
  ReducedForcing() = default;
  /// `time_dependent` = false caches the t = 0 values for all times.
  ReducedForcing(const TaylorHoodSpace& space, const PodBasis& basis, std::vector<VectorField> forces,
                 bool time_dependent = false);
  /// Constant loads, used for synthetic models.
  ReducedForcing(std::vector<Vector> loads, std::vector<double> norms_squared);

  std::size_t size() const { return loads_.size(); }
  Vector load(std::size_t j, double t) const;
  double norm_squared(std::size_t j, double t) const;

 private:
  const TaylorHoodSpace* space_ = nullptr;
  const PodBasis* basis_ = nullptr;
  std::vector<VectorField> forces_;
  bool time_dependent_ = false;
  std::vector<Vector> loads_;
  std::vector<double> norms_;
};

class ReducedEnsembleState {
 public:
  ReducedEnsembleState() = default;
  /// Throws InvariantError on an empty list, mismatched lengths or NaN/Inf.
  ReducedEnsembleState(std::vector<Vector> members, double time);

  const std::vector<Vector>& members() const { return members_; }
  const Vector& member(std::size_t j) const { return members_[j]; }
  const Vector& mean() const { return mean_; }
  std::size_t size() const { return members_.size(); }
  double time() const { return time_; }

 private:
  std::vector<Vector> members_;
  Vector mean_;
  double time_ = 0.0;
};

/// Mass projection of each full initial velocity onto the basis.
ReducedEnsembleState reduced_initial_condition(const PodBasis& basis, std::span<const Vector> initial,
                                               double time = 0.0);

struct StepTiming {
  /// Forming the step matrix and its LU factorization.
  double factor_seconds = 0.0;
  /// Member right-hand sides and backsolves.
  double solve_seconds = 0.0;
};

/// One En-POD step: the matrix depends on the mean only and is factorized
/// once; every member is backsolved against it.
ReducedEnsembleState en_pod_step(const ReducedModel& model, const ReducedEnsembleState& state,
                                 const ReducedForcing& forcing, int threads = 1, StepTiming* timing = nullptr);

/// Right-hand side (1/dt) c^j - N(c^j - mean) c^j + F^j(t + dt).
Vector en_pod_rhs(const ReducedModel& model, const ReducedEnsembleState& state, std::size_t j,
                  const ReducedForcing& forcing);

struct StabilityEntry {
  double lhs = 0.0;
  bool satisfied = true;
};

/// C_stab / nu * sqrt(|S_R|_2) * ||grad(u^j - <u>)||^2 * dt <= 1 per member.
std::vector<StabilityEntry> stability_check(const ReducedModel& model, const ReducedEnsembleState& state,
                                            double c_stab = 1.0);

struct EnergyBoundEntry {
  int step = 0;
  int member = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
};

/// Both sides of the discrete energy bound at every level n >= 1 of the
/// trajectory, with ||f||_{-1} replaced by C_P ||f|| (an upper bound, so
/// the right side only grows).
std::vector<EnergyBoundEntry> energy_bound_monitor(const ReducedModel& model,
                                                   std::span<const ReducedEnsembleState> trajectory,
                                                   const ReducedForcing& forcing);

enum class ViolationPolicy { Warn, Abort };

struct RomOptions {
  double c_stab = 1.0;
  ViolationPolicy on_violation = ViolationPolicy::Warn;
  int threads = 1;
};

struct StabilityRecord {
  int step = 0;
  int member = 0;
  double lhs = 0.0;
  bool satisfied = true;
};

struct RomTrajectory {
  /// states[n] at time n * dt; states[0] is the initial state.
  std::vector<ReducedEnsembleState> states;
  std::vector<StabilityRecord> stability;
  std::vector<StepTiming> timings;
  int violations = 0;
};

/// Advances `steps` steps, checking stability before each. With
/// ViolationPolicy::Abort the first violation throws StabilityViolation.
RomTrajectory run_rom(const ReducedModel& model, const ReducedEnsembleState& initial,
                      const ReducedForcing& forcing, int steps, const RomOptions& options = {});

/// Rows "step,time,member,c_1,...,c_R".
std::string trajectory_csv(const RomTrajectory& trajectory, double dt);
/// Rows "step,member,lhs,rhs,satisfied" with rhs = 1.
std::string stability_csv(std::span<const StabilityRecord> records);
std::string energy_bound_csv(std::span<const EnergyBoundEntry> entries);

}  // namespace enpod
