#include "enpod/rom.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "enpod/assembly.hpp"
#include "enpod/errors.hpp"
#include "enpod/parallel.hpp"

namespace enpod {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

DenseMatrix sparse_times_dense(const SparseMatrix& a, const DenseMatrix& x) {
  const Eigen::SparseMatrix<double> e = a.to_eigen();
  return DenseMatrix(e * x);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double estimate_poincare_constant(const TaylorHoodSpace& space, const SparseMatrix& mass,
                                  const SparseMatrix& stiffness, double rel_tol, int max_iterations) {
  const auto dofs = space.dirichlet_dofs();
  if (dofs.empty()) throw InvariantError("Poincare constant needs constrained dofs");
  const std::vector<double> zeros(dofs.size(), 0.0);
  const auto system = apply_dirichlet(stiffness, {}, dofs, zeros);
  const SparseFactorization lu(system.matrix);

  auto clamp = [&](Vector& x) {
    for (int d : dofs) x[d] = 0.0;
  };
  // smooth start: the first mode of a domain Laplacian has one sign
  Vector x = Vector::Ones(space.n_vel());
  clamp(x);
  double rq = x.dot(stiffness * x) / x.dot(mass * x);
  for (int it = 0; it < max_iterations; ++it) {
    Vector rhs = mass * x;
    clamp(rhs);
    x = lu.solve(rhs);
    clamp(x);
    x /= std::sqrt(x.dot(mass * x));
    const double next = x.dot(stiffness * x);
    if (std::abs(next - rq) <= rel_tol * next) {
      rq = next;
      break;
    }
    rq = next;
  }
  return 1.0 / std::sqrt(rq);
}

DenseMatrix ReducedModel::convection(const Vector& a) const {
  if (a.size() != rank_) throw DimensionError("coefficient length does not match the model rank");
  DenseMatrix n = DenseMatrix::Zero(rank_, rank_);
  for (int i = 0; i < rank_; ++i)
    for (int k = 0; k < rank_; ++k) {
      const double ak = a[k];
      if (ak == 0.0) continue;
      const double* row = &tensor_[(static_cast<std::size_t>(i) * rank_ + k) * rank_];
      for (int l = 0; l < rank_; ++l) n(i, l) += ak * row[l];
    }
  return n;
}

DenseMatrix ReducedModel::step_matrix(const Vector& mean) const {
  DenseMatrix a = convection(mean);
  a += nu_ * grad_gram_;
  a.diagonal().array() += 1.0 / dt_;
  return a;
}

ReducedModel build_reduced_model(const TaylorHoodSpace& space, const PodBasis& basis, double nu, double dt) {
  if (!(nu > 0.0) || !(dt > 0.0)) throw ConfigError("nu and dt must be positive");
  if (basis.n_vel() != space.n_vel()) throw DimensionError("basis does not belong to this space");
  const int r = basis.rank();
  ReducedModel m;
  m.rank_ = r;
  m.nu_ = nu;
  m.dt_ = dt;
  m.grad_gram_ = basis.grad_gram();
  const DenseMatrix& phi = basis.modes();
  m.curl_gram_ = phi.transpose() * sparse_times_dense(assemble_curl_gram(space), phi);
  m.curl_gram_ = 0.5 * (m.curl_gram_ + m.curl_gram_.transpose()).eval();
  m.tensor_.assign(static_cast<std::size_t>(r) * r * r, 0.0);
  for (int k = 0; k < r; ++k) {
    // slice[i][l] = phi_i^T N(phi_k) phi_l
    const DenseMatrix slice = phi.transpose() * sparse_times_dense(assemble_convection(space, phi.col(k)), phi);
    for (int i = 0; i < r; ++i)
      for (int l = 0; l < r; ++l) m.tensor_[(static_cast<std::size_t>(i) * r + k) * r + l] = slice(i, l);
  }
  m.s_norm_ = basis.s_norm();
  m.poincare_ = estimate_poincare_constant(space, basis.mass(), assemble_velocity_stiffness(space));
  return m;
}

ReducedModel make_reduced_model(DenseMatrix grad_gram, std::vector<double> tensor, double nu, double dt,
                                double poincare) {
  const auto r = grad_gram.rows();
  if (grad_gram.cols() != r || tensor.size() != static_cast<std::size_t>(r * r * r))
    throw DimensionError("reduced operator sizes are inconsistent");
  ReducedModel m;
  m.rank_ = static_cast<int>(r);
  m.nu_ = nu;
  m.dt_ = dt;
  m.curl_gram_ = grad_gram;
  m.grad_gram_ = std::move(grad_gram);
  m.tensor_ = std::move(tensor);
  DenseMatrix s = m.nu_ * m.grad_gram_;
  s.diagonal().array() += 1.0;
  m.s_norm_ = Eigen::SelfAdjointEigenSolver<DenseMatrix>(s, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  m.poincare_ = poincare;
  return m;
}

ReducedForcing::ReducedForcing(const TaylorHoodSpace& space, const PodBasis& basis, std::vector<VectorField> forces,
                               bool time_dependent)
    : space_(&space), basis_(&basis), forces_(std::move(forces)), time_dependent_(time_dependent) {
  for (const auto& f : forces_) {
    loads_.push_back(basis.modes().transpose() * project_force(space, f, 0.0));
    norms_.push_back(force_l2_norm_squared(space, f, 0.0));
  }
}

ReducedForcing::ReducedForcing(std::vector<Vector> loads, std::vector<double> norms_squared)
    : loads_(std::move(loads)), norms_(std::move(norms_squared)) {
  if (loads_.size() != norms_.size()) throw DimensionError("one norm per load expected");
}

Vector ReducedForcing::load(std::size_t j, double t) const {
  if (j >= loads_.size()) throw DimensionError("forcing member out of range");
  if (!time_dependent_) return loads_[j];
  return basis_->modes().transpose() * project_force(*space_, forces_[j], t);
}

double ReducedForcing::norm_squared(std::size_t j, double t) const {
  if (j >= norms_.size()) throw DimensionError("forcing member out of range");
  if (!time_dependent_) return norms_[j];
  return force_l2_norm_squared(*space_, forces_[j], t);
}

ReducedEnsembleState::ReducedEnsembleState(std::vector<Vector> members, double time)
    : members_(std::move(members)), time_(time) {
  if (members_.empty()) throw InvariantError("a reduced ensemble needs at least one member");
  const auto r = members_.front().size();
  mean_ = Vector::Zero(r);
  for (const auto& c : members_) {
    if (c.size() != r) throw InvariantError("reduced members differ in length");
    if (!c.allFinite()) throw InvariantError("reduced member contains NaN or Inf");
    mean_ += c;
  }
  mean_ /= static_cast<double>(members_.size());
}

ReducedEnsembleState reduced_initial_condition(const PodBasis& basis, std::span<const Vector> initial, double time) {
  std::vector<Vector> members;
  for (const auto& u : initial) members.push_back(basis.project(u));
  return ReducedEnsembleState(std::move(members), time);
}

Vector en_pod_rhs(const ReducedModel& model, const ReducedEnsembleState& state, std::size_t j,
                  const ReducedForcing& forcing) {
  const Vector& c = state.member(j);
  if (c.size() != model.rank()) throw DimensionError("member length does not match the model rank");
  Vector rhs = c / model.dt() + forcing.load(j, state.time() + model.dt());
  if (state.size() > 1) rhs -= model.convection(c - state.mean()) * c;
  return rhs;
}

ReducedEnsembleState en_pod_step(const ReducedModel& model, const ReducedEnsembleState& state,
                                 const ReducedForcing& forcing, int threads, StepTiming* timing) {
  if (forcing.size() != state.size()) throw DimensionError("one forcing per member expected");
  auto t0 = Clock::now();
  const DenseFactorization lu(model.step_matrix(state.mean()));
  const double factor = seconds_since(t0);

  t0 = Clock::now();
  std::vector<Vector> out(state.size());
  parallel_for(state.size(), threads, [&](std::size_t j) { out[j] = lu.solve(en_pod_rhs(model, state, j, forcing)); });
  if (timing != nullptr) {
    timing->factor_seconds = factor;
    timing->solve_seconds = seconds_since(t0);
  }
  return ReducedEnsembleState(std::move(out), state.time() + model.dt());
}

std::vector<StabilityEntry> stability_check(const ReducedModel& model, const ReducedEnsembleState& state,
                                            double c_stab) {
  std::vector<StabilityEntry> out;
  const double scale = c_stab / model.nu() * std::sqrt(model.s_norm()) * model.dt();
  for (const auto& c : state.members()) {
    const Vector d = c - state.mean();
    const double lhs = scale * d.dot(model.grad_gram() * d);
    out.push_back({lhs, lhs <= 1.0});
  }
  return out;
}

std::vector<EnergyBoundEntry> energy_bound_monitor(const ReducedModel& model,
                                                   std::span<const ReducedEnsembleState> trajectory,
                                                   const ReducedForcing& forcing) {
  std::vector<EnergyBoundEntry> out;
  if (trajectory.empty()) return out;
  const double nu = model.nu();
  const double dt = model.dt();
  const double cp2 = model.poincare_constant() * model.poincare_constant();
  const DenseMatrix& k = model.grad_gram();
  auto grad2 = [&](const Vector& c) { return c.dot(k * c); };

  const std::size_t members = trajectory.front().size();
  for (std::size_t j = 0; j < members; ++j) {
    const Vector& c0 = trajectory.front().member(j);
    double increments = 0.0, dissipation = 0.0, forcing_sum = 0.0;
    const double initial = 0.5 * c0.squaredNorm() + 0.25 * nu * dt * grad2(c0);
    for (std::size_t n = 1; n < trajectory.size(); ++n) {
      const Vector& c = trajectory[n].member(j);
      const Vector& prev = trajectory[n - 1].member(j);
      increments += 0.25 * (c - prev).squaredNorm();
      dissipation += 0.25 * nu * dt * grad2(c);
      forcing_sum += dt / (2.0 * nu) * cp2 * forcing.norm_squared(j, trajectory[n].time());
      EnergyBoundEntry e;
      e.step = static_cast<int>(n);
      e.member = static_cast<int>(j);
      e.lhs = 0.5 * c.squaredNorm() + increments + 0.25 * nu * dt * grad2(c) + dissipation;
      e.rhs = forcing_sum + initial;
      e.satisfied = e.lhs <= e.rhs;
      out.push_back(e);
    }
  }
  return out;
}

RomTrajectory run_rom(const ReducedModel& model, const ReducedEnsembleState& initial,
                      const ReducedForcing& forcing, int steps, const RomOptions& options) {
  if (steps < 0) throw ConfigError("step count must be nonnegative");
  RomTrajectory out;
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  out.states.push_back(initial);
  for (int n = 0; n < steps; ++n) {
    const auto& state = out.states.back();
    const auto check = stability_check(model, state, options.c_stab);
    for (std::size_t j = 0; j < check.size(); ++j) {
      out.stability.push_back({n, static_cast<int>(j), check[j].lhs, check[j].satisfied});
      if (!check[j].satisfied) {
        ++out.violations;
        if (options.on_violation == ViolationPolicy::Abort)
          throw StabilityViolation("time-step condition violated at step " + std::to_string(n) + " by member " +
                                   std::to_string(j) + " (lhs = " + fmt(check[j].lhs) + ")");
      }
    }
    StepTiming timing;
    out.states.push_back(en_pod_step(model, state, forcing, options.threads, &timing));
    out.timings.push_back(timing);
  }
  return out;
}

std::string trajectory_csv(const RomTrajectory& trajectory, double dt) {
  std::ostringstream out;
  const int r = trajectory.states.empty() ? 0 : static_cast<int>(trajectory.states.front().member(0).size());
  out << "step,time,member";
  for (int i = 1; i <= r; ++i) out << ",c_" << i;
  out << '\n';
  for (std::size_t n = 0; n < trajectory.states.size(); ++n) {
    const auto& s = trajectory.states[n];
    for (std::size_t j = 0; j < s.size(); ++j) {
      out << n << ',' << fmt(static_cast<double>(n) * dt) << ',' << j;
      for (int i = 0; i < r; ++i) out << ',' << fmt(s.member(j)[i]);
      out << '\n';
    }
  }
  return out.str();
}

std::string stability_csv(std::span<const StabilityRecord> records) {
  std::ostringstream out;
  out << "step,member,lhs,rhs,satisfied\n";
  for (const auto& r : records)
    out << r.step << ',' << r.member << ',' << fmt(r.lhs) << ",1," << (r.satisfied ? 1 : 0) << '\n';
  return out.str();
}

std::string energy_bound_csv(std::span<const EnergyBoundEntry> entries) {
  std::ostringstream out;
  out << "step,member,lhs,rhs,satisfied\n";
  for (const auto& e : entries)
    out << e.step << ',' << e.member << ',' << fmt(e.lhs) << ',' << fmt(e.rhs) << ',' << (e.satisfied ? 1 : 0)
        << '\n';
  return out.str();
}

}  // namespace enpod
