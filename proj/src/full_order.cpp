#include "enpod/full_order.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "enpod/assembly.hpp"
#include "enpod/errors.hpp"
#include "enpod/parallel.hpp"

namespace enpod {

EnsembleState::EnsembleState(std::vector<FlowField> members) : members_(std::move(members)) {
  if (members_.empty()) throw InvariantError("an ensemble needs at least one member");
  const auto n = members_.front().velocity.size();
  mean_ = Vector::Zero(n);
  for (const auto& m : members_) {
    if (m.velocity.size() != n) throw InvariantError("ensemble members differ in size");
    if (m.time != members_.front().time) throw InvariantError("ensemble members are at different times");
    mean_ += m.velocity;
  }
  mean_ /= static_cast<double>(members_.size());
}

VectorField rotational_body_force() {
  return [](double x, double y, double) -> std::array<double, 2> {
    const double s = 1.0 - x * x - y * y;
    return {-4.0 * y * s, 4.0 * x * s};
  };
}

VectorField perturbation_shape() {
  return [](double x, double y, double) -> std::array<double, 2> {
    constexpr double k = 3.0 * std::numbers::pi;
    return {std::sin(k * x) * std::sin(k * y), std::cos(k * x) * std::cos(k * y)};
  };
}

VectorField PerturbationSpec::force() const {
  return [eps = epsilon, base = base, shape = shape](double x, double y, double t) -> std::array<double, 2> {
    const auto f = base(x, y, t);
    const auto g = shape(x, y, t);
    return {f[0] + eps * g[0], f[1] + eps * g[1]};
  };
}

FlowSolver::FlowSolver(const TaylorHoodSpace& space, double nu, FlowOptions options)
    : space_(&space),
      nu_(nu),
      options_(std::move(options)),
      mass_(assemble_velocity_mass(space)),
      stiffness_(assemble_velocity_stiffness(space)),
      divergence_(assemble_divergence(space)),
      pressure_weights_(pressure_mean_weights(space)),
      constrained_(space.dirichlet_dofs()) {
  if (!(nu > 0.0)) throw ConfigError("viscosity must be positive");
}

std::vector<double> FlowSolver::boundary_values(double t) const {
  std::vector<double> values(constrained_.size(), 0.0);
  if (!options_.boundary) return values;
  const int nodes = space_->num_nodes();
  for (std::size_t k = 0; k < constrained_.size(); ++k) {
    const int dof = constrained_[k];
    const Point p = space_->node_coordinate(dof % nodes);
    values[k] = options_.boundary(p.x, p.y, t)[dof / nodes];
  }
  return values;
}

std::vector<FlowField> FlowSolver::solve_saddle(const SparseMatrix& velocity_block,
                                                std::vector<Vector> rhs, double boundary_time,
                                                SaddleCache* cache) const {
  const int nv = space_->n_vel();
  const int np = space_->n_pr();
  const SparseMatrix saddle = saddle_point_matrix(velocity_block, divergence_, pressure_weights_);
  std::vector<Vector> full(rhs.size(), Vector::Zero(nv + np + 1));
  for (std::size_t j = 0; j < rhs.size(); ++j) full[j].head(nv) = rhs[j];
  const auto values = boundary_values(boundary_time);
  DirichletSystem system = apply_dirichlet(saddle, std::move(full), constrained_, values);

  std::unique_ptr<SparseFactorization> local;
  SparseFactorization* lu = nullptr;
  if (cache != nullptr && cache->factorization) {
    cache->factorization->refactorize(system.matrix);
    lu = cache->factorization.get();
  } else {
    local = std::make_unique<SparseFactorization>(system.matrix);
    lu = local.get();
  }
  const auto solutions = solve_many(*lu, system.rhs, options_.threads);
  if (cache != nullptr && local) cache->factorization = std::move(local);

  std::vector<FlowField> out(solutions.size());
  for (std::size_t j = 0; j < solutions.size(); ++j) {
    out[j].velocity = solutions[j].head(nv);
    out[j].pressure = solutions[j].segment(nv, np);
  }
  return out;
}

FlowField FlowSolver::solve_steady_stokes(const VectorField& force, double viscosity) const {
  std::vector<Vector> rhs{project_force(*space_, force, 0.0)};
  auto out = solve_saddle(stiffness_.scaled(viscosity > 0.0 ? viscosity : nu_), std::move(rhs), 0.0, nullptr);
  out[0].time = 0.0;
  return out[0];
}

FlowField FlowSolver::cn_step(const FlowField& state, double dt, const VectorField& force,
                              SaddleCache* cache, int* iterations) const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const Vector& un = state.velocity;
  if (un.size() != space_->n_vel()) throw DimensionError("state velocity has wrong length");
  const double t_half = state.time + 0.5 * dt;
  const double t_next = state.time + dt;
  const Vector load = project_force(*space_, force, t_half);
  const Vector mass_un = mass_ * un;
  const Vector visc_un = stiffness_ * un;

  // Residual of the velocity equation on free dofs at (z, p).
  auto residual_of = [&](const Vector& z, const Vector& p) {
    const Vector mid = 0.5 * (un + z);
    Vector r = mass_ * (z - un) / dt + nu_ * (stiffness_ * mid) + divergence_.transpose_multiply(p) - load;
    if (options_.convection) r += convection_action(*space_, mid, mid);
    for (int d : constrained_) r[d] = 0.0;
    return r.norm();
  };
  // One linearized solve from iterate z.
  auto update = [&](const Vector& z, Linearization lin, SaddleCache* c) {
    const Vector w = 0.5 * (un + z);
    Vector rhs = mass_un / dt - 0.5 * nu_ * visc_un + load;
    SparseMatrix block;
    if (!options_.convection) {
      const ScaledMatrix terms[] = {{1.0 / dt, &mass_}, {0.5 * nu_, &stiffness_}};
      block = linear_combination(terms);
    } else if (lin == Linearization::Picard) {
      const SparseMatrix conv = assemble_convection(*space_, w);
      const ScaledMatrix terms[] = {{1.0 / dt, &mass_}, {0.5, &conv}, {0.5 * nu_, &stiffness_}};
      block = linear_combination(terms);
      rhs -= 0.5 * convection_action(*space_, w, un);
    } else {
      // J z_new = J z - R(z), R being the residual without the pressure term
      const SparseMatrix conv = assemble_convection(*space_, w);
      const SparseMatrix dconv = assemble_convection_derivative(*space_, w);
      const ScaledMatrix terms[] = {
          {1.0 / dt, &mass_}, {0.5, &conv}, {0.5, &dconv}, {0.5 * nu_, &stiffness_}};
      block = linear_combination(terms);
      rhs = block * z - (mass_ * (z - un) / dt + nu_ * (stiffness_ * w) +
                         convection_action(*space_, w, w) - load);
    }
    return std::move(solve_saddle(block, {rhs}, t_next, c)[0]);
  };

  // Newton updates are backtracked until the residual drops; if halving
  // four times does not help, a Picard update from the same iterate is taken.
  const bool newton = options_.convection && options_.linearization == Linearization::Newton;
  SaddleCache picard_cache;
  SaddleCache* primary_cache = cache;
  FlowField current{un, state.pressure.size() == space_->n_pr() ? state.pressure : Vector::Zero(space_->n_pr()),
                    state.time};
  double residual = residual_of(current.velocity, current.pressure);
  for (int k = 1; k <= options_.picard_max_iterations; ++k) {
    FlowField next;
    double r_next = INFINITY;
    if (newton) {
      const FlowField full = update(current.velocity, Linearization::Newton, primary_cache);
      next = full;
      r_next = residual_of(next.velocity, next.pressure);
      for (double alpha = 0.5; !(r_next < residual) && alpha >= 0.0625; alpha *= 0.5) {
        next.velocity = current.velocity + alpha * (full.velocity - current.velocity);
        next.pressure = current.pressure + alpha * (full.pressure - current.pressure);
        r_next = residual_of(next.velocity, next.pressure);
      }
      if (!(r_next < residual)) {
        next = update(current.velocity, Linearization::Picard, &picard_cache);
        r_next = residual_of(next.velocity, next.pressure);
      }
    } else {
      next = update(current.velocity, Linearization::Picard, primary_cache);
      r_next = residual_of(next.velocity, next.pressure);
    }
    current = std::move(next);
    residual = r_next;
    if (residual <= options_.picard_tolerance) {
      if (iterations != nullptr) *iterations = k;
      current.time = t_next;
      return current;
    }
  }
  throw NonConvergence("nonlinear iteration did not converge in " +
                           std::to_string(options_.picard_max_iterations) + " iterations",
                       residual);
}

SparseMatrix FlowSolver::en_full_fe_velocity_matrix(const Vector& mean, double dt) const {
  if (!options_.convection) {
    const ScaledMatrix terms[] = {{1.0 / dt, &mass_}, {nu_, &stiffness_}};
    return linear_combination(terms);
  }
  const SparseMatrix conv = assemble_convection(*space_, mean);
  const ScaledMatrix terms[] = {{1.0 / dt, &mass_}, {1.0, &conv}, {nu_, &stiffness_}};
  return linear_combination(terms);
}

SparseMatrix FlowSolver::en_full_fe_member_matrix(const EnsembleState& state, std::size_t j,
                                                  double dt) const {
  if (j >= state.size()) throw DimensionError("member index out of range");
  Vector mean = Vector::Zero(space_->n_vel());
  for (const auto& m : state.members()) mean += m.velocity;
  mean /= static_cast<double>(state.size());
  return en_full_fe_velocity_matrix(mean, dt);
}

Vector FlowSolver::en_full_fe_rhs(const EnsembleState& state, std::size_t j, double dt,
                                  const VectorField& force) const {
  const Vector& u = state.member(j).velocity;
  Vector rhs = mass_ * u / dt + project_force(*space_, force, state.time() + dt);
  if (options_.convection) rhs -= convection_action(*space_, u - state.mean(), u);
  return rhs;
}

EnsembleState FlowSolver::en_full_fe_step(const EnsembleState& state, double dt,
                                          std::span<const VectorField> forces,
                                          SaddleCache* cache) const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (state.size() == 0) throw DimensionError("empty ensemble");
  if (forces.size() != state.size()) throw DimensionError("one force per ensemble member expected");
  for (const auto& m : state.members())
    if (m.velocity.size() != space_->n_vel()) throw DimensionError("member velocity has wrong length");

  const SparseMatrix block = en_full_fe_velocity_matrix(state.mean(), dt);
  std::vector<Vector> rhs(state.size());
  parallel_for(state.size(), options_.threads,
               [&](std::size_t j) { rhs[j] = en_full_fe_rhs(state, j, dt, forces[j]); });
  auto members = solve_saddle(block, std::move(rhs), state.time() + dt, cache);
  for (auto& m : members) m.time = state.time() + dt;
  return EnsembleState(std::move(members));
}

double FlowSolver::divergence_norm(const Vector& u) const { return (divergence_ * u).norm(); }

TimeGrid::TimeGrid(double dt, double final_time, double snapshot_every)
    : dt_(dt), final_time_(final_time), snapshot_every_(snapshot_every) {
  std::string problems;
  if (!(dt > 0.0)) problems += " dt must be positive;";
  if (!(final_time > 0.0)) problems += " T must be positive;";
  if (!(snapshot_every > 0.0)) problems += " snapshot_every must be positive;";
  if (!problems.empty()) throw ConfigError("time grid:" + problems);
  auto multiple = [](double a, double b, int& n) {
    const double r = a / b;
    n = static_cast<int>(std::llround(r));
    return n >= 1 && std::abs(r - n) <= 1e-9 * std::max(1.0, r);
  };
  if (!multiple(final_time, dt, steps_))
    throw ConfigError("time grid: T=" + std::to_string(final_time) + " is not a multiple of dt=" +
                      std::to_string(dt));
  if (!multiple(snapshot_every, dt, stride_))
    throw ConfigError("time grid: snapshot_every=" + std::to_string(snapshot_every) +
                      " is not a multiple of dt=" + std::to_string(dt));
  if (steps_ % stride_ != 0)
    throw ConfigError("time grid: T is not a multiple of snapshot_every");
}

namespace {

std::vector<std::string> member_labels(std::size_t members) {
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < members; ++j) labels.push_back(std::to_string(j));
  labels.push_back("mean");
  return labels;
}

void record_diagnostics(TransientResult& out, const SparseMatrix& mass, const SparseMatrix& curl,
                        double nu, double time, std::span<const Vector> velocities) {
  std::vector<double> e, z;
  Vector mean = Vector::Zero(velocities.front().size());
  for (const auto& v : velocities) {
    e.push_back(energy(mass, v));
    z.push_back(enstrophy(curl, v, nu));
    mean += v;
  }
  mean /= static_cast<double>(velocities.size());
  e.push_back(energy(mass, mean));
  z.push_back(enstrophy(curl, mean, nu));
  out.energy.append(time, e);
  out.enstrophy.append(time, z);
}

}  // namespace

TransientResult run_transient(const FlowSolver& solver, const EnsembleState& initial,
                              TimeScheme scheme, const TimeGrid& grid,
                              std::span<const VectorField> forces) {
  const std::size_t members = initial.size();
  if (forces.size() != members) throw DimensionError("one force per ensemble member expected");
  const SparseMatrix curl = assemble_curl_gram(solver.space());
  const double dt = grid.dt();

  TransientResult out;
  out.energy = TimeSeries(member_labels(members));
  out.enstrophy = TimeSeries(member_labels(members));
  out.steps = grid.steps();

  // trajectory[n][j] holds member velocities at every step for diagnostics
  std::vector<std::vector<FlowField>> at_snapshot(grid.snapshot_count(), std::vector<FlowField>(members));
  std::vector<std::vector<Vector>> history(grid.steps() + 1, std::vector<Vector>(members));

  if (scheme == TimeScheme::CrankNicolson) {
    std::vector<int> max_iters(members, 0);
    parallel_for(members, solver.options().threads, [&](std::size_t j) {
      SaddleCache cache;
      FlowField state = initial.member(j);
      at_snapshot[0][j] = state;
      history[0][j] = state.velocity;
      for (int n = 1; n <= grid.steps(); ++n) {
        int iters = 0;
        state = solver.cn_step(state, dt, forces[j], &cache, &iters);
        state.time = n * dt;
        max_iters[j] = std::max(max_iters[j], iters);
        history[n][j] = state.velocity;
        if (n % grid.snapshot_stride() == 0) at_snapshot[n / grid.snapshot_stride()][j] = state;
      }
    });
    for (int it : max_iters) out.max_picard_iterations = std::max(out.max_picard_iterations, it);
  } else {
    SaddleCache cache;
    EnsembleState state = initial;
    for (std::size_t j = 0; j < members; ++j) {
      at_snapshot[0][j] = state.member(j);
      history[0][j] = state.member(j).velocity;
    }
    for (int n = 1; n <= grid.steps(); ++n) {
      state = solver.en_full_fe_step(state, dt, forces, &cache);
      for (std::size_t j = 0; j < members; ++j) {
        history[n][j] = state.member(j).velocity;
        if (n % grid.snapshot_stride() == 0) {
          at_snapshot[n / grid.snapshot_stride()][j] = state.member(j);
          at_snapshot[n / grid.snapshot_stride()][j].time = n * dt;
        }
      }
    }
  }

  for (int n = 0; n <= grid.steps(); ++n)
    record_diagnostics(out, solver.mass(), curl, solver.nu(), n * dt, history[n]);
  for (int m = 0; m < grid.snapshot_count(); ++m) {
    const double t = m * grid.snapshot_every();
    for (auto& f : at_snapshot[m]) f.time = t;
    out.snapshot_times.push_back(t);
    out.snapshots.emplace_back(std::move(at_snapshot[m]));
  }
  return out;
}

SnapshotSet make_snapshot_set(const TransientResult& result, std::span<const double> epsilons) {
  if (result.snapshots.empty()) throw DimensionError("no snapshots recorded");
  const std::size_t members = result.snapshots.front().size();
  if (epsilons.size() != members) throw DimensionError("one epsilon per member expected");
  const std::size_t levels = result.snapshots.size();
  SnapshotSet set;
  set.matrix.resize(result.snapshots.front().member(0).velocity.size(),
                    static_cast<Eigen::Index>(members * levels));
  for (std::size_t j = 0; j < members; ++j)
    for (std::size_t m = 0; m < levels; ++m) {
      const auto col = static_cast<Eigen::Index>(j * levels + m);
      set.matrix.col(col) = result.snapshots[m].member(j).velocity;
      set.columns.push_back({static_cast<int>(j), static_cast<int>(m), result.snapshot_times[m], epsilons[j]});
    }
  return set;
}

void validate_snapshots(const SnapshotSet& set, const SparseMatrix& divergence, double tol) {
  if (set.columns.size() != static_cast<std::size_t>(set.matrix.cols()))
    throw InvariantError("snapshot metadata does not match the column count");
  if (set.columns.empty()) throw InvariantError("empty snapshot set");
  int members = 0, levels = 0;
  for (const auto& c : set.columns) {
    members = std::max(members, c.member + 1);
    levels = std::max(levels, c.index + 1);
  }
  if (members * levels != set.count())
    throw InvariantError("snapshot count is not J_S * (N_S + 1)");
  for (int c = 0; c < set.count(); ++c) {
    const auto& info = set.columns[c];
    if (info.member * levels + info.index != c) throw InvariantError("snapshot columns are not member-major");
    const double div = (divergence * Vector(set.matrix.col(c))).norm();
    if (div > tol)
      throw InvariantError("snapshot column " + std::to_string(c) + " is not discretely divergence free (" +
                           std::to_string(div) + ")");
  }
}

}  // namespace enpod
