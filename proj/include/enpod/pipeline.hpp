#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "enpod/config.hpp"
#include "enpod/diagnostics.hpp"
#include "enpod/full_order.hpp"
#include "enpod/pod.hpp"
#include "enpod/rom.hpp"

namespace enpod {

/// Mesh, space and full-order solver for one config. Members are heap
/// allocated so that the solver's reference to the space stays valid.
struct FullOrderSetup {
  std::unique_ptr<TaylorHoodSpace> space;
  std::unique_ptr<FlowSolver> solver;
  std::string mesh_hash;

  explicit FullOrderSetup(const RunConfig& config);
  FullOrderSetup(const RunConfig& config, Mesh mesh);
};

/// Force driving member j during time stepping.
std::vector<VectorField> stepping_forces(const RunConfig& config, std::span<const double> epsilons);
/// Steady Stokes solutions for f + eps * shape, one per epsilon, at t = 0.
/// `stokes_nu` > 0 replaces the solver's viscosity in these solves.
EnsembleState stokes_initial_ensemble(const FlowSolver& solver, std::span<const double> epsilons,
                                      double stokes_nu = 0.0);

/// Crank-Nicolson runs of the snapshot ensemble.
TransientResult run_snapshot_ensemble(const FullOrderSetup& setup, const RunConfig& config);
/// En-full-FE run of an ensemble from its Stokes initial conditions.
TransientResult run_en_full_fe(const FullOrderSetup& setup, const RunConfig& config,
                               std::span<const double> epsilons);

/// Ensemble-average velocity at each stored snapshot time.
std::vector<Vector> ensemble_average(const TransientResult& result);

struct OnlineResult {
  int rank = 0;
  RomTrajectory trajectory;
  std::vector<EnergyBoundEntry> energy_bound;
  int energy_bound_violations = 0;
  /// Lifted ensemble average at the snapshot times.
  std::vector<Vector> average;
  std::vector<double> average_times;
  TimeSeries energy;
  TimeSeries enstrophy;
  double poincare_constant = 0.0;
  double factor_seconds = 0.0;
  double solve_seconds = 0.0;
};

/// En-POD run of the online ensemble in the first R modes of `basis`.
/// Throws StabilityViolation when configured to abort.
OnlineResult run_online(const FullOrderSetup& setup, const RunConfig& config, const PodBasis& basis,
                        std::span<const double> epsilons);

/// 0 = success, 1 = I/O or artifact problem, 2 = configuration error,
/// 3 = numerical failure, 4 = stability abort.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace enpod
