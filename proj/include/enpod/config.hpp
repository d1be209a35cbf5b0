#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "enpod/mesh.hpp"
#include "enpod/rom.hpp"

namespace enpod {

enum class DomainKind { OffsetAnnulus, UnitSquare };

/// One pipeline run. Defaults reproduce the offset-circles setup at desk
/// resolution; physics.nu, the time block, both ensembles and pod.R are
/// required in a config file.
struct RunConfig {
  DomainKind domain = DomainKind::OffsetAnnulus;
  AnnulusGeometry annulus;
  int n_theta = 48;
  int n_r = 12;
  int square_n = 9;

  double nu = 1.0 / 200.0;
  double dt = 0.025;
  double final_time = 5.0;
  double snapshot_every = 0.1;

  std::vector<double> snapshot_epsilons{1e-3, -1e-3};
  std::vector<double> online_epsilons{1e-3, -1e-3};
  /// false: the perturbation only shapes the initial condition and all
  /// members are driven by the unperturbed force.
  bool perturb_forcing = false;
  /// Viscosity of the steady Stokes solve that generates the initial
  /// conditions; 0 uses physics.nu.
  double stokes_nu = 0.0;

  std::vector<int> ranks{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};

  double c_stab = 1.0;
  ViolationPolicy on_violation = ViolationPolicy::Warn;

  unsigned seed = 7;
  int threads = 1;
  std::string output = "out";
};

/// Throws ConfigError naming every missing or invalid field.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError listing all violated invariants.
void validate_config(const RunConfig& config);
std::string serialize_config(const RunConfig& config);
/// Hash of the canonical serialization.
std::string config_hash(const RunConfig& config);

Mesh build_mesh(const RunConfig& config);
/// Dirichlet markers: both circles for the annulus, every boundary edge for
/// the unit square.
std::vector<BoundaryMarker> dirichlet_markers(const RunConfig& config);

}  // namespace enpod
