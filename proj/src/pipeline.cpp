#include "enpod/pipeline.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "enpod/assembly.hpp"
#include "enpod/atomic_file.hpp"
#include "enpod/errors.hpp"
#include "enpod/io.hpp"

namespace enpod {

using nlohmann::json;
namespace fs = std::filesystem;

FullOrderSetup::FullOrderSetup(const RunConfig& config) : FullOrderSetup(config, build_mesh(config)) {}

FullOrderSetup::FullOrderSetup(const RunConfig& config, Mesh mesh) {
  mesh_hash = hex_hash(mesh.hash());
  space = std::make_unique<TaylorHoodSpace>(std::move(mesh), dirichlet_markers(config));
  FlowOptions options;
  options.threads = config.threads;
  solver = std::make_unique<FlowSolver>(*space, config.nu, options);
}

std::vector<VectorField> stepping_forces(const RunConfig& config, std::span<const double> epsilons) {
  std::vector<VectorField> out;
  for (double eps : epsilons)
    out.push_back(config.perturb_forcing ? PerturbationSpec{eps}.force() : rotational_body_force());
  return out;
}

EnsembleState stokes_initial_ensemble(const FlowSolver& solver, std::span<const double> epsilons,
                                      double stokes_nu) {
  std::vector<FlowField> members;
  for (double eps : epsilons) members.push_back(solver.solve_steady_stokes(PerturbationSpec{eps}.force(), stokes_nu));
  return EnsembleState(std::move(members));
}

TransientResult run_snapshot_ensemble(const FullOrderSetup& setup, const RunConfig& config) {
  const TimeGrid grid(config.dt, config.final_time, config.snapshot_every);
  const auto forces = stepping_forces(config, config.snapshot_epsilons);
  return run_transient(*setup.solver, stokes_initial_ensemble(*setup.solver, config.snapshot_epsilons, config.stokes_nu),
                       TimeScheme::CrankNicolson, grid, forces);
}

TransientResult run_en_full_fe(const FullOrderSetup& setup, const RunConfig& config,
                               std::span<const double> epsilons) {
  const TimeGrid grid(config.dt, config.final_time, config.snapshot_every);
  const auto forces = stepping_forces(config, epsilons);
  return run_transient(*setup.solver, stokes_initial_ensemble(*setup.solver, epsilons, config.stokes_nu), TimeScheme::EnFullFE, grid,
                       forces);
}

std::vector<Vector> ensemble_average(const TransientResult& result) {
  std::vector<Vector> out;
  for (const auto& s : result.snapshots) out.push_back(s.mean());
  return out;
}

namespace {

std::vector<std::string> series_labels(std::size_t members) {
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < members; ++j) labels.push_back(std::to_string(j));
  labels.push_back("mean");
  return labels;
}

}  // namespace

OnlineResult run_online(const FullOrderSetup& setup, const RunConfig& config, const PodBasis& basis,
                        std::span<const double> epsilons) {
  const TimeGrid grid(config.dt, config.final_time, config.snapshot_every);
  const auto initial_full = stokes_initial_ensemble(*setup.solver, epsilons, config.stokes_nu);
  std::vector<Vector> u0;
  for (const auto& m : initial_full.members()) u0.push_back(m.velocity);

  OnlineResult out;
  out.rank = basis.rank();
  const ReducedModel model = build_reduced_model(*setup.space, basis, config.nu, config.dt);
  const ReducedForcing forcing(*setup.space, basis, stepping_forces(config, epsilons));
  RomOptions options;
  options.c_stab = config.c_stab;
  options.on_violation = config.on_violation;
  options.threads = config.threads;
  out.trajectory = run_rom(model, reduced_initial_condition(basis, u0), forcing, grid.steps(), options);
  out.energy_bound = energy_bound_monitor(model, out.trajectory.states, forcing);
  out.energy_bound_violations =
      static_cast<int>(std::count_if(out.energy_bound.begin(), out.energy_bound.end(),
                                     [](const EnergyBoundEntry& e) { return !e.satisfied; }));
  out.poincare_constant = model.poincare_constant();
  for (const auto& t : out.trajectory.timings) {
    out.factor_seconds += t.factor_seconds;
    out.solve_seconds += t.solve_seconds;
  }

  const std::size_t members = epsilons.size();
  out.energy = TimeSeries(series_labels(members));
  out.enstrophy = TimeSeries(series_labels(members));
  for (std::size_t n = 0; n < out.trajectory.states.size(); ++n) {
    const auto& s = out.trajectory.states[n];
    std::vector<double> e, z;
    for (std::size_t j = 0; j < members; ++j) {
      e.push_back(reduced_energy(s.member(j)));
      z.push_back(reduced_enstrophy(model.curl_gram(), s.member(j), config.nu));
    }
    e.push_back(reduced_energy(s.mean()));
    z.push_back(reduced_enstrophy(model.curl_gram(), s.mean(), config.nu));
    out.energy.append(static_cast<double>(n) * config.dt, e);
    out.enstrophy.append(static_cast<double>(n) * config.dt, z);
    if (static_cast<int>(n) % grid.snapshot_stride() == 0) {
      out.average.push_back(basis.lift(s.mean()));
      out.average_times.push_back(static_cast<double>(n / grid.snapshot_stride()) * config.snapshot_every);
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

/// Refuse to overwrite outputs unless forced.
class ArtifactError : public IoError {
 public:
  using IoError::IoError;
};

struct Context {
  RunConfig config;
  fs::path out;
  bool force = false;
  std::ostream* log = nullptr;
  std::ostream* stdout_ = nullptr;

  fs::path path(const std::string& name) const { return out / name; }

  void claim(std::initializer_list<std::string> names) const {
    for (const auto& n : names) claim(n);
  }
  void claim(const std::string& name) const {
    if (!force && fs::exists(path(name)))
      throw ArtifactError(path(name).string() + " exists; pass --force to overwrite");
  }
  void require(const std::string& name) const {
    if (!fs::exists(path(name)))
      throw ArtifactError("missing input artifact " + path(name).string() + " (run the upstream stage first)");
  }
  json read_json(const std::string& name) const {
    require(name);
    try {
      return json::parse(read_file(path(name)));
    } catch (const json::exception& e) {
      throw ParseError(name + ": " + e.what(), 1);
    }
  }
  void write_json(const std::string& name, const json& j) const { write_file_atomic(path(name), j.dump(2) + "\n"); }
  void write_text(const std::string& name, const std::string& text) const { write_file_atomic(path(name), text); }
};

std::string file_hash(const fs::path& p) { return content_hash(read_file(p)); }

std::string rank_prefix(int r) { return "rom_R" + std::to_string(r) + "_"; }

/// Loads mesh.txt and checks it against mesh.json.
FullOrderSetup load_setup(const Context& ctx) {
  ctx.require("mesh.txt");
  const json meta = ctx.read_json("mesh.json");
  Mesh mesh = load_mesh(ctx.path("mesh.txt"));
  FullOrderSetup setup(ctx.config, std::move(mesh));
  if (meta.value("mesh_hash", "") != setup.mesh_hash)
    throw ArtifactError("mesh.txt does not match the hash recorded in mesh.json");
  return setup;
}

void stage_mesh(const Context& ctx) {
  ctx.claim({"mesh.txt", "mesh.json"});
  const Mesh mesh = build_mesh(ctx.config);
  fs::create_directories(ctx.out);
  save_mesh(mesh, ctx.path("mesh.txt"));
  const TaylorHoodSpace space(mesh, dirichlet_markers(ctx.config));
  ctx.write_json("mesh.json", {{"mesh_hash", hex_hash(mesh.hash())},
                               {"config_hash", config_hash(ctx.config)},
                               {"vertices", mesh.num_vertices()},
                               {"triangles", mesh.num_triangles()},
                               {"edges", mesh.num_edges()},
                               {"h", mesh.h()},
                               {"n_vel", space.n_vel()},
                               {"n_pr", space.n_pr()}});
  *ctx.log << "mesh: " << mesh.num_vertices() << " vertices, " << mesh.num_triangles() << " triangles, "
           << space.n_vel() + space.n_pr() << " dofs\n";
}

void stage_snapshots(const Context& ctx) {
  ctx.claim({"snapshots.epm", "snapshots.json", "snapshot_energy.csv", "snapshot_enstrophy.csv"});
  const auto setup = load_setup(ctx);
  const auto t0 = Clock::now();
  const TransientResult run = run_snapshot_ensemble(setup, ctx.config);
  const SnapshotSet set = make_snapshot_set(run, ctx.config.snapshot_epsilons);
  validate_snapshots(set, setup.solver->divergence());
  double max_div = 0.0;
  for (int c = 0; c < set.count(); ++c)
    max_div = std::max(max_div, setup.solver->divergence_norm(set.matrix.col(c)));

  write_matrix_file(ctx.path("snapshots.epm"), set.matrix);
  ctx.write_text("snapshot_energy.csv", run.energy.to_csv());
  ctx.write_text("snapshot_enstrophy.csv", run.enstrophy.to_csv());
  json columns = json::array();
  for (const auto& c : set.columns) columns.push_back({c.member, c.index, c.time, c.epsilon});
  ctx.write_json("snapshots.json", {{"mesh_hash", setup.mesh_hash},
                                    {"config_hash", config_hash(ctx.config)},
                                    {"file_hash", file_hash(ctx.path("snapshots.epm"))},
                                    {"scheme", "crank_nicolson"},
                                    {"dt", ctx.config.dt},
                                    {"T", ctx.config.final_time},
                                    {"snapshot_every", ctx.config.snapshot_every},
                                    {"columns_layout", "member, index, time, epsilon"},
                                    {"columns", columns},
                                    {"max_divergence", max_div},
                                    {"max_nonlinear_iterations", run.max_picard_iterations},
                                    {"seconds", seconds_since(t0)}});
  *ctx.log << "snapshots: " << set.count() << " columns, max ||B u|| = " << max_div << "\n";
}

/// Snapshot set read back from disk, with its metadata verified.
SnapshotSet load_snapshots(const Context& ctx, const FullOrderSetup& setup, std::string* hash) {
  const json meta = ctx.read_json("snapshots.json");
  ctx.require("snapshots.epm");
  const std::string h = file_hash(ctx.path("snapshots.epm"));
  if (meta.value("file_hash", "") != h) throw ArtifactError("snapshots.epm does not match snapshots.json");
  if (meta.value("mesh_hash", "") != setup.mesh_hash)
    throw ArtifactError("snapshots were computed on a different mesh");
  SnapshotSet set;
  set.matrix = read_matrix_file(ctx.path("snapshots.epm"));
  for (const auto& c : meta.at("columns"))
    set.columns.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<double>(), c.at(3).get<double>()});
  validate_snapshots(set, setup.solver->divergence());
  if (hash != nullptr) *hash = h;
  return set;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void stage_pod(const Context& ctx) {
  ctx.claim({"basis.epm", "basis.json", "eigenvalues.csv", "singular_values.csv", "pod_identities.csv"});
  const auto setup = load_setup(ctx);
  std::string snapshot_hash;
  SnapshotSet set = load_snapshots(ctx, setup, &snapshot_hash);
  const PodDecomposition pod(std::move(set), setup.solver->mass(), setup.solver->stiffness(), ctx.config.nu);
  const int r_max = *std::max_element(ctx.config.ranks.begin(), ctx.config.ranks.end());
  const PodBasis basis = pod.basis(r_max);

  const Vector& lambda = pod.spectrum();
  const Vector grad = pod.gradient_energies();
  std::ostringstream eig;
  eig << "i,lambda,grad_norm_squared\n";
  for (int i = 0; i < pod.numerical_rank(); ++i)
    eig << i + 1 << ',' << fmt(lambda[i]) << ',' << fmt(grad[i] / lambda[i]) << '\n';

  std::ostringstream ids;
  ids << "R,l2_lhs,l2_rhs,l2_gap,h1_lhs,h1_rhs,h1_gap\n";
  for (int r : ctx.config.ranks) {
    const auto l2 = projection_identity_l2(pod, r);
    const auto h1 = projection_identity_h1(pod, r);
    ids << r << ',' << fmt(l2.lhs) << ',' << fmt(l2.rhs) << ',' << fmt(l2.gap) << ',' << fmt(h1.lhs) << ','
        << fmt(h1.rhs) << ',' << fmt(h1.gap) << '\n';
  }

  const DenseMatrix ortho = basis.mass_gram() - DenseMatrix::Identity(r_max, r_max);
  double max_div = 0.0;
  for (int i = 0; i < r_max; ++i) max_div = std::max(max_div, setup.solver->divergence_norm(basis.modes().col(i)));

  write_matrix_file(ctx.path("basis.epm"), basis.modes());
  ctx.write_text("eigenvalues.csv", eig.str());
  ctx.write_text("singular_values.csv", singular_values_csv(lambda));
  ctx.write_text("pod_identities.csv", ids.str());
  ctx.write_json("basis.json", {{"R", r_max},
                                {"nu", ctx.config.nu},
                                {"mesh_hash", setup.mesh_hash},
                                {"snapshot_hash", snapshot_hash},
                                {"file_hash", file_hash(ctx.path("basis.epm"))},
                                {"eigenvalues", std::vector<double>(lambda.data(), lambda.data() + lambda.size())},
                                {"numerical_rank", pod.numerical_rank()},
                                {"orthonormality_error", ortho.cwiseAbs().maxCoeff()},
                                {"max_divergence", max_div},
                                {"s_norm", basis.s_norm()},
                                {"m_inv_norm", basis.m_inv_norm()}});
  *ctx.log << "pod: R = " << r_max << ", numerical rank " << pod.numerical_rank() << "\n";
}

PodBasis load_basis(const Context& ctx, const FullOrderSetup& setup, std::string* hash) {
  const json meta = ctx.read_json("basis.json");
  ctx.require("basis.epm");
  if (meta.value("mesh_hash", "") != setup.mesh_hash)
    throw ArtifactError("basis.epm was built on a different mesh (hash " + meta.value("mesh_hash", "?") +
                        ", current " + setup.mesh_hash + ")");
  const std::string h = file_hash(ctx.path("basis.epm"));
  if (meta.value("file_hash", "") != h) throw ArtifactError("basis.epm does not match basis.json");
  DenseMatrix modes = read_matrix_file(ctx.path("basis.epm"));
  const auto spectrum_list = meta.at("eigenvalues").get<std::vector<double>>();
  const Vector spectrum = Eigen::Map<const Vector>(spectrum_list.data(), static_cast<Eigen::Index>(spectrum_list.size()));
  if (modes.cols() > spectrum.size()) throw ArtifactError("basis.json lists fewer eigenvalues than modes");
  if (hash != nullptr) *hash = h;
  return PodBasis::from_modes(std::move(modes), spectrum.head(modes.cols()), spectrum, setup.solver->mass(),
                              setup.solver->stiffness(), meta.at("nu").get<double>());
}

DenseMatrix stack(std::span<const Vector> cols) {
  DenseMatrix m(cols.empty() ? 0 : cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = cols[i];
  return m;
}

std::vector<Vector> unstack(const DenseMatrix& m) {
  std::vector<Vector> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m.col(c));
  return out;
}

std::vector<double> sample_times(const RunConfig& c) {
  const TimeGrid grid(c.dt, c.final_time, c.snapshot_every);
  std::vector<double> t;
  for (int m = 0; m < grid.snapshot_count(); ++m) t.push_back(m * c.snapshot_every);
  return t;
}

void stage_rom(const Context& ctx) {
  for (int r : ctx.config.ranks)
    for (const char* suffix :
         {"trajectory.csv", "stability.csv", "energy_bound.csv", "energy.csv", "enstrophy.csv", "average.epm"})
      ctx.claim(rank_prefix(r) + suffix);
  ctx.claim("rom.json");
  const auto setup = load_setup(ctx);
  std::string basis_hash;
  const PodBasis full = load_basis(ctx, setup, &basis_hash);

  json per_rank = json::array();
  int total_violations = 0;
  for (int r : ctx.config.ranks) {
    if (r > full.rank())
      throw RankError("rank " + std::to_string(r) + " exceeds the stored basis rank " + std::to_string(full.rank()));
    const OnlineResult res = run_online(setup, ctx.config, full.truncated(r), ctx.config.online_epsilons);
    const std::string p = rank_prefix(r);
    ctx.write_text(p + "trajectory.csv", trajectory_csv(res.trajectory, ctx.config.dt));
    ctx.write_text(p + "stability.csv", stability_csv(res.trajectory.stability));
    ctx.write_text(p + "energy_bound.csv", energy_bound_csv(res.energy_bound));
    ctx.write_text(p + "energy.csv", res.energy.to_csv());
    ctx.write_text(p + "enstrophy.csv", res.enstrophy.to_csv());
    write_matrix_file(ctx.path(p + "average.epm"), stack(res.average));
    total_violations += res.trajectory.violations;
    if (res.trajectory.violations > 0)
      *ctx.log << "warning: R = " << r << ": time-step condition violated " << res.trajectory.violations
               << " times\n";
    per_rank.push_back({{"R", r},
                        {"stability_violations", res.trajectory.violations},
                        {"energy_bound_violations", res.energy_bound_violations},
                        {"poincare_constant", res.poincare_constant},
                        {"factor_seconds", res.factor_seconds},
                        {"solve_seconds", res.solve_seconds},
                        {"average_hash", file_hash(ctx.path(p + "average.epm"))}});
  }
  ctx.write_json("rom.json", {{"mesh_hash", setup.mesh_hash},
                              {"basis_hash", basis_hash},
                              {"config_hash", config_hash(ctx.config)},
                              {"online_epsilons", ctx.config.online_epsilons},
                              {"C_stab", ctx.config.c_stab},
                              {"ranks", per_rank},
                              {"stability_violations", total_violations}});
  *ctx.log << "rom: " << ctx.config.ranks.size() << " ranks, " << total_violations << " stability violations\n";
}

void stage_compare(const Context& ctx, const std::string& a_path, const std::string& b_path) {
  if (!a_path.empty() || !b_path.empty()) {
    if (a_path.empty() || b_path.empty()) throw ConfigError("compare needs both --a and --b");
    const auto setup = load_setup(ctx);
    const auto a = unstack(read_matrix_file(a_path));
    const auto b = unstack(read_matrix_file(b_path));
    const auto times = sample_times(ctx.config);
    const double err = relative_l2_error(setup.solver->mass(), times, a, b);
    *ctx.stdout_ << "relative_error " << fmt(err) << "\n";
    return;
  }
  ctx.claim({"reference_average.epm", "reference_energy.csv", "reference_enstrophy.csv", "error_vs_R.csv",
             "compare.json"});
  const auto setup = load_setup(ctx);
  const json rom_meta = ctx.read_json("rom.json");
  const auto t0 = Clock::now();
  const TransientResult ref = run_en_full_fe(setup, ctx.config, ctx.config.online_epsilons);
  const double ref_seconds = seconds_since(t0);
  const auto ref_avg = ensemble_average(ref);
  write_matrix_file(ctx.path("reference_average.epm"), stack(ref_avg));
  ctx.write_text("reference_energy.csv", ref.energy.to_csv());
  ctx.write_text("reference_enstrophy.csv", ref.enstrophy.to_csv());

  std::vector<int> ranks;
  std::vector<double> errors;
  for (const auto& entry : rom_meta.at("ranks")) {
    const int r = entry.at("R").get<int>();
    const std::string name = rank_prefix(r) + "average.epm";
    ctx.require(name);
    if (file_hash(ctx.path(name)) != entry.value("average_hash", ""))
      throw ArtifactError(name + " does not match rom.json");
    const auto avg = unstack(read_matrix_file(ctx.path(name)));
    ranks.push_back(r);
    errors.push_back(relative_l2_error(setup.solver->mass(), ref.snapshot_times, ref_avg, avg));
  }
  ctx.write_text("error_vs_R.csv", error_table_csv(ranks, errors));
  ctx.write_json("compare.json", {{"mesh_hash", setup.mesh_hash},
                                  {"rom_hash", file_hash(ctx.path("rom.json"))},
                                  {"reference_scheme", "en_full_fe"},
                                  {"time_integral", "trapezoid over snapshot times"},
                                  {"normalization", "divided by the reference norm"},
                                  {"reference_seconds", ref_seconds}});
  for (std::size_t i = 0; i < ranks.size(); ++i)
    *ctx.log << "compare: R = " << ranks[i] << " error " << errors[i] << "\n";
}

void stage_report(const Context& ctx) {
  ctx.claim({"report.json", "cost.json"});
  const auto setup = load_setup(ctx);
  json report;
  for (const char* name : {"mesh.json", "snapshots.json", "basis.json", "rom.json", "compare.json"}) {
    json j = ctx.read_json(name);
    if (j.contains("columns")) j.erase("columns");
    report[fs::path(name).stem().string()] = j;
  }
  const auto read_csv_rows = [&](const std::string& name) {
    ctx.require(name);
    std::istringstream in(read_file(ctx.path(name)));
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
      rows.push_back(row);
    }
    return rows;
  };
  json table = json::array();
  for (const auto& row : read_csv_rows("error_vs_R.csv")) table.push_back({{"R", row[0]}, {"error", row[1]}});
  report["error_vs_R"] = table;
  json ids = json::array();
  for (const auto& row : read_csv_rows("pod_identities.csv"))
    ids.push_back({{"R", row[0]}, {"l2_gap", row[3]}, {"h1_gap", row[6]}});
  report["pod_identities"] = ids;
  const auto sv = read_csv_rows("singular_values.csv");
  if (sv.size() >= 40) report["sigma40_over_sigma1"] = sv[39][1] / sv[0][1];
  ctx.write_json("report.json", report);

  // cost: one En-full-FE saddle system with J right-hand sides
  const auto initial = stokes_initial_ensemble(*setup.solver, ctx.config.online_epsilons, ctx.config.stokes_nu);
  const SparseMatrix block = setup.solver->en_full_fe_velocity_matrix(initial.mean(), ctx.config.dt);
  const SparseMatrix saddle = saddle_point_matrix(block, setup.solver->divergence(), pressure_mean_weights(*setup.space));
  const auto dofs = setup.space->dirichlet_dofs();
  const auto system = apply_dirichlet(saddle, {}, dofs, std::vector<double>(dofs.size(), 0.0));
  const int counts[] = {1, 2, 4, 8, 16};
  json full_cost = json::array();
  for (const auto& t : measure_multi_rhs_cost(system.matrix, counts, ctx.config.seed))
    full_cost.push_back({{"J", t.members}, {"shared_seconds", t.shared_seconds}, {"separate_seconds", t.separate_seconds}});
  ctx.write_json("cost.json", {{"system_size", system.matrix.rows()},
                               {"multi_rhs", full_cost},
                               {"note", "wall-clock seconds; not reproducible bit-for-bit"}});
  *ctx.log << "report: written\n";
}

int threads_from_env() {
  if (const char* env = std::getenv("EPOD_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 0;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble POD reduced-order modelling of incompressible flow"};
  app.require_subcommand(1);
  std::string config_path, out_dir, a_path, b_path;
  bool force = false;
  int threads = 0;
  std::vector<int> ranks;
  std::vector<double> eps;

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"mesh", "generate the mesh"},
      {"snapshots", "run the full-order snapshot ensemble"},
      {"pod", "build the POD basis"},
      {"rom", "run En-POD for the online ensemble"},
      {"compare", "compare En-POD against En-full-FE (or two trajectory files)"},
      {"report", "collect metrics and cost measurements"},
      {"pipeline", "run every stage in order"}};
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_flag("--force", force, "overwrite existing outputs");
    sub->add_option("--threads", threads, "worker threads (default: EPOD_THREADS or the config)");
    sub->add_option("--out", out_dir, "output directory (default: the config's output)");
    sub->add_option("--R", ranks, "POD ranks, overriding pod.R");
    sub->add_option("--eps", eps, "online ensemble epsilons, overriding online_ensemble.epsilons");
    if (name == "compare") {
      sub->add_option("--a", a_path, "first trajectory matrix file");
      sub->add_option("--b", b_path, "second trajectory matrix file");
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    Context ctx;
    ctx.config = load_config(config_path);
    if (!ranks.empty()) ctx.config.ranks = ranks;
    if (!eps.empty()) ctx.config.online_epsilons = eps;
    if (threads == 0) threads = threads_from_env();
    if (threads != 0) ctx.config.threads = threads;
    validate_config(ctx.config);
    ctx.out = out_dir.empty() ? fs::path(ctx.config.output) : fs::path(out_dir);
    ctx.force = force;
    ctx.log = &err;
    ctx.stdout_ = &out;

    if (stage == "mesh" || stage == "pipeline") stage_mesh(ctx);
    if (stage == "snapshots" || stage == "pipeline") stage_snapshots(ctx);
    if (stage == "pod" || stage == "pipeline") stage_pod(ctx);
    if (stage == "rom" || stage == "pipeline") stage_rom(ctx);
    if (stage == "compare" || stage == "pipeline") stage_compare(ctx, a_path, b_path);
    if (stage == "report" || stage == "pipeline") stage_report(ctx);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StabilityViolation& e) {
    err << "stability abort: " << e.what() << "\n";
    return 4;
  } catch (const NonConvergence& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularMatrixError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const RankError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const InvariantError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace enpod
