#include "enpod/config.hpp"

#include <cmath>
#include <json.hpp>

#include "enpod/atomic_file.hpp"
#include "enpod/errors.hpp"
#include "enpod/io.hpp"

namespace enpod {

using nlohmann::json;

namespace {

/// Collects problems instead of stopping at the first one.
class FieldReader {
 public:
  explicit FieldReader(const json& root) : root_(root) {}

  const json* find(const std::string& path) const {
    const json* node = &root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key)) return nullptr;
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  template <typename T>
  void get(const std::string& path, T& out, bool required) {
    const json* node = find(path);
    if (node == nullptr) {
      if (required) problems_.push_back(path + ": missing");
      return;
    }
    try {
      out = node->get<T>();
    } catch (const json::exception&) {
      problems_.push_back(path + ": wrong type");
    }
  }

  void add(std::string problem) { problems_.push_back(std::move(problem)); }
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  const json& root_;
  std::vector<std::string> problems_;
};

[[noreturn]] void fail(const std::vector<std::string>& problems) {
  std::string msg = "invalid config:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

std::vector<std::string> violations(const RunConfig& c) {
  std::vector<std::string> out;
  const bool dt_ok = std::isfinite(c.dt) && c.dt > 0.0;
  if (!dt_ok) out.push_back("time.dt: must be > 0");
  if (!(std::isfinite(c.final_time) && c.final_time > 0.0)) out.push_back("time.T: must be > 0");
  if (!(std::isfinite(c.snapshot_every) && c.snapshot_every > 0.0))
    out.push_back("time.snapshot_every: must be > 0");
  auto multiple = [](double a, double b) {
    const double r = a / b;
    return std::llround(r) >= 1 && std::abs(r - std::llround(r)) <= 1e-9 * std::max(1.0, r);
  };
  if (dt_ok && c.final_time > 0.0 && !multiple(c.final_time, c.dt))
    out.push_back("time.T: not an integer multiple of time.dt");
  if (dt_ok && c.snapshot_every > 0.0 && !multiple(c.snapshot_every, c.dt))
    out.push_back("time.snapshot_every and time.dt: snapshot_every is not an integer multiple of dt");
  if (c.snapshot_every > 0.0 && c.final_time > 0.0 && !multiple(c.final_time, c.snapshot_every))
    out.push_back("time.T: not an integer multiple of time.snapshot_every");
  if (!(std::isfinite(c.nu) && c.nu > 0.0)) out.push_back("physics.nu: must be > 0");
  if (!(std::isfinite(c.stokes_nu) && c.stokes_nu >= 0.0))
    out.push_back("initial_condition.stokes_nu: must be >= 0");
  if (c.snapshot_epsilons.empty()) out.push_back("snapshot_ensemble.epsilons: must be non-empty");
  if (c.online_epsilons.empty()) out.push_back("online_ensemble.epsilons: must be non-empty");
  for (double e : c.snapshot_epsilons)
    if (!std::isfinite(e)) out.push_back("snapshot_ensemble.epsilons: entries must be finite");
  for (double e : c.online_epsilons)
    if (!std::isfinite(e)) out.push_back("online_ensemble.epsilons: entries must be finite");
  if (c.ranks.empty()) out.push_back("pod.R: must be non-empty");
  for (int r : c.ranks)
    if (r < 1) out.push_back("pod.R: every rank must be >= 1 (got " + std::to_string(r) + ")");
  if (!(std::isfinite(c.c_stab) && c.c_stab > 0.0)) out.push_back("stability.C_stab: must be > 0");
  if (c.threads < 1) out.push_back("threads: must be >= 1");
  if (c.domain == DomainKind::OffsetAnnulus) {
    if (c.n_theta < 8) out.push_back("mesh.n_theta: must be >= 8");
    if (c.n_r < 2) out.push_back("mesh.n_r: must be >= 2");
    const auto& g = c.annulus;
    if (!(g.r1 > 0.0 && g.r2 > 0.0 && std::hypot(g.c1, g.c2) + g.r2 < g.r1))
      out.push_back("domain: inner disc must lie strictly inside the outer disc");
  } else if (c.square_n < 2) {
    out.push_back("mesh.n: must be >= 2");
  }
  if (c.output.empty()) out.push_back("output: must be non-empty");
  return out;
}

}  // namespace

void validate_config(const RunConfig& config) {
  const auto problems = violations(config);
  if (!problems.empty()) fail(problems);
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  FieldReader r(root);
  std::string domain = "offset_annulus";
  r.get("domain.type", domain, false);
  if (domain == "offset_annulus") {
    c.domain = DomainKind::OffsetAnnulus;
    r.get("domain.r1", c.annulus.r1, false);
    r.get("domain.r2", c.annulus.r2, false);
    r.get("domain.c1", c.annulus.c1, false);
    r.get("domain.c2", c.annulus.c2, false);
    r.get("mesh.n_theta", c.n_theta, false);
    r.get("mesh.n_r", c.n_r, false);
  } else if (domain == "unit_square") {
    c.domain = DomainKind::UnitSquare;
    r.get("mesh.n", c.square_n, false);
  } else {
    r.add("domain.type: expected offset_annulus or unit_square");
  }
  r.get("physics.nu", c.nu, true);
  r.get("time.dt", c.dt, true);
  r.get("time.T", c.final_time, true);
  r.get("time.snapshot_every", c.snapshot_every, true);
  r.get("snapshot_ensemble.epsilons", c.snapshot_epsilons, true);
  r.get("online_ensemble.epsilons", c.online_epsilons, true);
  r.get("forcing.perturb_during_run", c.perturb_forcing, false);
  r.get("initial_condition.stokes_nu", c.stokes_nu, false);
  if (const json* ranks = r.find("pod.R"); ranks != nullptr && ranks->is_number_integer()) {
    c.ranks = {ranks->get<int>()};
  } else {
    r.get("pod.R", c.ranks, true);
  }
  r.get("stability.C_stab", c.c_stab, false);
  std::string policy = "warn";
  r.get("stability.on_violation", policy, false);
  if (policy == "warn")
    c.on_violation = ViolationPolicy::Warn;
  else if (policy == "abort")
    c.on_violation = ViolationPolicy::Abort;
  else
    r.add("stability.on_violation: expected warn or abort");
  r.get("seed", c.seed, false);
  r.get("threads", c.threads, false);
  r.get("output", c.output, false);

  auto problems = r.problems();
  for (auto& v : violations(c)) problems.push_back(std::move(v));
  if (!problems.empty()) fail(problems);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config " + path.string());
  }
  return parse_config(text);
}

std::string serialize_config(const RunConfig& c) {
  json j;
  if (c.domain == DomainKind::OffsetAnnulus) {
    j["domain"] = {{"type", "offset_annulus"}, {"r1", c.annulus.r1}, {"r2", c.annulus.r2},
                   {"c1", c.annulus.c1},       {"c2", c.annulus.c2}};
    j["mesh"] = {{"n_theta", c.n_theta}, {"n_r", c.n_r}};
  } else {
    j["domain"] = {{"type", "unit_square"}};
    j["mesh"] = {{"n", c.square_n}};
  }
  j["physics"] = {{"nu", c.nu}};
  j["time"] = {{"dt", c.dt}, {"T", c.final_time}, {"snapshot_every", c.snapshot_every}};
  j["snapshot_ensemble"] = {{"epsilons", c.snapshot_epsilons}};
  j["online_ensemble"] = {{"epsilons", c.online_epsilons}};
  j["forcing"] = {{"perturb_during_run", c.perturb_forcing}};
  j["initial_condition"] = {{"stokes_nu", c.stokes_nu}};
  j["pod"] = {{"R", c.ranks}};
  j["stability"] = {{"C_stab", c.c_stab}, {"on_violation", c.on_violation == ViolationPolicy::Warn ? "warn" : "abort"}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  // threads and output do not change results
  RunConfig c = config;
  c.threads = 1;
  c.output.clear();
  return content_hash(serialize_config(c));
}

Mesh build_mesh(const RunConfig& config) {
  if (config.domain == DomainKind::UnitSquare) return generate_unit_square(config.square_n);
  return generate_offset_annulus(config.n_theta, config.n_r, config.annulus);
}

std::vector<BoundaryMarker> dirichlet_markers(const RunConfig& config) {
  if (config.domain == DomainKind::UnitSquare) return {BoundaryMarker::Other};
  return {BoundaryMarker::OuterCircle, BoundaryMarker::InnerCircle};
}

}  // namespace enpod
