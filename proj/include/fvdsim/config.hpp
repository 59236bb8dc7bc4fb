#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "fvdsim/drivers.hpp"
#include "fvdsim/errors.hpp"
#include "fvdsim/io.hpp"
#include "fvdsim/parallel.hpp"
#include "fvdsim/spectrum.hpp"
#include "fvdsim/two_atom.hpp"

namespace fvd {

struct PhaseDiagramSettings {
  double alpha_lo = 0.0, alpha_hi = 6.0;
  double rba_lo = 1.0, rba_hi = 2.0;
  int n_alpha = 13;
  int n_rba = 11;
};

struct TwoAtomSettings {
  two_atom::RampParams ramp;
  std::optional<double> t_end;  // default (beta_start + 2) tau
  std::optional<double> dt;     // default min(tau/400, 0.005)
  int samples = 801;
};

struct ProtocolSettings {
  int n_s = 16;
  double a = 8.27;
  double b = 10.0;
  int n_y = 0;  // 0: derived with n_x = 5
  bool upgraded_fov = false;
};

struct RunConfig {
  ExperimentSpec spec;
  PhaseDiagramSettings phase;
  TwoAtomSettings two_atom;
  ProtocolSettings protocol;
  std::string out_dir = "out";
  bool force = false;
  nlohmann::json resolved;  // fully resolved config, echoed into meta.json

  // Hash of everything that determines results (io and thread count excluded).
  std::string inputs_hash() const {
    nlohmann::json j = resolved;
    j.erase("io");
    if (j.contains("compute")) j["compute"].erase("threads");
    return io::hex64(io::fnv1a64(j.dump()));
  }
};

namespace config_detail {

using nlohmann::json;

// Defaults double as the schema: a key is accepted only if it appears here,
// with a value of the same JSON type (null marks an optional number).
inline json defaults() {
  return json::parse(R"({
    "system": {"n_s": 16, "rb_over_a": 1.2, "alpha": 2.5, "beta": 0.3, "omega_mhz": 1.0,
               "geometry_mode": "chord", "c6": null, "a_um": null},
    "experiment": {
      "kind": "decay",
      "windowing": "wrap",
      "pattern": "anti-initial",
      "decay": {"horizon": 1.0, "samples": 401, "sg_window": 21, "sg_order": 3, "fit_window": [0.1, 0.4]},
      "anneal": {"beta_start": 2.0, "beta_stop": -1.5, "tau": 16.0, "samples": 600, "dt": null},
      "sweep": {"betas": [0.25, 0.3, 0.4], "rb_over_as": [1.14, 1.18, 1.22, 1.26], "alphas": [],
                "beta_gap": 0.25, "inv_beta_range": [2.5, 4.0]},
      "phase_diagram": {"alpha_range": [0.0, 6.0], "rba_range": [1.0, 2.0], "resolution": [13, 11]},
      "two_atom": {"omega": 1.0, "delta_glob": 2.0, "beta_start": 2.0, "beta_stop": -2.0, "tau": 8.0,
                   "t_end": null, "dt": null, "samples": 801},
      "protocol": {"n_s": 16, "a_um": 8.27, "b_um": 10.0, "n_y": 0, "upgraded_fov": false}
    },
    "io": {"out": "out", "force": false},
    "compute": {"threads": 0, "krylov_tol": 1e-12, "krylov_dim": 16, "lanczos_tol": 1e-10,
                "lanczos_basis": 64, "seed": 24301}
  })");
}

inline bool same_kind(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_number();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!e.is_number()) return false;
    return true;
  }
  if (def.is_object()) return v.is_object();
  return false;
}

// Overlays `patch` on `base`, rejecting unknown keys and type mismatches.
inline void merge(json& base, const json& patch, const std::string& path = "") {
  if (!patch.is_object()) throw ConfigError((path.empty() ? "<root>" : path) + ": expected a table");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(key + ": unknown key");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge(slot, it.value(), key);
      continue;
    }
    if (!same_kind(slot, it.value()))
      throw ConfigError(key + ": type mismatch (expected " + std::string(slot.is_null() ? "number" : slot.type_name()) +
                        ", got " + it.value().type_name() + ")");
    slot = it.value();
  }
}

inline json toml_to_json(const toml::node& n) {
  if (const auto* t = n.as_table()) {
    json j = json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = n.as_array()) {
    json j = json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = n.as_integer()) return json(v->get());
  if (const auto* v = n.as_floating_point()) return json(v->get());
  if (const auto* v = n.as_boolean()) return json(v->get());
  if (const auto* v = n.as_string()) return json(v->get());
  throw ConfigError("unsupported TOML value type (dates and times are not accepted)");
}

inline json load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".json") {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  try {
    const auto tbl = toml::parse(text, path.string());
    return toml_to_json(tbl);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

// FVDSIM_<SECTION>_<KEY> for every leaf of the defaults (nested tables
// joined by '_', upper case). Values are read as JSON literals, falling
// back to a plain string.
inline json env_overrides(const json& schema, const std::string& prefix = "FVDSIM") {
  json patch = json::object();
  for (auto it = schema.begin(); it != schema.end(); ++it) {
    std::string name = prefix + "_" + it.key();
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (it.value().is_object()) {
      auto sub = env_overrides(it.value(), name);
      if (!sub.empty()) patch[it.key()] = std::move(sub);
      continue;
    }
    if (const char* v = std::getenv(name.c_str())) {
      try {
        patch[it.key()] = json::parse(v);
      } catch (const json::exception&) {
        patch[it.key()] = std::string(v);
      }
    }
  }
  return patch;
}

template <typename F>
auto at_key(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidParameter& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::vector<double> numbers(const json& j) { return j.get<std::vector<double>>(); }

inline std::pair<double, double> range2(const json& j, const std::string& key) {
  const auto v = numbers(j);
  if (v.size() != 2) throw ConfigError(key + ": expected two numbers [lo, hi]");
  if (!(v[0] <= v[1])) throw ConfigError(key + ": range must satisfy lo <= hi");
  return {v[0], v[1]};
}

}  // namespace config_detail

// Resolution order: defaults < file < FVDSIM_* environment < overrides
// (command-line flags). All values are validated before any compute.
inline RunConfig parse_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& overrides = {},
                              bool use_env = true) {
  using namespace config_detail;
  json cfg = defaults();
  const json schema = cfg;
  if (file) merge(cfg, load_file(*file));
  if (use_env) merge(cfg, env_overrides(schema));
  if (!overrides.is_null()) merge(cfg, overrides);

  RunConfig rc;
  const auto& sy = cfg["system"];
  const auto& ex = cfg["experiment"];
  const auto& co = cfg["compute"];
  auto& spec = rc.spec;

  const int n_s = sy["n_s"].get<int>();
  if (n_s < 2 || n_s % 2 != 0) throw ConfigError("system.n_s: n_s must be even and >= 2");
  if (n_s > StateVector::kMaxSites) throw ConfigError("system.n_s: exceeds the supported maximum");
  spec.system.n_s = n_s;
  spec.system.rb_over_a = sy["rb_over_a"].get<double>();
  if (!(spec.system.rb_over_a > 0.0)) throw ConfigError("system.rb_over_a: must be > 0");
  spec.system.alpha = sy["alpha"].get<double>();
  spec.system.beta = sy["beta"].get<double>();
  const double omega_mhz = sy["omega_mhz"].get<double>();
  if (!(omega_mhz > 0.0)) throw ConfigError("system.omega_mhz: must be > 0");
  spec.system.omega = kTwoPi * omega_mhz;
  spec.system.geometry_mode = at_key("system.geometry_mode", [&] { return parse_geometry_mode(sy["geometry_mode"].get<std::string>()); });
  if (!sy["c6"].is_null()) spec.system.c6 = sy["c6"].get<double>();
  if (!sy["a_um"].is_null()) spec.system.a = sy["a_um"].get<double>();
  if (spec.system.c6 && spec.system.a) throw ConfigError("system.c6: give at most one of c6 and a_um");
  at_key("system", [&] { return spec.system.physical(); });

  spec.kind = at_key("experiment.kind", [&] { return parse_experiment_kind(ex["kind"].get<std::string>()); });
  spec.windowing = at_key("experiment.windowing", [&] { return parse_windowing(ex["windowing"].get<std::string>()); });
  spec.pattern = at_key("experiment.pattern", [&] { return parse_bubble_pattern(ex["pattern"].get<std::string>()); });

  const auto& de = ex["decay"];
  spec.decay.horizon = de["horizon"].get<double>();
  spec.decay.samples = de["samples"].get<int>();
  spec.decay.sg_window = de["sg_window"].get<int>();
  spec.decay.sg_order = de["sg_order"].get<int>();
  std::tie(spec.decay.fit_lo, spec.decay.fit_hi) = range2(de["fit_window"], "experiment.decay.fit_window");
  if (!(spec.decay.horizon > 0.0)) throw ConfigError("experiment.decay.horizon: must be > 0");
  if (spec.decay.samples < spec.decay.sg_window)
    throw ConfigError("experiment.decay.samples: must be >= sg_window");
  if (spec.decay.sg_window < 1 || spec.decay.sg_window % 2 == 0)
    throw ConfigError("experiment.decay.sg_window: must be odd and >= 1");
  if (spec.decay.sg_order < 0 || spec.decay.sg_order >= spec.decay.sg_window)
    throw ConfigError("experiment.decay.sg_order: must satisfy 0 <= order < sg_window");
  if (spec.decay.fit_hi > spec.decay.horizon)
    throw ConfigError("experiment.decay.fit_window: must lie inside the horizon");

  const auto& an = ex["anneal"];
  spec.anneal.beta_start = an["beta_start"].get<double>();
  spec.anneal.beta_stop = an["beta_stop"].get<double>();
  spec.anneal.tau = an["tau"].get<double>();
  spec.anneal.samples = an["samples"].get<int>();
  if (!an["dt"].is_null()) spec.anneal.dt = an["dt"].get<double>();
  if (!(spec.anneal.tau > 0.0)) throw ConfigError("experiment.anneal.tau: must be > 0");
  if (spec.anneal.samples < 21) throw ConfigError("experiment.anneal.samples: must be >= 21");
  if (spec.anneal.dt && !(*spec.anneal.dt > 0.0)) throw ConfigError("experiment.anneal.dt: must be > 0");

  const auto& sw = ex["sweep"];
  spec.sweep.betas = numbers(sw["betas"]);
  spec.sweep.rb_over_as = numbers(sw["rb_over_as"]);
  spec.sweep.alphas = numbers(sw["alphas"]);
  spec.sweep.beta_gap = sw["beta_gap"].get<double>();
  std::tie(spec.sweep.inv_beta_lo, spec.sweep.inv_beta_hi) = range2(sw["inv_beta_range"], "experiment.sweep.inv_beta_range");

  const auto& pd = ex["phase_diagram"];
  std::tie(rc.phase.alpha_lo, rc.phase.alpha_hi) = range2(pd["alpha_range"], "experiment.phase_diagram.alpha_range");
  std::tie(rc.phase.rba_lo, rc.phase.rba_hi) = range2(pd["rba_range"], "experiment.phase_diagram.rba_range");
  const auto res = numbers(pd["resolution"]);
  if (res.size() != 2 || res[0] < 1 || res[1] < 1)
    throw ConfigError("experiment.phase_diagram.resolution: expected [n_alpha, n_rba] with entries >= 1");
  rc.phase.n_alpha = static_cast<int>(res[0]);
  rc.phase.n_rba = static_cast<int>(res[1]);
  if (rc.phase.alpha_lo < 0.0 || rc.phase.alpha_hi > 6.0)
    throw ConfigError("experiment.phase_diagram.alpha_range: must lie within [0, 6]");
  if (rc.phase.rba_lo < 1.0 || rc.phase.rba_hi > 2.0)
    throw ConfigError("experiment.phase_diagram.rba_range: must lie within [1, 2]");

  const auto& ta = ex["two_atom"];
  auto& ramp = rc.two_atom.ramp;
  ramp.omega = ta["omega"].get<double>();
  ramp.delta_glob = ta["delta_glob"].get<double>();
  ramp.beta_start = ta["beta_start"].get<double>();
  ramp.beta_stop = ta["beta_stop"].get<double>();
  ramp.tau = ta["tau"].get<double>();
  if (!(ramp.tau > 0.0)) throw ConfigError("experiment.two_atom.tau: must be > 0");
  if (!(ramp.beta_start > ramp.beta_stop)) throw ConfigError("experiment.two_atom.beta_stop: must be < beta_start");
  if (!ta["t_end"].is_null()) rc.two_atom.t_end = ta["t_end"].get<double>();
  if (!ta["dt"].is_null()) rc.two_atom.dt = ta["dt"].get<double>();
  rc.two_atom.samples = ta["samples"].get<int>();
  if (rc.two_atom.samples < 2) throw ConfigError("experiment.two_atom.samples: must be >= 2");
  const double t_end = rc.two_atom.t_end.value_or((ramp.beta_start + 2.0) * ramp.tau);
  if (!(t_end > 0.0) || t_end > ramp.t_end() + 1e-12)
    throw ConfigError("experiment.two_atom.t_end: must lie in (0, (beta_start - beta_stop) tau]");

  const auto& pr = ex["protocol"];
  rc.protocol.n_s = pr["n_s"].get<int>();
  rc.protocol.a = pr["a_um"].get<double>();
  rc.protocol.b = pr["b_um"].get<double>();
  rc.protocol.n_y = pr["n_y"].get<int>();
  rc.protocol.upgraded_fov = pr["upgraded_fov"].get<bool>();

  rc.out_dir = cfg["io"]["out"].get<std::string>();
  rc.force = cfg["io"]["force"].get<bool>();

  const int threads = co["threads"].get<int>();
  if (threads < 0) throw ConfigError("compute.threads: must be >= 0 (0 = all logical cores)");
  spec.threads = threads == 0 ? default_thread_count() : threads;
  cfg["compute"]["threads"] = spec.threads;
  spec.krylov.tol = co["krylov_tol"].get<double>();
  spec.krylov.krylov_dim = co["krylov_dim"].get<int>();
  if (!(spec.krylov.tol > 0.0)) throw ConfigError("compute.krylov_tol: must be > 0");
  if (spec.krylov.krylov_dim < 2) throw ConfigError("compute.krylov_dim: must be >= 2");
  spec.lanczos.rel_tol = co["lanczos_tol"].get<double>();
  spec.lanczos.basis_size = co["lanczos_basis"].get<int>();
  spec.lanczos.seed = co["seed"].get<std::uint64_t>();
  if (!(spec.lanczos.rel_tol > 0.0)) throw ConfigError("compute.lanczos_tol: must be > 0");

  at_key("experiment", [&] {
    spec.validate();
    return 0;
  });
  rc.resolved = std::move(cfg);
  return rc;
}

}  // namespace fvd
