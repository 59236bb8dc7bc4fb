#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fvdsim/config.hpp"
#include "fvdsim/drivers.hpp"
#include "fvdsim/io.hpp"
#include "fvdsim/protocol.hpp"
#include "fvdsim/spectrum.hpp"
#include "fvdsim/two_atom.hpp"

#ifndef FVDSIM_VERSION
#define FVDSIM_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kGeneric = 1, kConfig = 2, kNumerical = 3, kPartial = 4 };

std::string version_string() {
  return std::string("fvdsim ") + FVDSIM_VERSION + " (C++" + std::to_string(__cplusplus / 100 % 100) + ", " +
         __VERSION__ + ")";
}

struct Output {
  fs::path dir;
  std::string command;
  fvd::RunConfig cfg;
  json fits = json::array();
  std::vector<std::string> warnings;
  std::vector<std::string> failures;

  void write(const std::string& name, const std::string& content) const { fvd::io::atomic_write(dir / name, content); }

  // meta.json is written last; its presence marks a completed run.
  void finish(const json& extra = json::object()) const {
    write("fits.json", fvd::io::dump(fits));
    json meta;
    meta["command"] = command;
    meta["version"] = version_string();
    meta["threads"] = cfg.spec.threads;
    meta["config"] = cfg.resolved;
    meta["inputs_hash"] = cfg.inputs_hash();
    meta["warnings"] = warnings;
    meta["failures"] = failures;
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    write("meta.json", fvd::io::dump(meta));
  }
};

std::string sweep_csv(const fvd::SweepResult& s) {
  std::vector<std::string> header = s.axis_names;
  header.insert(header.end(), s.value_names.begin(), s.value_names.end());
  header.push_back("status");
  fvd::io::CsvWriter w(header);
  for (const auto& p : s.points) {
    std::vector<std::string> cells;
    for (double c : p.coords) cells.push_back(fvd::io::format_double(c));
    for (std::size_t k = 0; k < s.value_names.size(); ++k)
      cells.push_back(p.ok() ? fvd::io::format_double(p.values[k]) : "nan");
    cells.push_back(p.ok() ? "ok" : "failed");
    w.row_strings(cells);
  }
  return w.str();
}

void record_failures(const fvd::SweepResult& s, Output& out) {
  for (const auto& p : s.points) {
    if (p.ok()) continue;
    std::string where;
    for (std::size_t k = 0; k < p.coords.size(); ++k)
      where += (k ? " " : "") + s.axis_names[k] + "=" + fvd::io::format_double(p.coords[k]);
    out.failures.push_back(where + ": " + p.error);
  }
}

int run_decay(Output& out) {
  const auto r = fvd::run_decay(out.cfg.spec);
  auto traj = r.trajectory;
  traj.columns.push_back("neel_smoothed");
  for (std::size_t i = 0; i < traj.rows.size(); ++i) traj.rows[i].push_back(r.smoothed[i]);
  out.write("trajectory.csv", fvd::io::trajectory_csv(traj, r.params.omega));
  const auto hash = out.cfg.inputs_hash();
  if (r.fit) {
    out.fits.push_back(fvd::io::exp_fit_record(*r.fit, r.params.omega, hash));
    std::printf("gamma/Omega = %s  (r2 = %s, window %s..%s us)\n", fvd::io::format_double(r.gamma_over_omega()).c_str(),
                fvd::io::format_double(r.fit->r_squared).c_str(), fvd::io::format_double(r.fit->window.t_a).c_str(),
                fvd::io::format_double(r.fit->window.t_b).c_str());
  } else {
    out.warnings.push_back("fit failed: " + r.fit_error);
    std::printf("fit failed: %s\n", r.fit_error.c_str());
  }
  json extra;
  extra["diagnostics"] = {{"thin_wall", r.thin_wall}, {"critical_fits", r.critical_fits}};
  for (const auto& [k, v] : r.trajectory.metadata) extra["diagnostics"][k] = v;
  out.finish(extra);
  return kOk;
}

int run_anneal(Output& out) {
  const auto r = fvd::run_anneal(out.cfg.spec);
  auto traj = r.trajectory;
  traj.columns.push_back("neel_smoothed");
  for (std::size_t i = 0; i < traj.rows.size(); ++i) traj.rows[i].push_back(r.smoothed[i]);
  out.write("trajectory.csv", fvd::io::trajectory_csv(traj, r.params.omega));
  if (r.cliffs) {
    out.fits.push_back(fvd::io::fit_record("anneal_cliffs",
                                           {{"first_cliff", r.cliffs->first_cliff},
                                            {"second_cliff", r.cliffs->second_cliff},
                                            {"mid_plateau", r.cliffs->mid_plateau}},
                                           std::nullopt, std::numeric_limits<double>::quiet_NaN(),
                                           out.cfg.inputs_hash()));
    std::printf("cliffs at Delta_loc/V1 = %s and %s\n", fvd::io::format_double(r.cliffs->first_cliff).c_str(),
                fvd::io::format_double(r.cliffs->second_cliff).c_str());
  } else {
    out.warnings.push_back("cliff analysis failed: " + r.cliff_error);
  }
  json extra;
  for (const auto& [k, v] : r.trajectory.metadata) extra["diagnostics"][k] = v;
  out.finish(extra);
  return kOk;
}

int finish_sweep(Output& out, const fvd::SweepResult& s) {
  record_failures(s, out);
  out.finish();
  return s.failures() > 0 ? kPartial : kOk;
}

int run_rate_vs_beta(Output& out) {
  const auto r = fvd::run_rate_vs_confinement(out.cfg.spec);
  out.write("grid.csv", sweep_csv(r.sweep));
  out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  if (r.fit) {
    out.fits.push_back(fvd::io::scaling_fit_record(*r.fit, out.cfg.inputs_hash()));
    std::printf("gamma/Omega = b exp(-p / beta): b = %s, p = %s, r2 = %s\n", fvd::io::format_double(r.fit->first).c_str(),
                fvd::io::format_double(r.fit->second).c_str(), fvd::io::format_double(r.fit->r_squared).c_str());
  }
  return finish_sweep(out, r.sweep);
}

int run_rate_vs_gap(Output& out) {
  const auto r = fvd::run_rate_vs_gap(out.cfg.spec);
  out.write("grid.csv", sweep_csv(r.sweep));
  out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  for (const auto& [alpha, f] : r.gap_fits) {
    out.fits.push_back(fvd::io::scaling_fit_record(f, out.cfg.inputs_hash(), {{"alpha", alpha}}));
    std::printf("alpha = %s: q = %s, r2 = %s\n", fvd::io::format_double(alpha).c_str(),
                fvd::io::format_double(f.second).c_str(), fvd::io::format_double(f.r_squared).c_str());
  }
  if (r.q_fit) out.fits.push_back(fvd::io::scaling_fit_record(*r.q_fit, out.cfg.inputs_hash()));
  return finish_sweep(out, r.sweep);
}

int run_rate_diagram(Output& out) {
  const auto r = fvd::run_rate_diagram(out.cfg.spec);
  std::vector<double> gamma;
  for (std::size_t i = 0; i < r.points.size(); ++i) gamma.push_back(r.value(i, "gamma_over_omega"));
  out.write("grid.csv", fvd::io::matrix_csv(out.cfg.spec.sweep.rb_over_as, out.cfg.spec.sweep.alphas, gamma));
  out.write("points.csv", sweep_csv(r));
  return finish_sweep(out, r);
}

int run_sweep(Output& out) {
  const auto r = fvd::run_sweep(out.cfg.spec, out.cfg.spec.threads);
  out.write("grid.csv", sweep_csv(r));
  return finish_sweep(out, r);
}

int run_phase_diagram(Output& out) {
  const auto& ph = out.cfg.phase;
  fvd::PhaseGridSpec gs;
  gs.n_s = out.cfg.spec.system.n_s;
  gs.alphas = fvd::linspace(ph.alpha_lo, ph.alpha_hi, ph.n_alpha);
  gs.rb_over_as = fvd::linspace(ph.rba_lo, ph.rba_hi, ph.n_rba);
  gs.omega = out.cfg.spec.system.omega;
  gs.geometry_mode = out.cfg.spec.system.geometry_mode;
  gs.c6 = out.cfg.spec.system.c6;
  gs.threads = out.cfg.spec.threads;
  gs.lanczos = out.cfg.spec.lanczos;
  const auto g = fvd::ground_phase_diagram(gs, &out.warnings);
  out.write("grid.csv", fvd::io::matrix_csv(g.rb_over_as, g.alphas, g.values));
  json b = json::array();
  for (const auto& p : g.boundary) b.push_back({{"alpha", p.alpha}, {"rb_over_a", p.rb_over_a}});
  out.write("boundary.json", fvd::io::dump(b));
  int failed = 0;
  for (std::size_t i = 0; i < g.valid.size(); ++i) {
    if (g.valid[i]) continue;
    ++failed;
    out.failures.push_back("rb_over_a=" + fvd::io::format_double(g.rb_over_as[i / g.alphas.size()]) +
                           " alpha=" + fvd::io::format_double(g.alphas[i % g.alphas.size()]) + ": " + g.errors[i]);
  }
  out.finish({{"resolution", {ph.n_alpha, ph.n_rba}}, {"n_s", gs.n_s}});
  return failed > 0 ? kPartial : kOk;
}

int run_two_atom(Output& out) {
  const auto& ta = out.cfg.two_atom;
  const double t_end = ta.t_end.value_or((ta.ramp.beta_start + 2.0) * ta.ramp.tau);
  const double dt = ta.dt.value_or(fvd::two_atom::default_dt(ta.ramp.tau));
  const auto samples = fvd::two_atom::evolve_two_atom(ta.ramp, t_end, dt, ta.samples);
  fvd::io::CsvWriter w({"t", "E1", "E2", "E3", "p00", "p01", "p10", "p_phi3"});
  for (const auto& s : samples)
    w.row({s.t, s.energies[0], s.energies[1], s.energies[2], s.p00, s.p01, s.p10, s.p_phi3});
  out.write("trajectory.csv", w.str());
  const auto [tm, t0, tp] = fvd::two_atom::lz_crossing_times(ta.ramp.beta_start, ta.ramp.tau);
  out.fits.push_back(fvd::io::fit_record("lz_crossings", {{"t_minus", tm}, {"t_zero", t0}, {"t_plus", tp}}, std::nullopt,
                                         std::numeric_limits<double>::quiet_NaN(), out.cfg.inputs_hash()));
  std::printf("p(0) = %s, final |c01|^2 = %s\n", fvd::io::format_double(samples.front().p_phi3).c_str(),
              fvd::io::format_double(samples.back().p01).c_str());
  out.finish({{"t_end", t_end}, {"dt", dt}});
  return kOk;
}

int run_protocol(Output& out) {
  const auto& pr = out.cfg.protocol;
  const auto layout = fvd::protocol::layout_decay_protocol(pr.n_s, pr.a, pr.b, pr.n_y);
  const auto hc = pr.upgraded_fov ? fvd::protocol::HardwareConstraints::upgraded_fov()
                                  : fvd::protocol::HardwareConstraints{};
  const auto report = fvd::protocol::validate(layout, fvd::protocol::decay_protocol_schedule(), hc);
  json atoms = json::array();
  for (const auto& a : layout.all())
    atoms.push_back({{"x", a.x}, {"y", a.y}, {"role", std::string(fvd::protocol::to_string(a.role))}});
  out.write("layout.json", fvd::io::dump({{"atoms", atoms},
                                          {"a", layout.a},
                                          {"b", layout.b},
                                          {"n_x", layout.n_x},
                                          {"n_y", layout.n_y},
                                          {"d_x", layout.d_x},
                                          {"d_y", layout.d_y}}));
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"measured", fvd::io::number_or_null(c.measured)},
                      {"limit", c.limit},
                      {"relation", c.relation}});
    std::printf("%-18s %s  measured %s %s %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                fvd::io::format_double(c.measured).c_str(), c.relation.c_str(), fvd::io::format_double(c.limit).c_str());
  }
  out.write("report.json", fvd::io::dump({{"all_passed", report.all_passed()}, {"checks", checks}}));
  out.finish();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fvdsim: false-vacuum decay and nucleation in 1D Rydberg chains"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  bool force = false;
  int threads = -1;
  app.add_option("--config", config_path, "TOML or JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--force", force, "overwrite an existing run in the output directory");
  app.add_option("--threads", threads, "worker threads (0 = all logical cores)")->check(CLI::NonNegativeNumber);

  int n_s = 0;
  double rb_over_a = 0, alpha = 0, beta = 0, omega_mhz = 0;
  std::string geometry;
  auto* o_ns = app.add_option("--ns", n_s, "number of sites n_s");
  auto* o_rb = app.add_option("--rb-over-a", rb_over_a, "R_b / a");
  auto* o_al = app.add_option("--alpha", alpha, "Delta_glob / Omega");
  auto* o_be = app.add_option("--beta", beta, "Delta_loc / Delta_glob");
  auto* o_om = app.add_option("--omega-mhz", omega_mhz, "Omega / 2pi in MHz");
  auto* o_ge = app.add_option("--geometry", geometry, "ring distance mode: chord or arc");

  std::vector<double> betas, rbas, alphas, alpha_range, rba_range;
  std::vector<int> resolution;
  double tau = 0, beta_start = 0, beta_stop = 0, t_end = 0, a_um = 0, b_um = 0, horizon = 0;
  int n_y = 0, proto_ns = 0;
  bool upgraded = false;

  auto* c_decay = app.add_subcommand("decay", "quench from |1010...> at constant drive and fit the decay rate");
  auto* o_hz = c_decay->add_option("--horizon", horizon, "evolution horizon in Omega t / 2pi");
  auto* c_anneal = app.add_subcommand("anneal", "linear ramp of the staggered detuning");
  auto* o_tau = c_anneal->add_option("--tau", tau, "ramp time per unit beta (us)");
  auto* o_bs = c_anneal->add_option("--beta-start", beta_start, "initial beta");
  auto* o_bt = c_anneal->add_option("--beta-stop", beta_stop, "final beta");
  auto* c_rb = app.add_subcommand("rate-vs-beta", "decay rate vs 1/beta with the confinement fit");
  auto* o_betas = c_rb->add_option("--betas", betas, "beta values")->delimiter(',');
  auto* c_rg = app.add_subcommand("rate-vs-gap", "decay rate vs the zero-confinement gap");
  auto* o_rbas_g = c_rg->add_option("--rb-over-as", rbas, "R_b/a values")->delimiter(',');
  auto* o_alphas_g = c_rg->add_option("--alphas", alphas, "alpha values")->delimiter(',');
  auto* c_rd = app.add_subcommand("rate-diagram", "decay rate on an (alpha, R_b/a) grid at beta = 0.25");
  auto* o_rbas_d = c_rd->add_option("--rb-over-as", rbas, "R_b/a values")->delimiter(',');
  auto* o_alphas_d = c_rd->add_option("--alphas", alphas, "alpha values")->delimiter(',');
  auto* c_sw = app.add_subcommand("sweep", "decay runs over the rb_over_a x alpha x beta grid");
  auto* o_rbas_s = c_sw->add_option("--rb-over-as", rbas, "R_b/a values")->delimiter(',');
  auto* o_alphas_s = c_sw->add_option("--alphas", alphas, "alpha values")->delimiter(',');
  auto* o_betas_s = c_sw->add_option("--betas", betas, "beta values")->delimiter(',');
  auto* c_pd = app.add_subcommand("phase-diagram", "ground-state TPCF-Neel map at beta = 0");
  auto* o_ar = c_pd->add_option("--alpha-range", alpha_range, "lo,hi")->delimiter(',')->expected(2);
  auto* o_rr = c_pd->add_option("--rba-range", rba_range, "lo,hi")->delimiter(',')->expected(2);
  auto* o_res = c_pd->add_option("--resolution", resolution, "n_alpha,n_rba")->delimiter(',')->expected(1, 2);
  auto* c_ta = app.add_subcommand("two-atom", "blockade-restricted two-atom ramp");
  auto* o_tau2 = c_ta->add_option("--tau", tau, "ramp time per unit beta");
  auto* o_bs2 = c_ta->add_option("--beta-start", beta_start, "initial beta");
  auto* o_te = c_ta->add_option("--t-end", t_end, "end time (default (beta_start + 2) tau)");
  auto* c_pr = app.add_subcommand("protocol", "racetrack layout with ancillas, checked against hardware limits");
  auto* o_pns = c_pr->add_option("--ns", proto_ns, "main-ring size");
  auto* o_a = c_pr->add_option("--a", a_um, "main spacing (um)");
  auto* o_b = c_pr->add_option("--b", b_um, "main-ancilla distance (um)");
  auto* o_ny = c_pr->add_option("--ny", n_y, "atoms per vertical side");
  auto* o_up = c_pr->add_flag("--upgraded-fov", upgraded, "use the 75 x 120 um field of view");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  json ov = json::object();
  const std::map<std::string, std::string> kinds{
      {"decay", "decay"},           {"anneal", "anneal"},     {"rate-vs-beta", "confinement_scan"},
      {"rate-vs-gap", "gap_scan"},  {"rate-diagram", "rate_diagram"}, {"sweep", "sweep"},
      {"phase-diagram", "phase_diagram"}, {"two-atom", "two_atom"}, {"protocol", "protocol"}};
  ov["experiment"]["kind"] = kinds.at(name);
  if (!out_dir.empty()) ov["io"]["out"] = out_dir;
  if (force) ov["io"]["force"] = true;
  if (threads >= 0) ov["compute"]["threads"] = threads;
  if (o_ns->count() && name != "protocol") ov["system"]["n_s"] = n_s;
  if (o_rb->count()) ov["system"]["rb_over_a"] = rb_over_a;
  if (o_al->count()) ov["system"]["alpha"] = alpha;
  if (o_be->count()) ov["system"]["beta"] = beta;
  if (o_om->count()) ov["system"]["omega_mhz"] = omega_mhz;
  if (o_ge->count()) ov["system"]["geometry_mode"] = geometry;
  if (o_hz->count()) ov["experiment"]["decay"]["horizon"] = horizon;
  if (o_tau->count()) ov["experiment"]["anneal"]["tau"] = tau;
  if (o_bs->count()) ov["experiment"]["anneal"]["beta_start"] = beta_start;
  if (o_bt->count()) ov["experiment"]["anneal"]["beta_stop"] = beta_stop;
  if (o_betas->count() || o_betas_s->count()) ov["experiment"]["sweep"]["betas"] = betas;
  if (o_rbas_g->count() || o_rbas_d->count() || o_rbas_s->count()) ov["experiment"]["sweep"]["rb_over_as"] = rbas;
  if (o_alphas_g->count() || o_alphas_d->count() || o_alphas_s->count()) ov["experiment"]["sweep"]["alphas"] = alphas;
  if (o_ar->count()) ov["experiment"]["phase_diagram"]["alpha_range"] = alpha_range;
  if (o_rr->count()) ov["experiment"]["phase_diagram"]["rba_range"] = rba_range;
  if (o_res->count()) {
    if (resolution.size() == 1) resolution.push_back(resolution.front());
    ov["experiment"]["phase_diagram"]["resolution"] = resolution;
  }
  if (o_tau2->count()) ov["experiment"]["two_atom"]["tau"] = tau;
  if (o_bs2->count()) ov["experiment"]["two_atom"]["beta_start"] = beta_start;
  if (o_te->count()) ov["experiment"]["two_atom"]["t_end"] = t_end;
  if (o_pns->count()) ov["experiment"]["protocol"]["n_s"] = proto_ns;
  if (o_a->count()) ov["experiment"]["protocol"]["a_um"] = a_um;
  if (o_b->count()) ov["experiment"]["protocol"]["b_um"] = b_um;
  if (o_ny->count()) ov["experiment"]["protocol"]["n_y"] = n_y;
  if (o_up->count()) ov["experiment"]["protocol"]["upgraded_fov"] = true;

  Output out;
  out.command = name;
  try {
    out.cfg = fvd::parse_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), ov);
    out.dir = out.cfg.out_dir;
    fvd::io::prepare_output_dir(out.dir, out.cfg.force);
  } catch (const fvd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    int rc = kOk;
    if (name == "decay") rc = run_decay(out);
    else if (name == "anneal") rc = run_anneal(out);
    else if (name == "rate-vs-beta") rc = run_rate_vs_beta(out);
    else if (name == "rate-vs-gap") rc = run_rate_vs_gap(out);
    else if (name == "rate-diagram") rc = run_rate_diagram(out);
    else if (name == "sweep") rc = run_sweep(out);
    else if (name == "phase-diagram") rc = run_phase_diagram(out);
    else if (name == "two-atom") rc = run_two_atom(out);
    else if (name == "protocol") rc = run_protocol(out);
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : out.failures) std::cerr << "failed point: " << f << "\n";
    std::printf("results written to %s\n", out.dir.string().c_str());
    return rc;
  } catch (const fvd::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const fvd::InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneric;
  }
}
