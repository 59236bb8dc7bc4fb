// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fvdsim/decay_analysis.hpp"
#include "fvdsim/drivers.hpp"
#include "fvdsim/evolution.hpp"
#include "fvdsim/lattice.hpp"
#include "fvdsim/protocol.hpp"
#include "fvdsim/spectrum.hpp"
#include "fvdsim/two_atom.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fvd::ExperimentSpec decay_spec(double rb, double alpha, double beta) {
  fvd::ExperimentSpec s;
  s.kind = fvd::ExperimentKind::decay;
  s.system = s.system.with(rb, alpha, beta);
  s.system.n_s = 16;
  return s;
}

Outcome a1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int sizes[] = {2, 4, 6, 8};
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = sizes[trial % 4];
    const double rb = 0.8 + 1.2 * u(rng);
    const double alpha = -2.0 + 8.0 * u(rng);
    const double beta = -1.0 + 2.0 * u(rng);
    const double t = 0.1 + 1.9 * u(rng);
    const auto p = fvd::PhysicalParams::from_ratios(n, rb, alpha, beta);
    const auto psi = fvd::StateVector::random(n, 1000 + trial);
    const auto got = fvd::evolve_constant(fvd::build_hamiltonian(p), psi, t);
    const Eigen::MatrixXd H = oracle::dense_rydberg(n, p.a, p.c6, p.omega, p.delta_glob, p.delta_loc);
    const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(psi.amplitudes().data(), psi.dim());
    const Eigen::VectorXcd ref = oracle::expm_apply(H, v, t);
    for (std::size_t i = 0; i < psi.dim(); ++i) worst = std::max(worst, std::abs(got[i] - ref(static_cast<Eigen::Index>(i))));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 60.0, "max amplitude error " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome a2() {
  const auto p = fvd::PhysicalParams::from_ratios(16, 1.2, 2.5, 0.3);
  const auto H = fvd::build_hamiltonian(p);
  auto psi = fvd::StateVector::basis(16, fvd::z2_initial_index(16));
  const double e0 = H.expectation(psi).real();
  const double t_end = fvd::kTwoPi / p.omega;
  const int chunks = 20;
  double norm_drift = 0.0, e_drift = 0.0;
  for (int c = 0; c < chunks; ++c) {
    fvd::KrylovStats st;
    psi = fvd::evolve_constant(H, psi, t_end / chunks, {}, &st);
    norm_drift += st.norm_drift;
    e_drift = std::max(e_drift, std::abs(H.expectation(psi).real() - e0));
  }
  const double diag = H.diag_max_abs();
  const bool ok = norm_drift < 1e-8 && e_drift < 1e-6 * diag;
  return {ok, "norm drift " + fmt("%.3g", norm_drift) + ", <H> drift " + fmt("%.3g", e_drift) + " (limit " +
                  fmt("%.3g", 1e-6 * diag) + ")"};
}

Outcome a3() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int n : {4, 6, 8, 10}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto p = fvd::PhysicalParams::from_ratios(n, 0.9 + u(rng), 6.0 * u(rng), -0.5 + u(rng));
      const auto res = fvd::lowest_eigenpairs(fvd::build_hamiltonian(p), 3);
      const auto ref = oracle::lowest_eigenvalues(
          oracle::dense_rydberg(n, p.a, p.c6, p.omega, p.delta_glob, p.delta_loc), 3);
      for (int k = 0; k < 3; ++k)
        worst = std::max(worst, std::abs(res.eigenvalues[k] - ref(k)) / std::max(1.0, std::abs(ref(k))));
    }
  }
  const auto p = fvd::PhysicalParams::from_ratios(16, 1.2, 3.0, 0.0);
  const auto res = fvd::lowest_eigenpairs(fvd::build_hamiltonian(p), 3);
  const double d10 = (res.eigenvalues[1] - res.eigenvalues[0]) / p.omega;
  const double d20 = (res.eigenvalues[2] - res.eigenvalues[0]) / p.omega;
  const bool ok = worst < 1e-8 && d10 < 1e-4 && d20 > 0.1;
  return {ok, "max rel error " + fmt("%.3g", worst) + "; n_s=16: (E1-E0)/Omega " + fmt("%.3g", d10) +
                  ", (E2-E0)/Omega " + fmt("%.4f", d20)};
}

std::map<double, fvd::DecayResult> decay_cache;

const fvd::DecayResult& decay_at(double beta, double* secs = nullptr) {
  auto it = decay_cache.find(beta);
  if (it == decay_cache.end()) {
    const auto t0 = Clock::now();
    it = decay_cache.emplace(beta, fvd::run_decay(decay_spec(1.2, 2.5, beta))).first;
    if (secs) *secs = seconds_since(t0);
  }
  return it->second;
}

Outcome a4() {
  std::ostringstream d;
  bool ok = true;
  double prev = -1.0, worst_secs = 0.0;
  for (double beta : {0.1, 0.3, 0.5}) {
    double secs = 0.0;
    const auto& r = decay_at(beta, &secs);
    worst_secs = std::max(worst_secs, secs);
    if (!r.fit) {
      d << "beta=" << beta << " no fit (" << r.fit_error << "); ";
      ok = false;
      continue;
    }
    const double cyc_a = r.fit->window.t_a * r.params.omega / fvd::kTwoPi;
    const double cyc_b = r.fit->window.t_b * r.params.omega / fvd::kTwoPi;
    const bool in_range = cyc_a >= 0.1 - 1e-9 && cyc_b <= 0.4 + 1e-9;
    ok = ok && in_range && r.fit->r_squared >= 0.9 && r.gamma_over_omega() > prev;
    prev = r.gamma_over_omega();
    d << "beta=" << beta << " gamma/Omega=" << fmt("%.4f", prev) << " r2=" << fmt("%.4f", r.fit->r_squared)
      << " window=[" << fmt("%.3f", cyc_a) << "," << fmt("%.3f", cyc_b) << "]; ";
  }
  ok = ok && worst_secs <= 900.0;
  d << "slowest curve " << fmt("%.1f", worst_secs) << " s";
  return {ok, d.str()};
}

Outcome a5() {
  std::vector<std::pair<double, double>> pts;
  for (double beta : {0.4, 0.3, 0.25}) {
    const auto& r = decay_at(beta);
    if (!r.fit || !(r.gamma_over_omega() > 0.0)) return {false, "no decay fit at beta=" + fmt("%.3g", beta)};
    pts.emplace_back(1.0 / beta, r.gamma_over_omega());
  }
  const auto f = fvd::fit_rate_scaling(pts, fvd::ScalingKind::confinement);
  return {f.r_squared >= 0.95 && f.second > 0.0,
          "p=" + fmt("%.4f", f.second) + " b=" + fmt("%.4f", f.first) + " r2=" + fmt("%.4f", f.r_squared)};
}

Outcome a6() {
  fvd::ExperimentSpec s = decay_spec(1.2, 2.5, 0.25);
  s.kind = fvd::ExperimentKind::gap_scan;
  s.sweep.alphas = {2.5, 3.0, 3.5};
  s.sweep.rb_over_as = {1.14, 1.18, 1.22, 1.26};
  s.sweep.beta_gap = 0.25;
  s.threads = fvd::default_thread_count();
  const auto g = fvd::run_rate_vs_gap(s);
  std::ostringstream d;
  bool ok = true;
  bool have_25 = false;
  for (const auto& [alpha, f] : g.gap_fits) {
    d << "alpha=" << alpha << " q=" << fmt("%.4f", f.second) << " r2=" << fmt("%.4f", f.r_squared) << "; ";
    if (alpha == 2.5) {
      have_25 = true;
      ok = ok && f.r_squared >= 0.9 && f.second > 0.0;
    }
  }
  ok = ok && have_25 && g.q_fit.has_value() && g.q_fit->first < 0.0;
  if (g.q_fit) d << "u=" << fmt("%.4f", g.q_fit->first) << " alpha0=" << fmt("%.4f", g.q_fit->second);
  else d << "q-vs-alpha fit unavailable";
  for (const auto& w : g.warnings) d << "; " << w;
  return {ok, d.str()};
}

Outcome a7() {
  fvd::ExperimentSpec s;
  s.kind = fvd::ExperimentKind::anneal;
  s.system = s.system.with(1.2, 5.0, 2.0);
  s.anneal.beta_start = 2.0;
  s.anneal.beta_stop = -1.5;
  s.anneal.tau = 16.0;
  const auto t0 = Clock::now();
  const auto r = fvd::run_anneal(s);
  const auto neel = r.trajectory.column("neel");
  const auto s_ns = r.trajectory.column("sigma_ns");
  std::ostringstream d;
  bool ok = neel.front() > 0.9 && neel.back() < -0.9 && s_ns.back() >= 0.8;
  d << "N(0)=" << fmt("%.4f", neel.front()) << " N(end)=" << fmt("%.4f", neel.back())
    << " sigma_ns(end)=" << fmt("%.4f", s_ns.back());
  if (!r.cliffs) {
    d << "; cliffs not found: " << r.cliff_error;
    return {false, d.str()};
  }
  const auto& c = *r.cliffs;
  const double f0 = r.trajectory.column("fidelity_zero")[c.mid_index];
  const double fp = r.trajectory.column("fidelity_z2p")[c.mid_index];
  const double fm = r.trajectory.column("fidelity_z2m")[c.mid_index];
  ok = ok && c.first_cliff >= 1.5 && c.first_cliff <= 2.1 && c.second_cliff >= -2.1 && c.second_cliff <= -1.1 &&
       f0 > fp && f0 > fm;
  d << "; cliffs at Delta_loc/V1 " << fmt("%.4f", c.first_cliff) << ", " << fmt("%.4f", c.second_cliff)
    << "; mid-plateau F0=" << fmt("%.3f", f0) << " F+=" << fmt("%.3f", fp) << " F-=" << fmt("%.3f", fm) << "; "
    << fmt("%.0f", seconds_since(t0)) << " s";
  return {ok, d.str()};
}

Outcome a8() {
  namespace ta = fvd::two_atom;
  ta::RampParams p;  // Omega 1, Delta_glob 2, beta 2 -> -2, tau 8
  const double t_end = p.t_end();
  const auto samples = ta::evolve_two_atom(p, t_end, ta::default_dt(p.tau), 801);
  const double p0 = samples.front().p_phi3;
  const double c01 = samples.back().p01;

  const auto grid = fvd::uniform_grid(0.0, t_end, 801);
  const double step = grid[1] - grid[0];
  const auto ec = ta::eigenvalues_vs_time(p, grid);
  std::vector<double> minima;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double g = ec.energies[i][2] - ec.energies[i][1];
    if (g < ec.energies[i - 1][2] - ec.energies[i - 1][1] && g <= ec.energies[i + 1][2] - ec.energies[i + 1][1])
      minima.push_back(grid[i]);
  }
  auto near = [&](double target) {
    return std::any_of(minima.begin(), minima.end(), [&](double t) { return std::abs(t - target) <= step + 1e-12; });
  };
  const double t_lo = (p.beta_start - 1.0) * p.tau, t_hi = (p.beta_start + 1.0) * p.tau;
  const bool times_ok = near(t_lo) && near(t_hi);
  std::ostringstream d;
  d << "p(0)=" << fmt("%.4f", p0) << " (needs > 0.97); E3-E2 minima at";
  for (double t : minima) d << " " << fmt("%.3f", t);
  d << " (targets " << t_lo << ", " << t_hi << ", step " << fmt("%.3f", step) << "); final |c01|^2=" << fmt("%.4f", c01);
  return {p0 > 0.97 && times_ok && c01 > 0.9, d.str()};
}

Outcome a9() {
  namespace pr = fvd::protocol;
  const auto L = pr::layout_decay_protocol(16, 8.27, 10.0);
  const bool dims = L.d_x >= 64.7 && L.d_x <= 64.9 && L.d_y >= 48.1 && L.d_y <= 48.3;
  const auto sched = pr::decay_protocol_schedule();
  const auto L28 = pr::layout_decay_protocol(28, 8.27, 10.0);
  const bool std_rejects = !pr::validate(L28, sched).all_passed();
  const bool up_accepts = pr::validate(L28, sched, pr::HardwareConstraints::upgraded_fov()).all_passed();
  const auto step = pr::decay_protocol_schedule(fvd::kTwoPi, -fvd::kTwoPi * 2.0, fvd::kTwoPi * 1.5,
                                                fvd::kTwoPi * 2.5, 2.0, 2.0, 0.1, 0.0);
  const auto step_rep = pr::validate(L, step);
  const bool step_fails = !step_rep.find("delta_glob_slew").passed;
  std::ostringstream d;
  d << "d_x=" << fmt("%.4f", L.d_x) << " d_y=" << fmt("%.4f", L.d_y) << "; n_s=28 standard "
    << (std_rejects ? "rejected" : "accepted") << ", upgraded " << (up_accepts ? "accepted" : "rejected")
    << "; step quench slew " << fmt("%.3g", step_rep.find("delta_glob_slew").measured);
  return {dims && std_rejects && up_accepts && step_fails, d.str()};
}

Outcome a10() {
  double worst_scale = 0.0, worst_quad = 0.0;
  for (double hx : {0.1, 0.3, 0.5, 0.8}) {
    const double ref = fvd::ising_reference_exponent(hx, 0.1) * 0.1;
    for (double hz : {0.05, 0.1, 0.2})
      worst_scale = std::max(worst_scale, std::abs(fvd::ising_reference_exponent(hx, hz) * hz - ref) / ref);
    const double a = fvd::ising_wall_action(hx), b = oracle::ising_action_gl(hx);
    worst_quad = std::max(worst_quad, std::abs(a - b));
  }
  return {worst_scale < 1e-12 && worst_quad < 1e-8,
          "scaling deviation " + fmt("%.3g", worst_scale) + ", quadrature difference " + fmt("%.3g", worst_quad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Every output file except meta.json, which records the thread count.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().filename() != "meta.json") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    why = "no outputs in " + a.string();
    return false;
  }
  for (const auto& n : names) {
    if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
      why = n + " differs";
      return false;
    }
  }
  return true;
}

Outcome a11() {
  const fs::path root = fs::temp_directory_path() / ("fvdsim_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = FVDSIM_CLI_PATH;
  const std::vector<std::pair<std::string, std::string>> runs{
      {"sweep", "--ns 10 sweep --rb-over-as 1.15,1.25 --alphas 2.5,3 --betas 0.25,0.4"},
      {"phase", "--ns 8 phase-diagram --resolution 7,5"},
      {"diagram", "--ns 8 rate-diagram --rb-over-as 1.1,1.2,1.3 --alphas 2,3"}};
  std::ostringstream d;
  bool ok = true;
  for (const auto& [name, args] : runs) {
    for (int th : {1, 8}) {
      const auto out = root / (name + "_" + std::to_string(th));
      const std::string cmd = cli + " --threads " + std::to_string(th) + " --out " + out.string() + " " + args +
                              " > " + (root / (name + ".log")).string() + " 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        ok = false;
        d << name << " threads=" << th << " exited with " << rc << "; ";
      }
    }
    std::string why;
    const bool same = same_outputs(root / (name + "_1"), root / (name + "_8"), why);
    ok = ok && same;
    d << name << (same ? " identical" : " differs: " + why) << "; ";
  }
  fs::remove_all(root);
  return {ok, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << name << " " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
