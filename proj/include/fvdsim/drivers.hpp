#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fvdsim/decay_analysis.hpp"
#include "fvdsim/errors.hpp"
#include "fvdsim/evolution.hpp"
#include "fvdsim/lattice.hpp"
#include "fvdsim/observables.hpp"
#include "fvdsim/parallel.hpp"
#include "fvdsim/spectrum.hpp"
#include "fvdsim/state.hpp"

namespace fvd {

enum class ExperimentKind { decay, anneal, confinement_scan, gap_scan, rate_diagram, sweep, phase_diagram, two_atom, protocol };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::anneal: return "anneal";
    case ExperimentKind::confinement_scan: return "confinement_scan";
    case ExperimentKind::gap_scan: return "gap_scan";
    case ExperimentKind::rate_diagram: return "rate_diagram";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::phase_diagram: return "phase_diagram";
    case ExperimentKind::two_atom: return "two_atom";
    case ExperimentKind::protocol: return "protocol";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::decay, ExperimentKind::anneal, ExperimentKind::confinement_scan,
                 ExperimentKind::gap_scan, ExperimentKind::rate_diagram, ExperimentKind::sweep,
                 ExperimentKind::phase_diagram, ExperimentKind::two_atom, ExperimentKind::protocol})
    if (to_string(k) == s) return k;
  throw InvalidParameter("unknown experiment kind '" + std::string(s) + "'");
}

// Dimensionless controls of the chain; physical couplings follow from them.
struct SystemSpec {
  int n_s = 16;
  double rb_over_a = 1.2;
  double alpha = 2.5;
  double beta = 0.3;
  double omega = kTwoPi;  // rad/us
  GeometryMode geometry_mode = GeometryMode::chord;
  std::optional<double> c6;
  std::optional<double> a;

  PhysicalParams physical() const {
    return PhysicalParams::from_ratios(n_s, rb_over_a, alpha, beta, omega, geometry_mode, c6, a);
  }
  SystemSpec with(double rb, double al, double be) const {
    SystemSpec s = *this;
    s.rb_over_a = rb;
    s.alpha = al;
    s.beta = be;
    return s;
  }
};

struct DecaySettings {
  double horizon = 1.0;  // in units of Omega t / 2pi
  int samples = 401;
  int sg_window = 21;
  int sg_order = 3;
  double fit_lo = 0.1;  // window search interval, Omega t / 2pi
  double fit_hi = 0.4;
};

struct AnnealSettings {
  double beta_start = 2.0;
  double beta_stop = -1.5;
  double tau = 16.0;  // us
  int samples = 600;
  std::optional<double> dt;
};

struct SweepAxes {
  std::vector<double> betas;
  std::vector<double> rb_over_as;
  std::vector<double> alphas;
  double beta_gap = 0.25;                   // beta used for the gamma of gap scans and rate diagrams
  double inv_beta_lo = 2.5;                 // confinement fit interval in 1/beta
  double inv_beta_hi = 4.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::decay;
  SystemSpec system;
  DecaySettings decay;
  AnnealSettings anneal;
  SweepAxes sweep;
  Windowing windowing = Windowing::wrap;
  BubblePattern pattern = BubblePattern::anti_initial;
  KrylovOptions krylov{};
  LanczosOptions lanczos{};
  int threads = 1;

  void validate() const {
    system.physical();
    if (decay.samples < 2) throw InvalidParameter("decay.samples must be >= 2");
    if (!(decay.horizon > 0.0)) throw InvalidParameter("decay.horizon must be > 0");
    if (!(anneal.tau > 0.0)) throw InvalidParameter("tau must be > 0");
    if (threads < 1) throw InvalidParameter("threads must be >= 1");
    switch (kind) {
      case ExperimentKind::decay:
        if (!(system.beta > 0.0 && system.beta < 1.0)) throw InvalidParameter("decay requires 0 < beta < 1");
        if (!(system.alpha > 0.0)) throw InvalidParameter("decay requires alpha > 0");
        break;
      case ExperimentKind::anneal:
        if (!(anneal.beta_start > anneal.beta_stop)) throw InvalidParameter("anneal requires beta_start > beta_stop");
        break;
      case ExperimentKind::confinement_scan:
        if (sweep.betas.size() < 3) throw InvalidParameter("confinement scan needs at least 3 beta values");
        for (double b : sweep.betas)
          if (!(b > 0.0 && b < 1.0)) throw InvalidParameter("confinement scan betas must lie in (0, 1)");
        break;
      case ExperimentKind::gap_scan:
        if (sweep.rb_over_as.size() < 3) throw InvalidParameter("gap scan needs at least 3 rb_over_a values");
        break;
      case ExperimentKind::rate_diagram:
        if (sweep.alphas.empty() || sweep.rb_over_as.empty()) throw InvalidParameter("rate diagram grid is empty");
        break;
      case ExperimentKind::sweep:
      case ExperimentKind::phase_diagram:
      case ExperimentKind::two_atom:
      case ExperimentKind::protocol:
        break;
    }
  }
};

// Columns sampled along decay and anneal runs.
inline const std::vector<std::string>& observable_columns() {
  static const std::vector<std::string> cols{"neel", "sigma_1", "sigma_2", "sigma_ns",
                                             "fidelity_z2p", "fidelity_z2m", "fidelity_zero"};
  return cols;
}

// Per-basis-state values of the diagonal observables, so each sample costs
// one pass over |psi|^2.
class ObservableTables {
 public:
  ObservableTables(int n_s, Windowing windowing, BubblePattern pattern)
      : n_s_(n_s), pattern_(pattern) {
    const std::size_t dim = std::size_t{1} << n_s;
    neel_.resize(dim);
    sigma1_.resize(dim);
    sigma2_.resize(dim);
    const bool open_ok_1 = windowing == Windowing::wrap || n_s - 2 >= 1;
    const bool open_ok_2 = windowing == Windowing::wrap || n_s - 3 >= 1;
    for (std::size_t b = 0; b < dim; ++b) {
      neel_[b] = neel_of_basis(b, n_s);
      sigma1_[b] = window_value(b, 1, windowing, open_ok_1);
      sigma2_[b] = window_value(b, 2, windowing, open_ok_2);
    }
  }

  std::vector<double> sample(const StateVector& psi) const {
    const auto a = psi.amplitudes();
    double n = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < a.size(); ++b) {
      const double p = std::norm(a[b]);
      n += p * neel_[b];
      s1 += p * sigma1_[b];
      s2 += p * sigma2_[b];
    }
    const double p_init = std::norm(a[z2_initial_index(n_s_)]);
    const double p_opp = std::norm(a[z2_opposite_index(n_s_)]);
    double s_ns = p_opp;
    if (pattern_ == BubblePattern::literal) s_ns = p_init;
    if (pattern_ == BubblePattern::both) s_ns = 0.5 * (p_init + p_opp);
    return {n, s1, s2, s_ns, p_init, p_opp, std::norm(a[0])};
  }

 private:
  double window_value(std::uint64_t b, int k, Windowing w, bool ok) const {
    if (k == n_s_) {
      const bool init = b == z2_initial_index(n_s_), opp = b == z2_opposite_index(n_s_);
      switch (pattern_) {
        case BubblePattern::anti_initial: return opp ? 1.0 : 0.0;
        case BubblePattern::literal: return init ? 1.0 : 0.0;
        case BubblePattern::both: return (init || opp) ? 0.5 : 0.0;
      }
    }
    if (k > n_s_ || !ok) return std::numeric_limits<double>::quiet_NaN();
    return bubble_window_fraction(b, n_s_, k, w);
  }

  int n_s_;
  BubblePattern pattern_;
  std::vector<double> neel_, sigma1_, sigma2_;
};

struct DecayResult {
  PhysicalParams params;
  Trajectory trajectory;          // times in us
  std::vector<double> smoothed;   // SG-smoothed Neel OP
  std::optional<ExpFit> fit;      // gamma in 1/us
  std::string fit_error;
  bool thin_wall = false;         // |Delta_loc| < Delta_glob
  bool critical_fits = false;     // Delta_glob < |Delta_loc| n_s

  double gamma_over_omega() const {
    return fit ? fit->gamma / params.omega : std::numeric_limits<double>::quiet_NaN();
  }
};

// Constant-H quench from a basis state, sampled on a uniform grid in
// Omega t / 2pi. No sign restriction on beta.
inline Trajectory decay_trajectory(const PhysicalParams& p, std::uint64_t initial, const DecaySettings& s,
                                   Windowing windowing = Windowing::wrap,
                                   BubblePattern pattern = BubblePattern::anti_initial, const KrylovOptions& kopt = {}) {
  p.validate();
  if (!(p.omega > 0.0)) throw InvalidParameter("decay runs need omega > 0 to define the time unit");
  const auto H = build_hamiltonian(p);
  const ObservableTables tables(p.n_s, windowing, pattern);
  const double t_end = s.horizon * kTwoPi / p.omega;
  const auto grid = uniform_grid(0.0, t_end, s.samples);
  Trajectory traj;
  traj.columns = observable_columns();
  StateVector psi = StateVector::basis(p.n_s, initial);
  traj.times.push_back(0.0);
  traj.rows.push_back(tables.sample(psi));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    psi = evolve_constant(H, psi, grid[i] - grid[i - 1], kopt);
    traj.times.push_back(grid[i]);
    traj.rows.push_back(tables.sample(psi));
  }
  return traj;
}

// SG smoothing, 10%/90% window inside the search interval, then a log-domain
// fit of the raw Neel OP. The window is cut before any non-positive sample.
inline void fit_decay(DecayResult& r, const DecaySettings& s) {
  const auto neel = r.trajectory.column("neel");
  const auto& t = r.trajectory.times;
  r.smoothed = savitzky_golay(neel, s.sg_window, s.sg_order);
  const double unit = kTwoPi / r.params.omega;
  try {
    auto w = select_fit_window(t, r.smoothed, s.fit_lo * unit, s.fit_hi * unit);
    w = truncate_at_nonpositive(t, neel, w);
    r.fit = fit_exponential(t, neel, w);
  } catch (const FitError& e) {
    r.fit_error = e.what();
  }
}

inline DecayResult run_decay(const ExperimentSpec& spec) {
  if (!(spec.system.beta > 0.0 && spec.system.beta < 1.0)) throw InvalidParameter("decay requires 0 < beta < 1");
  if (!(spec.system.alpha > 0.0)) throw InvalidParameter("decay requires alpha > 0");
  DecayResult r;
  r.params = spec.system.physical();
  r.trajectory = decay_trajectory(r.params, z2_initial_index(r.params.n_s), spec.decay, spec.windowing, spec.pattern,
                                  spec.krylov);
  const double dg = r.params.delta_glob, dl = std::abs(r.params.delta_loc);
  r.thin_wall = dl < dg;
  r.critical_fits = dg < dl * r.params.n_s;
  r.trajectory.metadata["critical_bubble_size"] = std::to_string(critical_bubble_size(dg, r.params.delta_loc));
  r.trajectory.metadata["hopping_energy_estimate"] =
      std::to_string(hopping_energy_estimate(r.params.omega, dg, r.params.v1()));
  fit_decay(r, spec.decay);
  return r;
}

struct SweepPoint {
  std::vector<double> coords;  // aligned with SweepResult::axis_names
  std::vector<double> values;  // aligned with SweepResult::value_names; empty on failure
  std::string error;

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::vector<std::string> axis_names;
  std::vector<std::string> value_names;
  std::vector<SweepPoint> points;  // grid order, one record per point

  int failures() const {
    return static_cast<int>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok(); }));
  }
  double value(std::size_t point, std::string_view name) const {
    const auto it = std::find(value_names.begin(), value_names.end(), name);
    if (it == value_names.end()) throw InvalidParameter("sweep has no value '" + std::string(name) + "'");
    const auto& pt = points[point];
    return pt.ok() ? pt.values[static_cast<std::size_t>(it - value_names.begin())]
                   : std::numeric_limits<double>::quiet_NaN();
  }
};

inline const std::vector<std::string>& decay_value_names() {
  static const std::vector<std::string> names{"gamma",  "gamma_over_omega", "A",           "r_squared", "window_t_a",
                                              "window_t_b", "fit_ok",        "thin_wall", "critical_fits"};
  return names;
}

inline std::vector<double> decay_values(const DecayResult& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool ok = r.fit.has_value();
  return {ok ? r.fit->gamma : nan,
          r.gamma_over_omega(),
          ok ? r.fit->A : nan,
          ok ? r.fit->r_squared : nan,
          ok ? r.fit->window.t_a : nan,
          ok ? r.fit->window.t_b : nan,
          ok ? 1.0 : 0.0,
          r.thin_wall ? 1.0 : 0.0,
          r.critical_fits ? 1.0 : 0.0};
}

// Decay runs over the Cartesian product rb_over_a x alpha x beta (an empty
// axis falls back to the system value). Points run on `parallelism` workers
// and are assembled by grid index.
inline SweepResult run_sweep(const ExperimentSpec& spec, int parallelism) {
  const auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const auto rbs = axis(spec.sweep.rb_over_as, spec.system.rb_over_a);
  const auto als = axis(spec.sweep.alphas, spec.system.alpha);
  const auto bes = axis(spec.sweep.betas, spec.system.beta);
  SweepResult out;
  out.axis_names = {"rb_over_a", "alpha", "beta"};
  out.value_names = decay_value_names();
  const std::size_t n = rbs.size() * als.size() * bes.size();
  if (n == 0) throw InvalidParameter("sweep grid is empty");
  auto coords = [&](std::size_t i) {
    return std::vector<double>{rbs[i / (als.size() * bes.size())], als[(i / bes.size()) % als.size()],
                               bes[i % bes.size()]};
  };
  auto res = parallel_map<std::vector<double>>(n, parallelism, [&](std::size_t i) {
    const auto c = coords(i);
    ExperimentSpec s = spec;
    s.system = spec.system.with(c[0], c[1], c[2]);
    return decay_values(run_decay(s));
  });
  for (std::size_t i = 0; i < n; ++i) {
    SweepPoint p{coords(i), {}, res[i].error};
    if (res[i].ok()) p.values = std::move(*res[i].value);
    out.points.push_back(std::move(p));
  }
  return out;
}

struct ConfinementScan {
  SweepResult sweep;
  std::optional<RateScalingFit> fit;
  std::vector<std::string> warnings;
};

// gamma vs 1/beta with the confinement fit over [inv_beta_lo, inv_beta_hi].
inline ConfinementScan run_rate_vs_confinement(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.kind = ExperimentKind::confinement_scan;
  s.validate();
  s.sweep.rb_over_as.clear();
  s.sweep.alphas.clear();
  ConfinementScan out;
  out.sweep = run_sweep(s, s.threads);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < out.sweep.points.size(); ++i) {
    const auto& p = out.sweep.points[i];
    const double x = 1.0 / p.coords[2];
    if (x < s.sweep.inv_beta_lo - 1e-9 || x > s.sweep.inv_beta_hi + 1e-9) continue;
    const double g = out.sweep.value(i, "gamma_over_omega");
    if (!p.ok() || !(g > 0.0)) {
      out.warnings.push_back("beta=" + std::to_string(p.coords[2]) + " excluded from fit: " +
                             (p.ok() ? "no decay fit" : p.error));
      continue;
    }
    pts.emplace_back(x, g);
  }
  if (pts.size() >= 3) out.fit = fit_rate_scaling(pts, ScalingKind::confinement);
  else out.warnings.push_back("confinement fit skipped: fewer than 3 usable points");
  return out;
}

struct GapScan {
  SweepResult sweep;  // axes (alpha, rb_over_a); values gap_over_omega + decay values
  std::vector<std::pair<double, RateScalingFit>> gap_fits;  // per alpha
  std::optional<RateScalingFit> q_fit;                      // q vs alpha
  std::vector<std::string> warnings;
};

// For each (alpha, R_b/a): dE20/Omega at beta = 0 and gamma at beta_gap.
inline GapScan run_rate_vs_gap(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.kind = ExperimentKind::gap_scan;
  s.validate();
  const auto als = s.sweep.alphas.empty() ? std::vector<double>{s.system.alpha} : s.sweep.alphas;
  const auto& rbs = s.sweep.rb_over_as;
  GapScan out;
  out.sweep.axis_names = {"alpha", "rb_over_a"};
  out.sweep.value_names = {"gap_over_omega"};
  for (const auto& v : decay_value_names()) out.sweep.value_names.push_back(v);
  const std::size_t n = als.size() * rbs.size();
  auto res = parallel_map<std::vector<double>>(n, s.threads, [&](std::size_t i) {
    ExperimentSpec e = s;
    e.system = s.system.with(rbs[i % rbs.size()], als[i / rbs.size()], s.sweep.beta_gap);
    const auto p = e.system.physical();
    std::vector<double> v{gap_E20(p, s.lanczos) / p.omega};
    const auto d = decay_values(run_decay(e));
    v.insert(v.end(), d.begin(), d.end());
    return v;
  });
  for (std::size_t i = 0; i < n; ++i) {
    SweepPoint p{{als[i / rbs.size()], rbs[i % rbs.size()]}, {}, res[i].error};
    if (res[i].ok()) p.values = std::move(*res[i].value);
    out.sweep.points.push_back(std::move(p));
  }
  std::vector<std::pair<double, double>> q_pts;
  for (std::size_t a = 0; a < als.size(); ++a) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t r = 0; r < rbs.size(); ++r) {
      const std::size_t i = a * rbs.size() + r;
      const double g = out.sweep.value(i, "gamma_over_omega");
      if (!out.sweep.points[i].ok() || !(g > 0.0)) {
        out.warnings.push_back("alpha=" + std::to_string(als[a]) + " rb_over_a=" + std::to_string(rbs[r]) +
                               " excluded from gap fit");
        continue;
      }
      pts.emplace_back(out.sweep.value(i, "gap_over_omega"), g);
    }
    if (pts.size() < 3) {
      out.warnings.push_back("gap fit at alpha=" + std::to_string(als[a]) + " skipped: fewer than 3 usable points");
      continue;
    }
    const auto f = fit_rate_scaling(pts, ScalingKind::gap);
    out.gap_fits.emplace_back(als[a], f);
    q_pts.emplace_back(als[a], f.second);
  }
  if (q_pts.size() >= 3) out.q_fit = fit_rate_scaling(q_pts, ScalingKind::q_vs_alpha);
  return out;
}

// gamma/Omega on the (alpha, R_b/a) grid at beta = beta_gap. Points are in
// row-major order over (rb_over_a, alpha), matching PhaseGrid.
inline SweepResult run_rate_diagram(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.kind = ExperimentKind::rate_diagram;
  s.validate();
  const auto& als = s.sweep.alphas;
  const auto& rbs = s.sweep.rb_over_as;
  SweepResult out;
  out.axis_names = {"rb_over_a", "alpha"};
  out.value_names = decay_value_names();
  const std::size_t n = als.size() * rbs.size();
  auto res = parallel_map<std::vector<double>>(n, s.threads, [&](std::size_t i) {
    ExperimentSpec e = s;
    e.system = s.system.with(rbs[i / als.size()], als[i % als.size()], s.sweep.beta_gap);
    return decay_values(run_decay(e));
  });
  for (std::size_t i = 0; i < n; ++i) {
    SweepPoint p{{rbs[i / als.size()], als[i % als.size()]}, {}, res[i].error};
    if (res[i].ok()) p.values = std::move(*res[i].value);
    out.points.push_back(std::move(p));
  }
  return out;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("spearman needs >= 2 paired samples");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw InvalidParameter("spearman undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

struct CliffAnalysis {
  double first_cliff = 0.0;   // Delta_loc / V1 at the steepest descent of smoothed N
  double second_cliff = 0.0;
  double mid_plateau = 0.0;   // midpoint between the cliffs, Delta_loc / V1
  std::size_t first_index = 0;
  std::size_t second_index = 0;
  std::size_t mid_index = 0;
};

struct AnnealResult {
  PhysicalParams params;  // at t = 0
  Trajectory trajectory;  // columns: beta, delta_loc_over_v1, observable_columns()
  std::vector<double> smoothed;
  std::optional<CliffAnalysis> cliffs;
  std::string cliff_error;
};

// Two steepest-descent points of the smoothed N(t): the first before N drops
// below 0.1, the second between there and the first sample below -0.9.
inline CliffAnalysis locate_cliffs(const std::vector<double>& x, const std::vector<double>& smoothed) {
  const std::size_t n = smoothed.size();
  if (n < 3 || x.size() != n) throw InvalidParameter("cliff analysis needs >= 3 aligned samples");
  std::size_t i_low = n, i_end = n;
  for (std::size_t i = 0; i < n; ++i)
    if (i_low == n && smoothed[i] < 0.1) i_low = i;
  for (std::size_t i = i_low; i < n; ++i)
    if (i_end == n && smoothed[i] < -0.9) i_end = i;
  if (i_low == n || i_end == n) throw FitError("Neel OP does not complete both cliffs");
  auto steepest = [&](std::size_t lo, std::size_t hi) {
    std::size_t best = std::max<std::size_t>(lo, 1);
    double slope = std::numeric_limits<double>::infinity();
    for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi && i + 1 < n; ++i) {
      const double d = smoothed[i + 1] - smoothed[i - 1];
      if (d < slope) {
        slope = d;
        best = i;
      }
    }
    return best;
  };
  CliffAnalysis c;
  c.first_index = steepest(1, i_low);
  c.second_index = steepest(i_low + 1, i_end);
  c.first_cliff = x[c.first_index];
  c.second_cliff = x[c.second_index];
  c.mid_index = (c.first_index + c.second_index) / 2;
  c.mid_plateau = x[c.mid_index];
  return c;
}

inline AnnealResult run_anneal(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.kind = ExperimentKind::anneal;
  s.validate();
  const auto& an = s.anneal;
  AnnealResult r;
  r.params = s.system.with(s.system.rb_over_a, s.system.alpha, an.beta_start).physical();
  const auto& p = r.params;
  const RydbergModel model(geometry_of(p), p.c6);
  const auto sched = DriveSchedule::linear_beta_ramp(p.omega, p.delta_glob, an.beta_start, an.beta_stop, an.tau);
  const auto times = uniform_grid(0.0, sched.t_end(), an.samples);
  const ObservableTables tables(p.n_s, s.windowing, s.pattern);
  const double v1 = p.v1();
  std::vector<std::string> cols{"beta", "delta_loc_over_v1"};
  for (const auto& c : observable_columns()) cols.push_back(c);
  ScheduleOptions opt;
  opt.dt = an.dt.value_or(std::min(an.tau / 400.0, 0.005));
  opt.krylov = s.krylov;
  r.trajectory = evolve_schedule(
      model, sched, StateVector::basis(p.n_s, z2_initial_index(p.n_s)), times, cols,
      [&](double t, const StateVector& psi) {
        const double beta = an.beta_start - t / an.tau;
        std::vector<double> row{beta, beta * p.delta_glob / v1};
        const auto obs = tables.sample(psi);
        row.insert(row.end(), obs.begin(), obs.end());
        return row;
      },
      opt);
  r.trajectory.metadata["dt"] = std::to_string(opt.dt);
  r.trajectory.metadata["v1"] = std::to_string(v1);
  const auto neel = r.trajectory.column("neel");
  const int win = std::min<int>(21, static_cast<int>(neel.size()) % 2 == 1 ? static_cast<int>(neel.size())
                                                                           : static_cast<int>(neel.size()) - 1);
  r.smoothed = savitzky_golay(neel, win, std::min(3, win - 1));
  try {
    r.cliffs = locate_cliffs(r.trajectory.column("delta_loc_over_v1"), r.smoothed);
  } catch (const FitError& e) {
    r.cliff_error = e.what();
  }
  return r;
}

}  // namespace fvd
