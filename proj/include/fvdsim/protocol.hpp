#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fvdsim/errors.hpp"
#include "fvdsim/lattice.hpp"

namespace fvd::protocol {

struct HardwareConstraints {
  double t_max = 4.0;     // us
  double a_min = 4.0;     // um
  double a_min_y = 4.0;   // um, spacing between distinct rows
  double fov_x = 75.0;    // um
  double fov_y = 76.0;    // um
  double omega_min = 0.0;
  double omega_max = 15.8;           // rad/us
  double omega_slew_max = 250.0;     // rad/us^2
  double delta_glob_min = -125.0;
  double delta_glob_max = 125.0;     // rad/us
  double delta_glob_slew_max = 2500.0;
  double ancilla_freeze_max = kTwoPi * 10.0;  // rad/us

  static HardwareConstraints upgraded_fov() {
    HardwareConstraints hc;
    hc.fov_y = 120.0;
    return hc;
  }
};

enum class Role { main, ancilla };

inline std::string_view to_string(Role r) { return r == Role::main ? "main" : "ancilla"; }

struct Atom {
  double x = 0.0;
  double y = 0.0;
  Role role = Role::main;
};

struct ProtocolLayout {
  std::vector<Atom> main;     // ring order, site 1 first
  std::vector<Atom> ancilla;
  double a = 0.0;
  double b = 0.0;
  int n_x = 0;
  int n_y = 0;
  double d_x = 0.0;
  double d_y = 0.0;

  std::vector<Atom> all() const {
    std::vector<Atom> v = main;
    v.insert(v.end(), ancilla.begin(), ancilla.end());
    return v;
  }
};

// Footprint of the racetrack ring with ancilla chains on all four straight
// sides: (n_x - 1 + sqrt2) a + 2b by (n_y - 1 + sqrt2) a + 2b.
inline double footprint_extent(int n_side, double a, double b) {
  return (static_cast<double>(n_side - 1) + std::sqrt(2.0)) * a + 2.0 * b;
}

// Racetrack ring: horizontal rows of n_x atoms at top and bottom, vertical
// columns of n_y atoms left and right, joined by 45-degree bonds. Each
// straight side carries a parallel ancilla chain (same spacing a, same odd
// length) at distance b outside the ring. Site 1 is the left end of the top
// row and the ring runs clockwise. When n_y <= 0 it is chosen with n_x = 5.
inline ProtocolLayout layout_decay_protocol(int n_s, double a, double b = 10.0, int n_y = 0) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("layout requires a > 0 and b > 0");
  if (n_s < 4 || n_s % 4 != 0) throw InvalidParameter("racetrack ring needs n_s divisible by 4");
  if (n_y <= 0) n_y = n_s / 2 - 5;
  const int n_x = n_s / 2 - n_y;
  if (n_y < 1 || n_x < 1) throw InvalidParameter("racetrack shape needs n_x >= 1 and n_y >= 1");
  if (n_x % 2 == 0 || n_y % 2 == 0)
    throw InvalidParameter("racetrack sides must have odd length (vertical extension in steps of 4 atoms)");

  const double s = a / std::sqrt(2.0);
  const double w = (n_x - 1) * a + 2.0 * s;
  const double h = (n_y - 1) * a + 2.0 * s;
  ProtocolLayout L;
  L.a = a;
  L.b = b;
  L.n_x = n_x;
  L.n_y = n_y;
  // Ring bounding box is [0, w] x [0, h]; ancillas sit b outside it.
  for (int i = 0; i < n_x; ++i) L.main.push_back({s + i * a, h, Role::main});
  for (int i = 0; i < n_y; ++i) L.main.push_back({w, h - s - i * a, Role::main});
  for (int i = 0; i < n_x; ++i) L.main.push_back({w - s - i * a, 0.0, Role::main});
  for (int i = 0; i < n_y; ++i) L.main.push_back({0.0, s + i * a, Role::main});
  for (int i = 0; i < n_x; ++i) {
    L.ancilla.push_back({s + i * a, h + b, Role::ancilla});
    L.ancilla.push_back({s + i * a, -b, Role::ancilla});
  }
  for (int i = 0; i < n_y; ++i) {
    L.ancilla.push_back({w + b, s + i * a, Role::ancilla});
    L.ancilla.push_back({-b, s + i * a, Role::ancilla});
  }
  // Shift so the footprint starts at the origin.
  for (auto* group : {&L.main, &L.ancilla})
    for (auto& at : *group) {
      at.x += b;
      at.y += b;
    }
  L.d_x = footprint_extent(n_x, a, b);
  L.d_y = footprint_extent(n_y, a, b);
  return L;
}

// Schedule plus the ancilla freeze-field amplitude (range-checked only).
struct ProtocolSchedule {
  DriveSchedule drive;
  std::optional<double> ancilla_freeze;  // rad/us
};

// Preparation ramp followed by a quench and free evolution. Omega rises over
// t_rise, Delta_glob sweeps from delta_start to delta_prep, then moves to
// delta_evolve over t_quench starting at t_prep. Total duration
// t_prep + t_evolve.
inline ProtocolSchedule decay_protocol_schedule(double omega = kTwoPi, double delta_start = -kTwoPi * 2.0,
                                                double delta_prep = kTwoPi * 2.5, double delta_evolve = kTwoPi * 2.5,
                                                double t_prep = 2.0, double t_evolve = 2.0, double t_rise = 0.1,
                                                double t_quench = 0.05, double freeze = kTwoPi * 10.0) {
  if (!(t_prep > t_rise) || !(t_rise > 0.0) || !(t_evolve > t_quench) || !(t_quench >= 0.0))
    throw InvalidParameter("protocol timings must satisfy 0 < t_rise < t_prep and 0 <= t_quench < t_evolve");
  const double T = t_prep + t_evolve;
  Waveform om({0.0, t_rise, T}, {0.0, omega, omega});
  std::vector<double> dt{0.0, t_rise, t_prep}, dv{delta_start, delta_start, delta_prep};
  if (t_quench > 0.0) {
    dt.push_back(t_prep + t_quench);
    dv.push_back(delta_evolve);
  } else {
    // Zero-width quench: the jump is represented by a 1e-9 us segment.
    dt.push_back(t_prep + 1e-9);
    dv.push_back(delta_evolve);
  }
  dt.push_back(T);
  dv.push_back(delta_evolve);
  Waveform dg(dt, dv);
  return {{om, dg, Waveform::constant(0.0, T, 0.0)}, freeze};
}

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double limit = 0.0;
  std::string relation;  // "<=" or ">="
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const CheckResult& find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw InvalidParameter("no check named '" + std::string(name) + "'");
  }
};

namespace detail {

inline void at_most(ValidationReport& r, std::string name, double measured, double limit) {
  r.checks.push_back({std::move(name), measured <= limit, measured, limit, "<="});
}
inline void at_least(ValidationReport& r, std::string name, double measured, double limit) {
  r.checks.push_back({std::move(name), measured >= limit, measured, limit, ">="});
}

// Largest |slope| over the breakpoint segments of a piecewise-linear waveform.
inline double max_slew(const Waveform& w) {
  double m = 0.0;
  const auto& t = w.times();
  const auto& v = w.values();
  for (std::size_t i = 1; i < t.size(); ++i) m = std::max(m, std::abs(v[i] - v[i - 1]) / (t[i] - t[i - 1]));
  return m;
}

inline double min_value(const Waveform& w) { return *std::min_element(w.values().begin(), w.values().end()); }
inline double max_value(const Waveform& w) { return *std::max_element(w.values().begin(), w.values().end()); }

}  // namespace detail

inline ValidationReport validate(const ProtocolLayout& layout, const ProtocolSchedule& sched,
                                 const HardwareConstraints& hc = {}) {
  ValidationReport r;
  detail::at_most(r, "duration", sched.drive.t_end() - sched.drive.t_begin(), hc.t_max);

  const auto atoms = layout.all();
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      d_min = std::min(d_min, std::hypot(atoms[i].x - atoms[j].x, atoms[i].y - atoms[j].y));
  detail::at_least(r, "min_spacing", d_min, hc.a_min);

  // Ancillas closer than the main spacing would blockade across the gap.
  double d_anc = std::numeric_limits<double>::infinity();
  for (const auto& m : layout.main)
    for (const auto& q : layout.ancilla) d_anc = std::min(d_anc, std::hypot(m.x - q.x, m.y - q.y));
  if (!layout.ancilla.empty()) detail::at_least(r, "ancilla_separation", d_anc, layout.a);

  std::vector<double> ys;
  for (const auto& at : atoms) ys.push_back(at.y);
  std::sort(ys.begin(), ys.end());
  double dy_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ys.size(); ++i) {
    const double d = ys[i] - ys[i - 1];
    if (d > 1e-9) dy_min = std::min(dy_min, d);
  }
  detail::at_least(r, "min_row_spacing", dy_min, hc.a_min_y);

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  for (const auto& at : atoms) {
    x_lo = std::min(x_lo, at.x);
    x_hi = std::max(x_hi, at.x);
    y_lo = std::min(y_lo, at.y);
    y_hi = std::max(y_hi, at.y);
  }
  detail::at_most(r, "footprint_x", std::max(layout.d_x, x_hi - x_lo), hc.fov_x);
  detail::at_most(r, "footprint_y", std::max(layout.d_y, y_hi - y_lo), hc.fov_y);

  const auto& d = sched.drive;
  detail::at_least(r, "omega_min", detail::min_value(d.omega), hc.omega_min);
  detail::at_most(r, "omega_max", detail::max_value(d.omega), hc.omega_max);
  detail::at_most(r, "omega_slew", detail::max_slew(d.omega), hc.omega_slew_max);
  detail::at_least(r, "delta_glob_min", detail::min_value(d.delta_glob), hc.delta_glob_min);
  detail::at_most(r, "delta_glob_max", detail::max_value(d.delta_glob), hc.delta_glob_max);
  detail::at_most(r, "delta_glob_slew", detail::max_slew(d.delta_glob), hc.delta_glob_slew_max);
  if (sched.ancilla_freeze) detail::at_most(r, "ancilla_freeze", std::abs(*sched.ancilla_freeze), hc.ancilla_freeze_max);
  return r;
}

}  // namespace fvd::protocol
