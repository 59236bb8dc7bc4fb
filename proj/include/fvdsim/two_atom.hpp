#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "fvdsim/errors.hpp"
#include "fvdsim/state.hpp"

namespace fvd::two_atom {

// Blockade-restricted two-atom model in the basis (|00>, |01>, |10>), shifted
// by +Delta_glob so that |00> sits at Delta_glob and |01>, |10> at -/+Delta_loc.
enum Level : int { k00 = 0, k01 = 1, k10 = 2 };

struct RestrictedState {
  std::array<cplx, 3> c{cplx{0.0}, cplx{0.0}, cplx{1.0}};  // |10>

  double norm() const { return std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2])); }
  double population(Level l) const { return std::norm(c[static_cast<std::size_t>(l)]); }
};

struct RampParams {
  double omega = 1.0;
  double delta_glob = 2.0;
  double beta_start = 2.0;
  double beta_stop = -2.0;
  double tau = 8.0;

  double delta_loc(double t) const { return (beta_start - t / tau) * delta_glob; }
  double t_end() const { return (beta_start - beta_stop) * tau; }
};

inline Eigen::Matrix3d restricted_hamiltonian(double omega, double delta_glob, double delta_loc) {
  Eigen::Matrix3d h;
  const double r = 0.5 * omega;
  h << delta_glob, r, r,
       r, -delta_loc, 0.0,
       r, 0.0, delta_loc;
  return h;
}

struct Eigensystem {
  Eigen::Vector3d values;   // ascending
  Eigen::Matrix3d vectors;  // columns, phase-fixed
};

// Eigenvectors with the |00> component made real non-negative (|01> if the
// |00> component vanishes).
inline Eigensystem eigensystem(const Eigen::Matrix3d& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  Eigensystem out{es.eigenvalues(), es.eigenvectors()};
  for (int k = 0; k < 3; ++k) {
    auto col = out.vectors.col(k);
    const double pivot = std::abs(col(k00)) > 1e-12 ? col(k00) : col(k01);
    if (pivot < 0.0) col = -col;
  }
  return out;
}

// Landau-Zener crossing times (beta_start - 1) tau, beta_start tau, (beta_start + 1) tau.
inline std::tuple<double, double, double> lz_crossing_times(double beta_start, double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("tau must be > 0");
  return {(beta_start - 1.0) * tau, beta_start * tau, (beta_start + 1.0) * tau};
}

struct EigenCurves {
  std::vector<double> times;
  std::vector<std::array<double, 3>> energies;  // E1 <= E2 <= E3 at each time
};

// Instantaneous eigenvalues along the ramp. Curves are labelled by ascending
// order; with Omega > 0 the levels never cross, so this is also the
// continuous labelling.
inline EigenCurves eigenvalues_vs_time(const RampParams& p, const std::vector<double>& grid) {
  EigenCurves ec;
  for (double t : grid) {
    if (t < 0.0 || t > p.t_end() + 1e-12) throw InvalidParameter("time grid outside the ramp domain");
    const auto es = eigensystem(restricted_hamiltonian(p.omega, p.delta_glob, p.delta_loc(t)));
    ec.times.push_back(t);
    ec.energies.push_back({es.values(0), es.values(1), es.values(2)});
  }
  return ec;
}

// exp(-i h dt) for a real symmetric 3x3 h.
inline Eigen::Matrix3cd propagator(const Eigen::Matrix3d& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  Eigen::Vector3cd ph;
  for (int k = 0; k < 3; ++k) ph(k) = std::exp(cplx(0.0, -dt * es.eigenvalues()(k)));
  const Eigen::Matrix3cd v = es.eigenvectors().cast<cplx>();
  return v * ph.asDiagonal() * v.adjoint();
}

struct Sample {
  double t;
  std::array<double, 3> energies;
  double p00, p01, p10;
  double p_phi3;  // |<phi_3(t)|psi(t)>|^2 with the instantaneous top level
  RestrictedState state;
};

inline double overlap_top_level(const RampParams& p, double t, const RestrictedState& s) {
  const auto es = eigensystem(restricted_hamiltonian(p.omega, p.delta_glob, p.delta_loc(t)));
  cplx ov{0.0, 0.0};
  for (int i = 0; i < 3; ++i) ov += es.vectors(i, 2) * s.c[static_cast<std::size_t>(i)];
  return std::norm(ov);
}

// Midpoint piecewise-constant integration from |10> at t = 0 to t_end,
// sampled on n_samples uniform times.
inline std::vector<Sample> evolve_two_atom(const RampParams& p, double t_end, double dt, int n_samples,
                                           RestrictedState initial = {}) {
  if (!(t_end > 0.0) || t_end > p.t_end() + 1e-12) throw InvalidParameter("t_end outside the ramp domain");
  if (!(dt > 0.0)) throw InvalidParameter("dt must be > 0");
  if (n_samples < 2) throw InvalidParameter("need at least two samples");
  std::vector<Sample> out;
  RestrictedState s = initial;
  auto record = [&](double t) {
    const auto es = eigensystem(restricted_hamiltonian(p.omega, p.delta_glob, p.delta_loc(t)));
    cplx ov{0.0, 0.0};
    for (int i = 0; i < 3; ++i) ov += es.vectors(i, 2) * s.c[static_cast<std::size_t>(i)];
    out.push_back({t, {es.values(0), es.values(1), es.values(2)}, s.population(k00), s.population(k01),
                   s.population(k10), std::norm(ov), s});
  };
  record(0.0);
  for (int i = 1; i < n_samples; ++i) {
    const double a = t_end * (i - 1) / (n_samples - 1);
    const double b = (i == n_samples - 1) ? t_end : t_end * i / (n_samples - 1);
    const long n_sub = std::max(1L, static_cast<long>(std::ceil((b - a) / dt - 1e-9)));
    const double h = (b - a) / static_cast<double>(n_sub);
    for (long k = 0; k < n_sub; ++k) {
      const double tm = a + (static_cast<double>(k) + 0.5) * h;
      const auto u = propagator(restricted_hamiltonian(p.omega, p.delta_glob, p.delta_loc(tm)), h);
      Eigen::Vector3cd v(s.c[0], s.c[1], s.c[2]);
      v = u * v;
      s.c = {v(0), v(1), v(2)};
    }
    const double drift = std::abs(s.norm() - 1.0);
    if (drift > 1e-10) throw NumericalFailure("two-atom propagation lost normalization", drift);
    record(b);
  }
  return out;
}

// Default step: tau/400 clamped to 0.005.
inline double default_dt(double tau) { return std::min(tau / 400.0, 0.005); }

}  // namespace fvd::two_atom
