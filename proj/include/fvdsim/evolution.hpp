#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fvdsim/errors.hpp"
#include "fvdsim/lattice.hpp"
#include "fvdsim/state.hpp"

namespace fvd {

struct KrylovOptions {
  int krylov_dim = 16;
  // Bound on the estimated local error of each accepted Krylov step.
  double tol = 1e-12;
  long max_steps = 200000;
};

struct KrylovStats {
  long steps = 0;
  double norm_drift = 0.0;  // |1 - ||psi(t)|| | before the final renormalization
};

namespace detail {

// Lanczos basis of one Krylov step plus the eigendecomposition of the
// projected tridiagonal matrix, so exp(-i h T) e1 is cheap for any h.
struct KrylovBasis {
  std::vector<std::vector<cplx>> vectors;
  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;
  double last_beta = 0.0;  // residual coupling beyond the basis, 0 on breakdown

  int size() const { return static_cast<int>(vectors.size()); }

  Eigen::VectorXcd coefficients(double h) const {
    const int m = size();
    Eigen::VectorXcd c(m);
    Eigen::VectorXcd w(m);
    for (int k = 0; k < m; ++k) w(k) = std::exp(cplx(0.0, -h * ritz_values(k))) * ritz_vectors(0, k);
    c = ritz_vectors.cast<cplx>() * w;
    return c;
  }

  // Last-subdiagonal estimate of the truncation error for a step h.
  double error_estimate(double h) const {
    if (last_beta == 0.0) return 0.0;
    return last_beta * std::abs(coefficients(h)(size() - 1));
  }
};

inline void diagonalize(KrylovBasis& kb, const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int m = static_cast<int>(alpha.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
  Eigen::VectorXd e(std::max(m - 1, 0));
  for (int k = 0; k + 1 < m; ++k) e(k) = beta[static_cast<std::size_t>(k)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  kb.ritz_values = es.eigenvalues();
  kb.ritz_vectors = es.eigenvectors();
}

// <x, y> with explicit real arithmetic (avoids the NaN-checking complex multiply).
inline cplx cdot(std::span<const cplx> x, std::span<const cplx> y) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real(), xi = x[i].imag(), yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

// y += c x
inline void caxpy(cplx c, std::span<const cplx> x, std::span<cplx> y) {
  const double cr = c.real(), ci = c.imag();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = {y[i].real() + cr * xr - ci * xi, y[i].imag() + cr * xi + ci * xr};
  }
}

// Grows the Lanczos basis from the unit vector v0, stopping early once a step
// of length h_target meets tol.
inline KrylovBasis build_krylov(const HamiltonianOperator& H, std::span<const cplx> v0, int max_dim,
                                double h_target, double tol) {
  const std::size_t n = v0.size();
  const int m_max = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(max_dim), n));
  const double breakdown = 1e-14 * std::max(H.norm_bound(), 1.0);
  KrylovBasis kb;
  std::vector<double> alpha, beta;
  kb.vectors.emplace_back(v0.begin(), v0.end());
  std::vector<cplx> w(n);
  for (int j = 0; j < m_max; ++j) {
    const auto& vj = kb.vectors.back();
    H.apply<cplx>(vj, w);
    // Three-term recurrence, then one full reorthogonalization pass against
    // the (short) basis.
    if (j > 0) caxpy(-beta.back(), kb.vectors[kb.vectors.size() - 2], w);
    double a = cdot(vj, w).real();
    caxpy(-a, vj, w);
    for (std::size_t k = 0; k < kb.vectors.size(); ++k) {
      const auto proj = cdot(kb.vectors[k], w);
      if (k + 1 == kb.vectors.size()) a += proj.real();
      caxpy(-proj, kb.vectors[k], w);
    }
    alpha.push_back(a);
    double b = 0.0;
    for (const auto& x : w) b += std::norm(x);
    b = std::sqrt(b);
    diagonalize(kb, alpha, beta);
    if (b < breakdown) {
      kb.last_beta = 0.0;
      return kb;
    }
    kb.last_beta = b;
    if (j + 1 == m_max) return kb;
    if (j >= 1 && kb.error_estimate(h_target) <= tol) return kb;
    beta.push_back(b);
    std::vector<cplx> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / b;
    kb.vectors.push_back(std::move(next));
  }
  return kb;
}

// Largest h in (0, h_max] whose error estimate meets tol (bisection in log h).
inline double admissible_step(const KrylovBasis& kb, double h_max, double tol) {
  if (kb.error_estimate(h_max) <= tol) return h_max;
  double lo = h_max, hi = h_max;
  for (int i = 0; i < 200 && kb.error_estimate(lo) > tol; ++i) lo *= 0.5;
  if (kb.error_estimate(lo) > tol) return 0.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (kb.error_estimate(mid) <= tol) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace detail

// exp(-i H t) psi by adaptive Lanczos steps. The output is renormalized when
// the accumulated norm drift is below 1e-8; a larger drift is reported.
inline StateVector evolve_constant(const HamiltonianOperator& H, const StateVector& psi, double t,
                                   const KrylovOptions& opt = {}, KrylovStats* stats = nullptr) {
  if (!(t >= 0.0)) throw InvalidParameter("evolution time must be >= 0");
  if (!(opt.tol > 0.0)) throw InvalidParameter("tolerance must be > 0");
  if (psi.dim() != H.dim()) throw InvalidParameter("state and Hamiltonian sizes differ");
  StateVector out = psi;
  if (t == 0.0) return out;
  auto& amp = out.mutable_amplitudes();
  double remaining = t;
  long steps = 0;
  while (remaining > 0.0) {
    if (++steps > opt.max_steps)
      throw NumericalFailure("Krylov propagation exceeded the maximum number of steps", remaining);
    double nrm = 0.0;
    for (const auto& a : amp) nrm += std::norm(a);
    nrm = std::sqrt(nrm);
    std::vector<cplx> v0(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i) v0[i] = amp[i] / nrm;
    const auto kb = detail::build_krylov(H, v0, opt.krylov_dim, remaining, opt.tol);
    double h = detail::admissible_step(kb, remaining, opt.tol);
    if (!(h > 0.0) || h < remaining * 1e-14)
      throw NumericalFailure("Krylov step size underflow", kb.error_estimate(remaining));
    // Snap to the end to avoid a sliver step from rounding.
    if (remaining - h < 1e-14 * t) h = remaining;
    const Eigen::VectorXcd c = kb.coefficients(h);
    std::fill(amp.begin(), amp.end(), cplx{0.0, 0.0});
    for (int k = 0; k < kb.size(); ++k) detail::caxpy(c(k) * nrm, kb.vectors[static_cast<std::size_t>(k)], amp);
    remaining -= h;
  }
  const double drift = std::abs(out.norm() - 1.0);
  if (stats) *stats = {steps, drift};
  if (drift > 1e-8) throw NumericalFailure("norm drift exceeds 1e-8 during Krylov propagation", drift);
  const double nrm = out.norm();
  for (auto& a : amp) a /= nrm;
  return out;
}

inline StateVector evolve_constant(const HamiltonianOperator& H, const StateVector& psi, double t, double tol) {
  KrylovOptions opt;
  opt.tol = tol;
  return evolve_constant(H, psi, t, opt);
}

// Dense (2^n x 2^n) real-symmetric matrix of H; only for small n_s.
inline Eigen::MatrixXd dense_matrix(const HamiltonianOperator& H, int max_sites = 10) {
  if (H.n_sites() > max_sites)
    throw CapabilityError("dense matrix requested for n_s=" + std::to_string(H.n_sites()) + " > " +
                          std::to_string(max_sites));
  const auto n = static_cast<Eigen::Index>(H.dim());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    M(b, b) = H.diag()[static_cast<std::size_t>(b)];
    for (int j = 0; j < H.n_sites(); ++j) M(b ^ (Eigen::Index{1} << j), b) += H.rabi_amplitude();
  }
  return M;
}

// Reference propagator via full eigendecomposition.
inline StateVector dense_expm_oracle(const HamiltonianOperator& H, const StateVector& psi, double t) {
  if (H.n_sites() > 10) throw CapabilityError("dense_expm_oracle supports n_s <= 10");
  if (psi.dim() != H.dim()) throw InvalidParameter("state and Hamiltonian sizes differ");
  if (t == 0.0) return psi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(H));
  const auto n = static_cast<Eigen::Index>(H.dim());
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = psi[static_cast<std::size_t>(i)];
  const Eigen::MatrixXcd U = es.eigenvectors().cast<cplx>();
  Eigen::VectorXcd c = U.adjoint() * v;
  for (Eigen::Index k = 0; k < n; ++k) c(k) *= std::exp(cplx(0.0, -t * es.eigenvalues()(k)));
  const Eigen::VectorXcd r = U * c;
  return StateVector::from_amplitudes(psi.n_sites(), std::vector<cplx>(r.data(), r.data() + n));
}

// Sampled observables along a run.
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // one row per time, aligned with columns
  std::map<std::string, std::string> metadata;

  std::vector<double> column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidParameter("trajectory has no column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

// Receives each sampled state; returns one value per trajectory column.
using Sampler = std::function<std::vector<double>(double t, const StateVector& psi)>;

// n uniform sample times over [t0, t1] inclusive.
inline std::vector<double> uniform_grid(double t0, double t1, int n) {
  if (n < 2) throw InvalidParameter("sample grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (n - 1);
  g.back() = t1;
  return g;
}

struct ScheduleOptions {
  double dt = 0.005;
  KrylovOptions krylov{};
};

// Piecewise-constant midpoint integration of a time-dependent drive: each
// step [t, t+h] uses H at t + h/2, with h <= dt chosen so steps land on the
// sample times. Samples are taken at every entry of sample_times (which must
// start at t0 and end at t1); the final state is returned through final_state.
inline Trajectory evolve_schedule(const RydbergModel& model, const DriveSchedule& sched, const StateVector& psi,
                                  std::span<const double> sample_times, const std::vector<std::string>& columns,
                                  const Sampler& sampler, const ScheduleOptions& opt = {},
                                  StateVector* final_state = nullptr) {
  if (!(opt.dt > 0.0)) throw InvalidParameter("dt must be > 0");
  if (sample_times.size() < 2) throw InvalidParameter("need at least two sample times");
  for (std::size_t i = 1; i < sample_times.size(); ++i)
    if (!(sample_times[i] > sample_times[i - 1])) throw InvalidParameter("sample times must be strictly increasing");
  if (sample_times.front() < sched.t_begin() || sample_times.back() > sched.t_end())
    throw ScheduleDomainError("requested interval lies outside the schedule domain");
  if (psi.n_sites() != model.n_sites()) throw InvalidParameter("state and model sizes differ");

  Trajectory traj;
  traj.columns = columns;
  StateVector state = psi;
  auto record = [&](double t) {
    auto row = sampler(t, state);
    if (row.size() != columns.size()) throw InvalidParameter("sampler returned wrong number of values");
    traj.times.push_back(t);
    traj.rows.push_back(std::move(row));
  };
  record(sample_times.front());
  for (std::size_t s = 1; s < sample_times.size(); ++s) {
    const double a = sample_times[s - 1];
    const double b = sample_times[s];
    const long n_sub = std::max(1L, static_cast<long>(std::ceil((b - a) / opt.dt - 1e-9)));
    const double h = (b - a) / static_cast<double>(n_sub);
    for (long k = 0; k < n_sub; ++k) {
      const double t_mid = a + (static_cast<double>(k) + 0.5) * h;
      state = evolve_constant(model.hamiltonian(sched.at(t_mid)), state, h, opt.krylov);
    }
    record(b);
  }
  if (final_state) *final_state = std::move(state);
  return traj;
}

}  // namespace fvd
