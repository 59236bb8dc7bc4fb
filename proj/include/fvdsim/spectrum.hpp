#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fvdsim/errors.hpp"
#include "fvdsim/lattice.hpp"
#include "fvdsim/observables.hpp"
#include "fvdsim/parallel.hpp"
#include "fvdsim/state.hpp"

namespace fvd {

struct EigenResult {
  std::vector<double> eigenvalues;        // ascending
  std::vector<StateVector> eigenvectors;  // real amplitudes, phase-fixed
  std::vector<double> residuals;          // ||H v - E v||
};

struct LanczosOptions {
  int basis_size = 64;  // vectors kept before a thick restart
  int max_restarts = 400;
  // Convergence when ||H v - E v|| <= rel_tol * ||H||.
  double rel_tol = 1e-10;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

using RealVec = std::vector<double>;

inline double dot(const RealVec& a, const RealVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const RealVec& a) { return std::sqrt(dot(a, a)); }

// Two passes of classical Gram-Schmidt of w against the columns of basis and
// locked. Returns the coefficients against basis.
inline std::vector<double> orthogonalize(RealVec& w, const std::vector<RealVec>& basis,
                                         const std::vector<RealVec>& locked) {
  std::vector<double> coef(basis.size(), 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : locked) {
      const double c = dot(q, w);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
    }
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double c = dot(basis[k], w);
      coef[k] += c;
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * basis[k][i];
    }
  }
  return coef;
}

inline RealVec random_unit(std::size_t n, std::mt19937_64& rng, const std::vector<RealVec>& basis,
                           const std::vector<RealVec>& locked) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    RealVec v(n);
    for (auto& x : v) x = g(rng);
    orthogonalize(v, basis, locked);
    const double nv = norm2(v);
    if (nv > 1e-8) {
      for (auto& x : v) x /= nv;
      return v;
    }
  }
  return {};
}

struct RitzSet {
  std::vector<double> values;
  std::vector<RealVec> vectors;
  std::vector<double> residuals;
};

// Thick-restart Lanczos (full reorthogonalization) for the `want` lowest
// eigenpairs of H restricted to the complement of `locked`.
inline RitzSet thick_restart_lanczos(const HamiltonianOperator& H, int want, const std::vector<RealVec>& locked,
                                     const LanczosOptions& opt, std::mt19937_64& rng) {
  const std::size_t n = H.dim();
  const std::size_t free_dim = n - locked.size();
  const double hnorm = std::max(H.norm_bound(), 1e-300);
  const double tol = opt.rel_tol * hnorm;
  const int m_max = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.basis_size, 2 * want + 8)), free_dim));
  const int keep = std::max(1, std::min(m_max - 2, want + std::max(4, m_max / 4)));

  std::vector<RealVec> basis;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m_max, m_max);
  {
    auto v = random_unit(n, rng, basis, locked);
    if (v.empty()) throw NumericalFailure("could not build a Lanczos start vector", 0.0);
    basis.push_back(std::move(v));
  }
  RealVec w(n);
  double worst = 0.0;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    // Extend the basis to m_max columns; G(i, j) = <v_i, H v_j>.
    while (static_cast<int>(basis.size()) <= m_max) {
      const int j = static_cast<int>(basis.size()) - 1;
      H.apply<double>(basis[static_cast<std::size_t>(j)], w);
      const auto coef = orthogonalize(w, basis, locked);
      for (int i = 0; i <= j; ++i) {
        G(i, j) = coef[static_cast<std::size_t>(i)];
        G(j, i) = coef[static_cast<std::size_t>(i)];
      }
      if (static_cast<int>(basis.size()) == m_max) break;
      const double b = norm2(w);
      if (b < 1e-12 * hnorm) {
        // Invariant subspace: continue with a fresh direction (also picks up
        // degenerate partners the start vector missed).
        auto v = random_unit(n, rng, basis, locked);
        if (v.empty()) break;
        basis.push_back(std::move(v));
      } else {
        for (auto& x : w) x /= b;
        basis.push_back(w);
      }
    }
    const int m = static_cast<int>(basis.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.topLeftCorner(m, m));
    const int n_ritz = std::min(keep, m);
    RitzSet rs;
    for (int k = 0; k < n_ritz; ++k) {
      RealVec y(n, 0.0);
      for (int i = 0; i < m; ++i) {
        const double c = es.eigenvectors()(i, k);
        const auto& vi = basis[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < n; ++r) y[r] += c * vi[r];
      }
      const double ny = norm2(y);
      for (auto& x : y) x /= ny;
      rs.values.push_back(es.eigenvalues()(k));
      rs.vectors.push_back(std::move(y));
    }
    // True residuals of the wanted pairs.
    bool converged = true;
    worst = 0.0;
    const int n_check = std::min(want, n_ritz);
    for (int k = 0; k < n_check; ++k) {
      H.apply<double>(rs.vectors[static_cast<std::size_t>(k)], w);
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = w[i] - rs.values[static_cast<std::size_t>(k)] * rs.vectors[static_cast<std::size_t>(k)][i];
        r += d * d;
      }
      r = std::sqrt(r);
      rs.residuals.push_back(r);
      worst = std::max(worst, r);
      if (r > tol) converged = false;
    }
    if (converged || m == static_cast<int>(free_dim)) {
      rs.values.resize(static_cast<std::size_t>(n_check));
      rs.vectors.resize(static_cast<std::size_t>(n_check));
      return rs;
    }
    // Thick restart: keep the lowest Ritz vectors plus the residual direction.
    const int m_keep = std::min(keep, m - 1);
    // Continuation direction of the Krylov relation: (I - V V^T) H v_last.
    RealVec residual(n);
    H.apply<double>(basis.back(), residual);
    orthogonalize(residual, basis, locked);
    std::vector<RealVec> new_basis(rs.vectors.begin(), rs.vectors.begin() + m_keep);
    G.setZero();
    for (int k = 0; k < m_keep; ++k) G(k, k) = rs.values[static_cast<std::size_t>(k)];
    for (std::size_t k = 0; k < new_basis.size(); ++k) {
      auto& y = new_basis[k];
      for (std::size_t q = 0; q < k; ++q) {
        const double c = dot(new_basis[q], y);
        for (std::size_t i = 0; i < n; ++i) y[i] -= c * new_basis[q][i];
      }
      const double nk = norm2(new_basis[k]);
      for (auto& x : new_basis[k]) x /= nk;
    }
    orthogonalize(residual, new_basis, locked);
    double nr = norm2(residual);
    if (nr < 1e-12 * hnorm) {
      residual = random_unit(n, rng, new_basis, locked);
      if (residual.empty()) break;
      nr = 1.0;
    }
    for (auto& x : residual) x /= nr;
    // The coupling row G(k, m_keep) is recomputed when the new vector is applied.
    new_basis.push_back(std::move(residual));
    basis = std::move(new_basis);
  }
  throw NumericalFailure("Lanczos eigensolver did not converge", worst);
}

}  // namespace detail

// Lowest k eigenpairs of the (real symmetric) Hamiltonian. A final deflated
// pass searches the orthogonal complement of the converged set to recover
// degenerate partners a single Krylov sequence cannot see.
inline EigenResult lowest_eigenpairs(const HamiltonianOperator& H, int k, const LanczosOptions& opt = {}) {
  if (k < 1 || k > 8) throw InvalidParameter("lowest_eigenpairs supports 1 <= k <= 8");
  const std::size_t n = H.dim();
  if (static_cast<std::size_t>(k) > n) throw InvalidParameter("k exceeds the Hilbert-space dimension");
  std::mt19937_64 rng(opt.seed);
  const double hnorm = std::max(H.norm_bound(), 1e-300);

  std::vector<double> values;
  std::vector<detail::RealVec> vectors;
  std::vector<double> residuals;

  {
    auto rs = detail::thick_restart_lanczos(H, k, {}, opt, rng);
    values = rs.values;
    vectors = rs.vectors;
    // Deflated verification: any eigenvalue below the current k-th that was
    // missed must show up as the lowest Ritz value in the complement.
    for (int round = 0; round < k; ++round) {
      if (vectors.size() >= n) break;
      auto extra = detail::thick_restart_lanczos(H, 1, vectors, opt, rng);
      const double cluster = 1e-10 * hnorm + opt.rel_tol * hnorm;
      if (extra.values.front() < values.back() - cluster) {
        values.push_back(extra.values.front());
        vectors.push_back(std::move(extra.vectors.front()));
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<double> v2;
        std::vector<detail::RealVec> x2;
        for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
          v2.push_back(values[order[i]]);
          x2.push_back(std::move(vectors[order[i]]));
        }
        values = std::move(v2);
        vectors = std::move(x2);
      } else {
        break;
      }
    }
  }

  // Phase convention: largest-magnitude amplitude real positive.
  for (auto& v : vectors) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > std::abs(v[imax]) + 1e-12) imax = i;
    if (v[imax] < 0.0)
      for (auto& x : v) x = -x;
  }
  // Within an exactly degenerate cluster order by overlap with |1010...>.
  const auto z2 = z2_initial_index(H.n_sites());
  const double cluster_tol = 1e-9 * hnorm;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i + 1;
    while (j < values.size() && values[j] - values[i] <= cluster_tol) ++j;
    std::stable_sort(vectors.begin() + static_cast<long>(i), vectors.begin() + static_cast<long>(j),
                     [&](const auto& a, const auto& b) { return std::abs(a[z2]) > std::abs(b[z2]); });
    i = j;
  }

  EigenResult out;
  detail::RealVec w(n);
  for (std::size_t i = 0; i < values.size(); ++i) {
    H.apply<double>(vectors[i], w);
    double r = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double d = w[q] - values[i] * vectors[i][q];
      r += d * d;
    }
    out.residuals.push_back(std::sqrt(r));
    out.eigenvalues.push_back(values[i]);
    std::vector<cplx> amps(vectors[i].begin(), vectors[i].end());
    out.eigenvectors.push_back(StateVector::from_amplitudes(H.n_sites(), std::move(amps)));
  }
  return out;
}

// E2 - E0 of the zero-confinement Hamiltonian (delta_loc forced to 0).
inline double gap_E20(PhysicalParams p, const LanczosOptions& opt = {}) {
  p.delta_loc = 0.0;
  const auto res = lowest_eigenpairs(build_hamiltonian(p), 3, opt);
  return std::max(0.0, res.eigenvalues[2] - res.eigenvalues[0]);
}

// Connected TPCF of the translation average of |psi|^2 over the ring. At
// beta = 0 the ring Hamiltonian is translation invariant; averaging removes
// the arbitrary mixing of a quasi-degenerate ground pair.
inline std::vector<double> tpcf_translation_averaged(const StateVector& psi) {
  const auto g_raw = tpcf(psi, false);
  const int n = psi.n_sites();
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < n; ++d) c[static_cast<std::size_t>(d)] += g_raw[static_cast<std::size_t>(i * n + (i + d) % n)] / n;
  double m = 0.0;
  for (int j = 1; j <= n; ++j)
    m += diagonal_expectation(psi, [&](std::uint64_t b) { return (b & site_bit(j)) ? -1.0 : 1.0; }) / n;
  std::vector<double> g(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(i * n + j)] = c[static_cast<std::size_t>(((j - i) % n + n) % n)] - m * m;
  return g;
}

struct PhaseGridSpec {
  int n_s = 16;
  std::vector<double> alphas;       // Delta_glob / Omega
  std::vector<double> rb_over_as;
  double omega = kTwoPi;
  GeometryMode geometry_mode = GeometryMode::chord;
  std::optional<double> c6;
  int threads = 1;
  LanczosOptions lanczos{};
};

struct BoundaryPoint {
  double alpha = 0.0;
  double rb_over_a = 0.0;
};

struct PhaseGrid {
  std::vector<double> alphas;
  std::vector<double> rb_over_as;
  std::vector<double> values;  // row-major: values[r * alphas.size() + a]; NaN where invalid
  std::vector<bool> valid;
  std::vector<std::string> errors;  // per point, empty when valid
  std::vector<BoundaryPoint> boundary;

  double at(std::size_t r, std::size_t a) const { return values[r * alphas.size() + a]; }
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw InvalidParameter("linspace needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

// Boundary estimates along each constant-R_b/a row: sign changes of the
// central second difference, linearly interpolated. Rows shorter than 5 or
// containing invalid points are skipped (reported through warnings). At most
// two crossings per row are kept, those with the largest |first difference|.
inline std::vector<BoundaryPoint> phase_boundary_points(const PhaseGrid& grid, std::vector<std::string>* warnings = nullptr) {
  const auto& x = grid.alphas;
  const std::size_t n = x.size();
  if (n >= 3) {
    const double h = x[1] - x[0];
    for (std::size_t i = 2; i < n; ++i)
      if (std::abs((x[i] - x[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
        throw InvalidParameter("phase boundary extraction requires a uniform alpha grid");
  }
  std::vector<BoundaryPoint> out;
  for (std::size_t r = 0; r < grid.rb_over_as.size(); ++r) {
    const double rb = grid.rb_over_as[r];
    if (n < 5) {
      if (warnings) warnings->push_back("row R_b/a=" + std::to_string(rb) + " skipped: fewer than 5 points");
      continue;
    }
    std::vector<double> y(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = grid.at(r, i);
      if (!grid.valid.empty() && !grid.valid[r * n + i]) ok = false;
      if (!std::isfinite(y[i])) ok = false;
    }
    if (!ok) {
      if (warnings) warnings->push_back("row R_b/a=" + std::to_string(rb) + " skipped: contains invalid points");
      continue;
    }
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v - y[0]));
    const double eps = 1e-9 * std::max(scale, 1e-300);
    // d2[i] belongs to x[i + 1].
    std::vector<double> d2(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double v = y[i + 1] - 2.0 * y[i] + y[i - 1];
      d2[i - 1] = std::abs(v) <= eps ? 0.0 : v;
    }
    struct Crossing {
      double x;
      double slope;
    };
    std::vector<Crossing> cs;
    std::size_t last = d2.size();
    for (std::size_t i = 0; i < d2.size(); ++i) {
      if (d2[i] == 0.0) continue;
      if (last != d2.size() && (d2[last] > 0.0) != (d2[i] > 0.0)) {
        const double xa = x[last + 1], xb = x[i + 1];
        const double xc = xa + (xb - xa) * d2[last] / (d2[last] - d2[i]);
        // Local slope from the nearest centred first difference.
        const auto k = static_cast<std::size_t>(std::clamp<long>(std::lround((xc - x[0]) / (x[1] - x[0])), 1, static_cast<long>(n) - 2));
        cs.push_back({xc, std::abs(y[k + 1] - y[k - 1])});
      }
      last = i;
    }
    std::stable_sort(cs.begin(), cs.end(), [](const auto& p, const auto& q) { return p.slope > q.slope; });
    if (cs.size() > 2) cs.resize(2);
    std::sort(cs.begin(), cs.end(), [](const auto& p, const auto& q) { return p.x < q.x; });
    for (const auto& c : cs) out.push_back({c.x, rb});
  }
  return out;
}

// Ground state at beta = 0 on every (alpha, R_b/a) point, summarized by the
// TPCF-Neel scalar. Points run in parallel; per-point failures are recorded.
inline PhaseGrid ground_phase_diagram(const PhaseGridSpec& spec, std::vector<std::string>* warnings = nullptr) {
  if (spec.alphas.empty() || spec.rb_over_as.empty()) throw InvalidParameter("phase grid axes must be nonempty");
  for (double a : spec.alphas)
    if (a < 0.0 || a > 6.0) throw InvalidParameter("phase grid alpha must lie in [0, 6]");
  for (double r : spec.rb_over_as)
    if (r < 1.0 || r > 2.0) throw InvalidParameter("phase grid R_b/a must lie in [1, 2]");
  PhaseGrid g;
  g.alphas = spec.alphas;
  g.rb_over_as = spec.rb_over_as;
  const std::size_t na = spec.alphas.size();
  const std::size_t n_pts = na * spec.rb_over_as.size();
  auto results = parallel_map<double>(n_pts, spec.threads, [&](std::size_t idx) {
    const double rb = spec.rb_over_as[idx / na];
    const double alpha = spec.alphas[idx % na];
    const auto p = PhysicalParams::from_ratios(spec.n_s, rb, alpha, 0.0, spec.omega, spec.geometry_mode, spec.c6);
    const auto res = lowest_eigenpairs(build_hamiltonian(p), 1, spec.lanczos);
    return tpcf_neel(tpcf_translation_averaged(res.eigenvectors.front()));
  });
  for (auto& r : results) {
    g.valid.push_back(r.ok());
    g.values.push_back(r.ok() ? *r.value : std::numeric_limits<double>::quiet_NaN());
    g.errors.push_back(r.error);
  }
  if (na >= 5) g.boundary = phase_boundary_points(g, warnings);
  else if (warnings) warnings->push_back("boundary extraction skipped: fewer than 5 alpha points");
  return g;
}

}  // namespace fvd
