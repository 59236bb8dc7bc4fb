#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fvdsim/errors.hpp"
#include "fvdsim/state.hpp"

namespace fvd {

// Observable conventions: sigma_z,j = 1 - 2 n_j and site j <-> bit j-1.

enum class Windowing { wrap, open };
enum class BubblePattern { anti_initial, both, literal };

inline std::string_view to_string(Windowing w) { return w == Windowing::wrap ? "wrap" : "open"; }
inline std::string_view to_string(BubblePattern p) {
  switch (p) {
    case BubblePattern::anti_initial: return "anti-initial";
    case BubblePattern::both: return "both";
    case BubblePattern::literal: return "literal";
  }
  return "?";
}

inline Windowing parse_windowing(std::string_view s) {
  if (s == "wrap") return Windowing::wrap;
  if (s == "open") return Windowing::open;
  throw InvalidParameter("windowing must be 'wrap' or 'open'");
}

inline BubblePattern parse_bubble_pattern(std::string_view s) {
  if (s == "anti-initial") return BubblePattern::anti_initial;
  if (s == "both") return BubblePattern::both;
  if (s == "literal") return BubblePattern::literal;
  throw InvalidParameter("pattern must be 'anti-initial', 'both' or 'literal'");
}

struct ObservableRecord {
  std::string name;
  double value = 0.0;
  std::optional<double> time;
  std::string convention;
};

// Expectation of a diagonal (basis-state) function.
template <typename F>
double diagonal_expectation(const StateVector& psi, F&& f) {
  double s = 0.0;
  const auto a = psi.amplitudes();
  for (std::size_t b = 0; b < a.size(); ++b) {
    const double p = std::norm(a[b]);
    if (p != 0.0) s += p * f(static_cast<std::uint64_t>(b));
  }
  return s;
}

// Staggered magnetization of one basis state: (1/n) sum_j (-1)^j (1 - 2 n_j).
inline double neel_of_basis(std::uint64_t b, int n_s) {
  int s = 0;
  for (int j = 1; j <= n_s; ++j) {
    const int sz = (b & site_bit(j)) ? -1 : 1;
    s += (j % 2 == 0 ? 1 : -1) * sz;
  }
  return static_cast<double>(s) / n_s;
}

inline double neel_op(const StateVector& psi) {
  const int n = psi.n_sites();
  // Closed form: (1/n)[sum_j (-1)^j - 2 sum_j (-1)^j n_j]; sum_j (-1)^j = 0 for even n.
  std::uint64_t odd = 0;
  for (int j = 1; j <= n; j += 2) odd |= site_bit(j);
  const std::uint64_t even = ((std::uint64_t{1} << n) - 1) & ~odd;
  const double base = (n % 2 == 0) ? 0.0 : -1.0;
  return diagonal_expectation(psi, [&](std::uint64_t b) {
    const int n_odd = std::popcount(b & odd);
    const int n_even = std::popcount(b & even);
    return (base - 2.0 * (n_even - n_odd)) / n;
  });
}

// Occupation pattern of a k-bubble window over k+2 sites, starting from an
// excited site: n n (alternating ...) with the last two sites equal.
// k=1 -> n n n, k=2 -> n n g g, k=3 -> n n g n n.
inline std::vector<int> bubble_window_pattern(int k) {
  std::vector<int> p(static_cast<std::size_t>(k + 2));
  p[0] = 1;
  for (int i = 2; i <= k + 1; ++i) p[static_cast<std::size_t>(i - 1)] = (i % 2 == 0) ? 1 : 0;
  p[static_cast<std::size_t>(k + 1)] = p[static_cast<std::size_t>(k)];
  return p;
}

// Fraction of windows matching a k-bubble (either type) in basis state b.
inline double bubble_window_fraction(std::uint64_t b, int n_s, int k, Windowing windowing) {
  const auto pat = bubble_window_pattern(k);
  const int len = k + 2;
  const int n_windows = windowing == Windowing::wrap ? n_s : n_s - k - 1;
  int hits = 0;
  for (int start = 0; start < n_windows; ++start) {
    bool direct = true, reversed = true;
    for (int i = 0; i < len && (direct || reversed); ++i) {
      const int site = (start + i) % n_s;  // 0-based; open windows never wrap
      const int occ = (b >> site) & 1U;
      if (occ != pat[static_cast<std::size_t>(i)]) direct = false;
      if (occ == pat[static_cast<std::size_t>(i)]) reversed = false;
    }
    hits += (direct ? 1 : 0) + (reversed ? 1 : 0);
  }
  return static_cast<double>(hits) / n_windows;
}

inline double bubble_density(const StateVector& psi, int k, Windowing windowing = Windowing::wrap,
                             BubblePattern pattern = BubblePattern::anti_initial) {
  const int n = psi.n_sites();
  if (k < 1 || k > n) throw InvalidParameter("bubble size k must satisfy 1 <= k <= n_s");
  if (k == n) {
    const auto initial = z2_initial_index(n);
    const auto opposite = z2_opposite_index(n);
    const double p_init = std::norm(psi[initial]);
    const double p_opp = std::norm(psi[opposite]);
    switch (pattern) {
      case BubblePattern::anti_initial: return p_opp;
      case BubblePattern::literal: return p_init;
      case BubblePattern::both: return 0.5 * (p_init + p_opp);
    }
  }
  if (windowing == Windowing::open && n - k - 1 < 1)
    throw InvalidParameter("open windowing has no windows for this k");
  return diagonal_expectation(psi, [&](std::uint64_t b) { return bubble_window_fraction(b, n, k, windowing); });
}

// Connected (default) or disconnected sigma_z two-point correlator, n x n row-major.
inline std::vector<double> tpcf(const StateVector& psi, bool connected = true) {
  const int n = psi.n_sites();
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  std::vector<double> corr(static_cast<std::size_t>(n * n), 0.0);
  const auto a = psi.amplitudes();
  std::vector<int> sz(static_cast<std::size_t>(n));
  for (std::size_t b = 0; b < a.size(); ++b) {
    const double p = std::norm(a[b]);
    if (p == 0.0) continue;
    for (int j = 0; j < n; ++j) sz[static_cast<std::size_t>(j)] = ((b >> j) & 1U) ? -1 : 1;
    for (int i = 0; i < n; ++i) {
      mean[static_cast<std::size_t>(i)] += p * sz[static_cast<std::size_t>(i)];
      for (int j = i; j < n; ++j)
        corr[static_cast<std::size_t>(i * n + j)] += p * sz[static_cast<std::size_t>(i)] * sz[static_cast<std::size_t>(j)];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double g = corr[static_cast<std::size_t>(i * n + j)];
      if (connected) g -= mean[static_cast<std::size_t>(i)] * mean[static_cast<std::size_t>(j)];
      corr[static_cast<std::size_t>(i * n + j)] = g;
      corr[static_cast<std::size_t>(j * n + i)] = g;
    }
  }
  return corr;
}

// Pair-averaged staggered sum (1/n_pairs) sum_{i<j} (-1)^{i+j} g_ij.
inline double tpcf_neel(const std::vector<double>& g) {
  const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(g.size()))));
  if (static_cast<std::size_t>(n * n) != g.size() || n < 2) throw InvalidParameter("TPCF matrix must be square, n >= 2");
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s += (((i + j) % 2 == 0) ? 1.0 : -1.0) * g[static_cast<std::size_t>(i * n + j)];
  return s / (n * (n - 1) / 2.0);
}

inline double fidelity(const StateVector& psi, const StateVector& phi) {
  if (psi.dim() != phi.dim()) throw InvalidParameter("fidelity of states with different n_s");
  return std::norm(inner(phi, psi));
}

// |<b|psi>|^2 for a basis state b.
inline double basis_fidelity(const StateVector& psi, std::uint64_t b) { return std::norm(psi[b]); }

}  // namespace fvd
