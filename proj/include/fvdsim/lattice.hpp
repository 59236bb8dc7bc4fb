#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvdsim/errors.hpp"
#include "fvdsim/state.hpp"

namespace fvd {

// van der Waals coefficient of the reference hardware, 2pi x 862690 MHz um^6.
inline constexpr double kDefaultC6 = kTwoPi * 862690.0;

enum class GeometryMode { chord, arc };

inline std::string_view to_string(GeometryMode m) { return m == GeometryMode::chord ? "chord" : "arc"; }

inline GeometryMode parse_geometry_mode(std::string_view s) {
  if (s == "chord") return GeometryMode::chord;
  if (s == "arc") return GeometryMode::arc;
  throw InvalidParameter("geometry_mode must be 'chord' or 'arc', got '" + std::string(s) + "'");
}

// Couplings in rad/us, lengths in um.
struct PhysicalParams {
  int n_s = 16;
  double a = 8.13;
  double omega = kTwoPi;
  double delta_glob = 0.0;
  double delta_loc = 0.0;
  double c6 = kDefaultC6;
  GeometryMode geometry_mode = GeometryMode::chord;

  // Build from the dimensionless controls. The blockade radius follows from
  // c6 and omega, and the spacing from rb_over_a; if an explicit spacing is
  // given instead, c6 is chosen to realize rb_over_a at that spacing.
  static PhysicalParams from_ratios(int n_s, double rb_over_a, double alpha, double beta,
                                    double omega = kTwoPi, GeometryMode mode = GeometryMode::chord,
                                    std::optional<double> c6 = std::nullopt,
                                    std::optional<double> a = std::nullopt) {
    if (!(rb_over_a > 0.0)) throw InvalidParameter("rb_over_a must be > 0");
    if (c6 && a) throw InvalidParameter("give at most one of c6 and a");
    PhysicalParams p;
    p.n_s = n_s;
    p.omega = omega;
    p.geometry_mode = mode;
    p.delta_glob = alpha * omega;
    p.delta_loc = beta * p.delta_glob;
    if (a) {
      p.a = *a;
      p.c6 = omega * std::pow(rb_over_a * *a, 6);
    } else {
      p.c6 = c6.value_or(kDefaultC6);
      if (!(omega > 0.0)) throw InvalidParameter("omega must be > 0 to derive the blockade radius");
      p.a = std::pow(p.c6 / omega, 1.0 / 6.0) / rb_over_a;
    }
    p.validate();
    return p;
  }

  void validate() const {
    if (n_s < 2 || n_s % 2 != 0) throw InvalidParameter("n_s must be even and >= 2");
    if (n_s > StateVector::kMaxSites) throw InvalidParameter("n_s exceeds the supported maximum");
    if (!(a > 0.0)) throw InvalidParameter("a must be > 0");
    if (!(omega >= 0.0)) throw InvalidParameter("omega must be >= 0");
    if (!(c6 > 0.0)) throw InvalidParameter("c6 must be > 0");
    if (!std::isfinite(delta_glob) || !std::isfinite(delta_loc))
      throw InvalidParameter("detunings must be finite");
  }

  double blockade_radius() const { return std::pow(c6 / omega, 1.0 / 6.0); }
  double rb_over_a() const { return blockade_radius() / a; }
  double alpha() const { return delta_glob / omega; }
  double beta() const {
    if (delta_glob == 0.0) throw InvalidParameter("beta undefined for delta_glob = 0");
    return delta_loc / delta_glob;
  }
  // Nearest-neighbor interaction; the neighbor distance is a in both modes.
  double v1() const { return c6 / std::pow(a, 6); }
};

struct AtomGeometry {
  std::vector<std::array<double, 2>> positions;
  std::vector<double> distances;  // row-major n x n

  int n_sites() const { return static_cast<int>(positions.size()); }
  // 0-based site indices.
  double distance(int i, int j) const {
    return distances[static_cast<std::size_t>(i) * positions.size() + static_cast<std::size_t>(j)];
  }
};

// Atoms on a ring. Chord mode uses Euclidean distances between points on a
// circle of radius a / (2 sin(pi/n)); arc mode uses the minimal-image lattice
// distance min(|i-j|, n-|i-j|) * a.
inline AtomGeometry ring_positions(int n_s, double a, GeometryMode mode) {
  if (n_s < 2 || n_s % 2 != 0) throw InvalidParameter("n_s must be even and >= 2");
  if (!(a > 0.0)) throw InvalidParameter("a must be > 0");
  const double pi = std::numbers::pi;
  const double radius = a / (2.0 * std::sin(pi / n_s));
  AtomGeometry g;
  g.positions.resize(static_cast<std::size_t>(n_s));
  for (int j = 0; j < n_s; ++j) {
    const double phi = 2.0 * pi * j / n_s;
    g.positions[static_cast<std::size_t>(j)] = {radius * std::cos(phi), radius * std::sin(phi)};
  }
  g.distances.assign(static_cast<std::size_t>(n_s * n_s), 0.0);
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < n_s; ++j) {
      if (i == j) continue;
      const int sep = std::abs(i - j);
      const int steps = std::min(sep, n_s - sep);
      double d;
      if (mode == GeometryMode::arc) {
        d = steps * a;
      } else if (steps == 1) {
        d = a;  // exact, avoids rounding in the blockade ratio
      } else {
        d = 2.0 * radius * std::sin(pi * steps / n_s);
      }
      g.distances[static_cast<std::size_t>(i * n_s + j)] = d;
    }
  }
  return g;
}

inline double pair_potential(double c6, double r) {
  if (!(r > 0.0)) throw InvalidParameter("pair distance must be > 0");
  const double r2 = r * r;
  return c6 / (r2 * r2 * r2);
}

// Staggered sign s_j = (-1)^j for 1-based site j; s_1 = -1.
inline constexpr int stagger(int site) { return site % 2 == 0 ? 1 : -1; }

// One piecewise-linear waveform.
class Waveform {
 public:
  Waveform() = default;
  Waveform(std::vector<double> times, std::vector<double> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() < 2) throw InvalidParameter("waveform needs at least two breakpoints");
    if (times_.size() != values_.size()) throw InvalidParameter("waveform times/values size mismatch");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw InvalidParameter("waveform breakpoints must be strictly increasing");
  }

  static Waveform constant(double t0, double t1, double v) { return Waveform({t0, t1}, {v, v}); }

  double operator()(double t) const {
    if (t < times_.front() || t > times_.back())
      throw ScheduleDomainError("waveform evaluated outside [" + std::to_string(times_.front()) + ", " +
                                std::to_string(times_.back()) + "] at t=" + std::to_string(t));
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return values_.back();
    const auto k = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    return values_[k - 1] + w * (values_[k] - values_[k - 1]);
  }

  std::span<const double> times() const { return times_; }
  std::span<const double> values() const { return values_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

struct DriveValues {
  double omega;
  double delta_glob;
  double delta_loc;
};

// Omega(t), Delta_glob(t) and the staggered-field amplitude Delta_loc(t).
// Each waveform keeps its own breakpoints; the schedule domain is their
// common range.
struct DriveSchedule {
  Waveform omega;
  Waveform delta_glob;
  Waveform delta_loc;

  double t_begin() const { return std::max({omega.t_begin(), delta_glob.t_begin(), delta_loc.t_begin()}); }
  double t_end() const { return std::min({omega.t_end(), delta_glob.t_end(), delta_loc.t_end()}); }

  DriveValues at(double t) const {
    if (t < t_begin() || t > t_end()) throw ScheduleDomainError("schedule evaluated outside its domain");
    return {omega(t), delta_glob(t), delta_loc(t)};
  }

  static DriveSchedule constant(double duration, DriveValues v) {
    if (!(duration > 0.0)) throw InvalidParameter("schedule duration must be > 0");
    return {Waveform::constant(0.0, duration, v.omega), Waveform::constant(0.0, duration, v.delta_glob),
            Waveform::constant(0.0, duration, v.delta_loc)};
  }

  // beta(t) = beta_start - t/tau until beta_stop, at fixed omega and delta_glob.
  static DriveSchedule linear_beta_ramp(double omega, double delta_glob, double beta_start, double beta_stop,
                                        double tau) {
    if (!(tau > 0.0)) throw InvalidParameter("tau must be > 0");
    if (!(beta_start > beta_stop)) throw InvalidParameter("ramp requires beta_start > beta_stop");
    const double t_end = (beta_start - beta_stop) * tau;
    return {Waveform::constant(0.0, t_end, omega), Waveform::constant(0.0, t_end, delta_glob),
            Waveform({0.0, t_end}, {beta_start * delta_glob, beta_stop * delta_glob})};
  }
};

// Matrix-free H = (Omega/2) sum_j X_j + diag. diag[b] holds the detuning and
// interaction energy of basis state b, with diag[0] = 0.
class HamiltonianOperator {
 public:
  HamiltonianOperator(int n_s, std::vector<double> diag, double rabi_amplitude)
      : n_s_(n_s), diag_(std::move(diag)), rabi_(rabi_amplitude) {
    if (diag_.size() != (std::size_t{1} << n_s)) throw InvalidParameter("diagonal size must be 2^n_s");
  }

  int n_sites() const noexcept { return n_s_; }
  std::size_t dim() const noexcept { return diag_.size(); }
  std::span<const double> diag() const noexcept { return diag_; }
  double rabi_amplitude() const noexcept { return rabi_; }

  // out = H in. Each output amplitude is written by exactly one iteration.
  template <typename T>
  void apply(std::span<const T> in, std::span<T> out) const {
    const std::size_t n = diag_.size();
    for (std::size_t b = 0; b < n; ++b) {
      T flips{};
      for (int j = 0; j < n_s_; ++j) flips += in[b ^ (std::size_t{1} << j)];
      out[b] = diag_[b] * in[b] + rabi_ * flips;
    }
  }

  cplx expectation(const StateVector& psi) const {
    std::vector<cplx> h(dim());
    apply<cplx>(psi.amplitudes(), h);
    cplx s{0.0, 0.0};
    const auto a = psi.amplitudes();
    for (std::size_t i = 0; i < h.size(); ++i) s += std::conj(a[i]) * h[i];
    return s;
  }

  double diag_max_abs() const {
    double m = 0.0;
    for (double d : diag_) m = std::max(m, std::abs(d));
    return m;
  }

  // Upper bound on the spectral norm.
  double norm_bound() const { return diag_max_abs() + n_s_ * std::abs(rabi_); }

  HamiltonianOperator scaled(double factor) const {
    std::vector<double> d(diag_);
    for (auto& x : d) x *= factor;
    return HamiltonianOperator(n_s_, std::move(d), rabi_ * factor);
  }

 private:
  int n_s_;
  std::vector<double> diag_;
  double rabi_;
};

// Interaction diagonal and sublattice occupations cached for one geometry;
// building H for new drive values is a single pass over the basis.
class RydbergModel {
 public:
  RydbergModel(const AtomGeometry& geom, double c6) : n_s_(geom.n_sites()) {
    if (n_s_ < 1 || n_s_ > StateVector::kMaxSites) throw InvalidParameter("n_s out of supported range");
    if (!(c6 > 0.0)) throw InvalidParameter("c6 must be > 0");
    const std::size_t dim = std::size_t{1} << n_s_;
    interaction_.assign(dim, 0.0);
    // diag[b] = diag[b without its top bit] + couplings of the top site to the rest.
    for (std::size_t b = 1; b < dim; ++b) {
      const int top = std::bit_width(b) - 1;
      const std::size_t rest = b & ~(std::size_t{1} << top);
      double e = interaction_[rest];
      for (int k = 0; k < top; ++k)
        if (rest & (std::size_t{1} << k)) e += pair_potential(c6, geom.distance(top, k));
      interaction_[b] = e;
    }
    for (int j = 1; j <= n_s_; j += 2) odd_sites_mask_ |= site_bit(j);
    even_sites_mask_ = (dim - 1) & ~odd_sites_mask_;
  }

  int n_sites() const noexcept { return n_s_; }
  std::span<const double> interaction_diagonal() const noexcept { return interaction_; }

  HamiltonianOperator hamiltonian(double omega, double delta_glob, double delta_loc) const {
    const std::size_t dim = interaction_.size();
    std::vector<double> diag(dim);
    for (std::size_t b = 0; b < dim; ++b) {
      const int n_odd = std::popcount(b & odd_sites_mask_);    // s_j = -1
      const int n_even = std::popcount(b & even_sites_mask_);  // s_j = +1
      diag[b] = interaction_[b] - delta_glob * (n_odd + n_even) - delta_loc * (n_even - n_odd);
    }
    return HamiltonianOperator(n_s_, std::move(diag), 0.5 * omega);
  }

  HamiltonianOperator hamiltonian(const DriveValues& v) const {
    return hamiltonian(v.omega, v.delta_glob, v.delta_loc);
  }

 private:
  int n_s_;
  std::vector<double> interaction_;
  std::uint64_t odd_sites_mask_ = 0;
  std::uint64_t even_sites_mask_ = 0;
};

inline HamiltonianOperator build_hamiltonian(const AtomGeometry& geom, double c6, double omega, double delta_glob,
                                             double delta_loc) {
  return RydbergModel(geom, c6).hamiltonian(omega, delta_glob, delta_loc);
}

inline AtomGeometry geometry_of(const PhysicalParams& p) { return ring_positions(p.n_s, p.a, p.geometry_mode); }

inline HamiltonianOperator build_hamiltonian(const PhysicalParams& p) {
  p.validate();
  return build_hamiltonian(geometry_of(p), p.c6, p.omega, p.delta_glob, p.delta_loc);
}

}  // namespace fvd
