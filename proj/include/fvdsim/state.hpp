#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fvdsim/errors.hpp"

namespace fvd {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Site j (1-based) lives in bit j-1 of the basis index; bit value 1 is the
// Rydberg state.
inline constexpr std::uint64_t site_bit(int site) { return std::uint64_t{1} << (site - 1); }

// |1010...10>: odd sites excited (bits 0, 2, 4, ...).
inline std::uint64_t z2_initial_index(int n_s) {
  std::uint64_t b = 0;
  for (int j = 1; j <= n_s; j += 2) b |= site_bit(j);
  return b;
}

// |0101...01>: even sites excited.
inline std::uint64_t z2_opposite_index(int n_s) {
  std::uint64_t b = 0;
  for (int j = 2; j <= n_s; j += 2) b |= site_bit(j);
  return b;
}

// Bitstring with site 1 first, e.g. "1010" for z2_initial_index(4).
inline std::string basis_label(std::uint64_t b, int n_s) {
  std::string s(static_cast<std::size_t>(n_s), '0');
  for (int j = 1; j <= n_s; ++j)
    if (b & site_bit(j)) s[static_cast<std::size_t>(j - 1)] = '1';
  return s;
}

inline std::uint64_t parse_basis_label(const std::string& s) {
  std::uint64_t b = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') b |= site_bit(static_cast<int>(i) + 1);
    else if (s[i] != '0') throw InvalidParameter("basis label must contain only 0/1: " + s);
  }
  return b;
}

// Normalized 2^n_s amplitude vector.
class StateVector {
 public:
  static constexpr int kMaxSites = 26;

  StateVector() = default;

  static StateVector basis(int n_s, std::uint64_t index) {
    StateVector s(n_s);
    if (index >= s.dim()) throw InvalidParameter("basis index out of range");
    s.amp_[index] = 1.0;
    return s;
  }

  // Takes ownership of amplitudes and rescales them to unit norm.
  static StateVector from_amplitudes(int n_s, std::vector<cplx> amps) {
    StateVector s(n_s);
    if (amps.size() != s.dim()) throw InvalidParameter("amplitude count does not match 2^n_s");
    s.amp_ = std::move(amps);
    const double nrm = s.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InvalidParameter("state has zero or non-finite norm");
    for (auto& a : s.amp_) a /= nrm;
    return s;
  }

  static StateVector random(int n_s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> amps(std::size_t{1} << n_s);
    for (auto& a : amps) a = {g(rng), g(rng)};
    return from_amplitudes(n_s, std::move(amps));
  }

  int n_sites() const noexcept { return n_s_; }
  std::size_t dim() const noexcept { return amp_.size(); }
  std::span<const cplx> amplitudes() const noexcept { return amp_; }
  const cplx& operator[](std::size_t i) const { return amp_[i]; }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  // Used by the propagators, which maintain the normalization contract.
  std::vector<cplx>& mutable_amplitudes() noexcept { return amp_; }

 private:
  explicit StateVector(int n_s) : n_s_(n_s) {
    if (n_s < 1 || n_s > kMaxSites) throw InvalidParameter("n_s out of supported range");
    amp_.assign(std::size_t{1} << n_s, cplx{0.0, 0.0});
  }

  int n_s_ = 0;
  std::vector<cplx> amp_;
};

inline cplx inner(const StateVector& bra, const StateVector& ket) {
  if (bra.dim() != ket.dim()) throw InvalidParameter("inner product of states with different n_s");
  cplx s{0.0, 0.0};
  const auto a = bra.amplitudes();
  const auto b = ket.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace fvd
