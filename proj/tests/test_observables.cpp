#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fvdsim/observables.hpp"
#include "oracles.hpp"

using namespace fvd;

TEST(Neel, ProductStatesAndComplementAntisymmetry) {
  const int n = 8;
  EXPECT_DOUBLE_EQ(neel_op(StateVector::basis(n, z2_initial_index(n))), 1.0);
  EXPECT_DOUBLE_EQ(neel_op(StateVector::basis(n, z2_opposite_index(n))), -1.0);
  EXPECT_DOUBLE_EQ(neel_op(StateVector::basis(n, 0)), 0.0);
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t b = 0; b <= mask; ++b) {
    const double v = neel_op(StateVector::basis(n, b));
    EXPECT_DOUBLE_EQ(neel_op(StateVector::basis(n, b ^ mask)), -v);
    EXPECT_DOUBLE_EQ(v, neel_of_basis(b, n));
    EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(Neel, MatchesSigmaZSumOracle) {
  const auto psi = StateVector::random(6, 8);
  double ref = 0.0;
  for (std::size_t b = 0; b < psi.dim(); ++b) {
    double s = 0.0;
    for (int j = 1; j <= 6; ++j) s += ((j % 2 == 0) ? 1.0 : -1.0) * (((b >> (j - 1)) & 1) ? -1.0 : 1.0);
    ref += std::norm(psi[b]) * s / 6.0;
  }
  EXPECT_NEAR(neel_op(psi), ref, 1e-14);
}

TEST(BubbleWindows, PatternShapes) {
  EXPECT_EQ(bubble_window_pattern(1), (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(bubble_window_pattern(2), (std::vector<int>{1, 1, 0, 0}));
  EXPECT_EQ(bubble_window_pattern(3), (std::vector<int>{1, 1, 0, 1, 1}));
}

TEST(BubbleWindows, ExhaustiveOracleBothWindowings) {
  for (int n : {6, 8}) {
    const std::uint64_t dim = std::uint64_t{1} << n;
    for (int k = 1; k <= n - 2; ++k) {
      for (std::uint64_t b = 0; b < dim; ++b) {
        EXPECT_DOUBLE_EQ(bubble_density(StateVector::basis(n, b), k, Windowing::wrap),
                         oracle::bubble_fraction(b, n, k, true));
        EXPECT_DOUBLE_EQ(bubble_density(StateVector::basis(n, b), k, Windowing::open),
                         oracle::bubble_fraction(b, n, k, false));
      }
    }
  }
}

TEST(BubbleWindows, WrapInvariantUnderCyclicRelabeling) {
  const int n = 8;
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t b = 0; b <= mask; ++b) {
    const std::uint64_t r = ((b << 1) | (b >> (n - 1))) & mask;
    for (int k = 1; k <= 3; ++k)
      EXPECT_DOUBLE_EQ(bubble_window_fraction(b, n, k, Windowing::wrap), bubble_window_fraction(r, n, k, Windowing::wrap));
  }
}

TEST(BubbleWindows, SingleFlipInZ2MakesOneBubble) {
  // Flipping site 2 of |1010...> creates n n n around it: one 1-bubble window.
  const int n = 8;
  const auto b = z2_initial_index(n) | site_bit(2);
  EXPECT_DOUBLE_EQ(bubble_window_fraction(b, n, 1, Windowing::wrap), 1.0 / n);
  EXPECT_DOUBLE_EQ(bubble_window_fraction(z2_initial_index(n), n, 1, Windowing::wrap), 0.0);
}

TEST(BubbleWindows, FullRingPatternChoices) {
  const int n = 6;
  const auto opp = StateVector::basis(n, z2_opposite_index(n));
  const auto init = StateVector::basis(n, z2_initial_index(n));
  EXPECT_DOUBLE_EQ(bubble_density(opp, n, Windowing::wrap, BubblePattern::anti_initial), 1.0);
  EXPECT_DOUBLE_EQ(bubble_density(init, n, Windowing::wrap, BubblePattern::anti_initial), 0.0);
  EXPECT_DOUBLE_EQ(bubble_density(init, n, Windowing::wrap, BubblePattern::literal), 1.0);
  EXPECT_DOUBLE_EQ(bubble_density(init, n, Windowing::wrap, BubblePattern::both), 0.5);
  EXPECT_THROW(bubble_density(init, 0), InvalidParameter);
  EXPECT_THROW(bubble_density(init, n + 1), InvalidParameter);
}

TEST(BubbleWindows, DensitiesBoundedOnRandomStates) {
  const auto psi = StateVector::random(8, 4);
  for (int k = 1; k <= 8; ++k) {
    const double v = bubble_density(psi, k);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Tpcf, ConnectedVanishesOnProductStates) {
  for (std::uint64_t b : {std::uint64_t{0}, z2_initial_index(6), std::uint64_t{0b110010}}) {
    const auto g = tpcf(StateVector::basis(6, b));
    for (double v : g) EXPECT_DOUBLE_EQ(v, 0.0);
  }
}

TEST(Tpcf, MatchesBruteForceOracle) {
  const int n = 6;
  const auto psi = StateVector::random(n, 31);
  const auto g = tpcf(psi);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double zi = 0.0, zj = 0.0, zij = 0.0;
      for (std::size_t b = 0; b < psi.dim(); ++b) {
        const double p = std::norm(psi[b]);
        const double si = ((b >> i) & 1) ? -1.0 : 1.0, sj = ((b >> j) & 1) ? -1.0 : 1.0;
        zi += p * si;
        zj += p * sj;
        zij += p * si * sj;
      }
      EXPECT_NEAR(g[static_cast<std::size_t>(i * n + j)], zij - zi * zj, 1e-13);
    }
}

TEST(Tpcf, NeelScalarOfCatState) {
  const int n = 6;
  std::vector<cplx> amps(std::size_t{1} << n, 0.0);
  amps[z2_initial_index(n)] = 1.0;
  amps[z2_opposite_index(n)] = cplx(0.0, 1.0);
  const auto cat = StateVector::from_amplitudes(n, amps);
  EXPECT_NEAR(tpcf_neel(tpcf(cat)), 1.0, 1e-14);
  EXPECT_THROW(tpcf_neel(std::vector<double>(5, 0.0)), InvalidParameter);
}

TEST(Fidelity, BoundedAndSymmetric) {
  const auto a = StateVector::random(5, 1), b = StateVector::random(5, 2);
  const double f = fidelity(a, b);
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
  EXPECT_NEAR(f, fidelity(b, a), 1e-15);
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(basis_fidelity(StateVector::basis(5, 3), 3), 1.0);
  EXPECT_THROW(fidelity(a, StateVector::random(4, 1)), InvalidParameter);
}

TEST(Parsing, WindowingAndPattern) {
  EXPECT_EQ(parse_windowing("open"), Windowing::open);
  EXPECT_EQ(parse_bubble_pattern("anti-initial"), BubblePattern::anti_initial);
  EXPECT_EQ(to_string(BubblePattern::both), "both");
  EXPECT_THROW(parse_windowing("ring"), InvalidParameter);
  EXPECT_THROW(parse_bubble_pattern("x"), InvalidParameter);
}
