#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "fvdsim/spectrum.hpp"
#include "oracles.hpp"

using namespace fvd;

TEST(Lanczos, LowestThreeMatchDenseOracle) {
  for (int n : {4, 6, 8, 10}) {
    const auto p = PhysicalParams::from_ratios(n, 1.1, 2.0, 0.15);
    const auto res = lowest_eigenpairs(build_hamiltonian(p), 3);
    const auto ref =
        oracle::lowest_eigenvalues(oracle::dense_rydberg(n, p.a, p.c6, p.omega, p.delta_glob, p.delta_loc), 3);
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(res.eigenvalues[static_cast<std::size_t>(k)], ref(k), 1e-8 * std::max(1.0, std::abs(ref(k))))
          << "n=" << n << " k=" << k;
  }
}

TEST(Lanczos, ResidualAndOrthonormalityInvariants) {
  const auto p = PhysicalParams::from_ratios(10, 1.2, 3.0, 0.0);
  const auto H = build_hamiltonian(p);
  const auto res = lowest_eigenpairs(H, 4);
  ASSERT_EQ(res.eigenvalues.size(), 4u);
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
    EXPECT_LT(res.residuals[i], 1e-8 * H.norm_bound());
    if (i) {
      EXPECT_LE(res.eigenvalues[i - 1], res.eigenvalues[i]);
    }
    for (std::size_t j = 0; j < res.eigenvalues.size(); ++j) {
      const double ov = std::abs(inner(res.eigenvectors[i], res.eigenvectors[j]));
      EXPECT_NEAR(ov, i == j ? 1.0 : 0.0, 1e-8);
    }
  }
}

TEST(Lanczos, ExactDegeneracyRecovered) {
  // Omega = 0: diagonal H with exactly degenerate levels.
  auto p = PhysicalParams::from_ratios(6, 1.2, 2.0, 0.0);
  p.omega = 0.0;
  const auto H = build_hamiltonian(p);
  std::vector<double> d(H.diag().begin(), H.diag().end());
  std::sort(d.begin(), d.end());
  const auto res = lowest_eigenpairs(H, 3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(res.eigenvalues[static_cast<std::size_t>(k)], d[static_cast<std::size_t>(k)], 1e-8);
}

TEST(Lanczos, VariationalBound) {
  const auto H = build_hamiltonian(PhysicalParams::from_ratios(8, 1.2, 2.5, 0.3));
  const double e0 = lowest_eigenpairs(H, 1).eigenvalues.front();
  for (std::uint64_t s = 0; s < 100; ++s) EXPECT_LE(e0, H.expectation(StateVector::random(8, s)).real() + 1e-9);
}

TEST(Lanczos, DeterministicPhaseConvention) {
  const auto H = build_hamiltonian(PhysicalParams::from_ratios(8, 1.2, 2.5, 0.3));
  const auto a = lowest_eigenpairs(H, 2), b = lowest_eigenpairs(H, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& v = a.eigenvectors[k];
    std::size_t imax = 0;
    for (std::size_t i = 0; i < v.dim(); ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    EXPECT_GT(v[imax].real(), 0.0);
    for (std::size_t i = 0; i < v.dim(); ++i) EXPECT_EQ(v[i], b.eigenvectors[k][i]);
  }
}

TEST(Lanczos, RejectsBadK) {
  const auto H = build_hamiltonian(PhysicalParams::from_ratios(2, 1.2, 2.5, 0.3));
  EXPECT_THROW(lowest_eigenpairs(H, 0), InvalidParameter);
  EXPECT_THROW(lowest_eigenpairs(H, 5), InvalidParameter);
}

TEST(Gap, MatchesDenseAtZeroConfinement) {
  const auto p = PhysicalParams::from_ratios(8, 1.2, 3.0, 0.4);
  const auto ref = oracle::lowest_eigenvalues(oracle::dense_rydberg(8, p.a, p.c6, p.omega, p.delta_glob, 0.0), 3);
  EXPECT_NEAR(gap_E20(p), ref(2) - ref(0), 1e-8);
}

TEST(Tpcf, TranslationAveragedZ2CatIsPerfectlyStaggered) {
  const int n = 8;
  std::vector<cplx> amps(std::size_t{1} << n, 0.0);
  amps[z2_initial_index(n)] = 1.0;
  amps[z2_opposite_index(n)] = 1.0;
  const auto cat = StateVector::from_amplitudes(n, amps);
  EXPECT_NEAR(tpcf_neel(tpcf_translation_averaged(cat)), 1.0, 1e-12);
  // A single Z2 product state averages to the same correlations.
  EXPECT_NEAR(tpcf_neel(tpcf_translation_averaged(StateVector::basis(n, z2_initial_index(n)))), 1.0, 1e-12);
  EXPECT_NEAR(tpcf_neel(tpcf_translation_averaged(StateVector::basis(n, 0))), 0.0, 1e-12);
}

namespace {

PhaseGrid synthetic_row(const std::vector<double>& xs, const std::function<double(double)>& f) {
  PhaseGrid g;
  g.alphas = xs;
  g.rb_over_as = {1.5};
  for (double x : xs) g.values.push_back(f(x));
  g.valid.assign(xs.size(), true);
  return g;
}

}  // namespace

TEST(Boundary, TanhStepFoundAtInflection) {
  const auto xs = linspace(0.0, 6.0, 61);
  const auto g = synthetic_row(xs, [](double x) { return std::tanh(3.0 * (x - 2.37)); });
  const auto b = phase_boundary_points(g);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].alpha, 2.37, 0.1);
  EXPECT_DOUBLE_EQ(b[0].rb_over_a, 1.5);
}

TEST(Boundary, ConvexRowHasNoBoundary) {
  const auto xs = linspace(0.0, 6.0, 13);
  EXPECT_TRUE(phase_boundary_points(synthetic_row(xs, [](double x) { return x * x; })).empty());
  EXPECT_TRUE(phase_boundary_points(synthetic_row(xs, [](double x) { return 0.3 * x - 1.0; })).empty());
}

TEST(Boundary, KeepsTwoSteepestOfSeveralInflections) {
  const auto xs = linspace(0.0, 6.0, 121);
  auto f = [](double x) {
    return std::tanh(4.0 * (x - 1.5)) - std::tanh(4.0 * (x - 4.5)) + 0.02 * std::sin(9.0 * x);
  };
  const auto b = phase_boundary_points(synthetic_row(xs, f));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0].alpha, 1.5, 0.1);
  EXPECT_NEAR(b[1].alpha, 4.5, 0.1);
}

TEST(Boundary, InvariantUnderConstantShift) {
  const auto xs = linspace(0.0, 6.0, 25);
  auto f = [](double x) { return 0.8 * std::tanh(2.0 * (x - 3.3)); };
  const auto a = phase_boundary_points(synthetic_row(xs, f));
  const auto b = phase_boundary_points(synthetic_row(xs, [&](double x) { return f(x) + 0.37; }));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].alpha, b[i].alpha, 1e-9);
}

TEST(Boundary, RejectsNonUniformAndSkipsShortOrInvalidRows) {
  EXPECT_THROW(phase_boundary_points(synthetic_row({0.0, 1.0, 2.5, 3.0, 4.0}, [](double x) { return x; })),
               InvalidParameter);
  std::vector<std::string> w;
  EXPECT_TRUE(phase_boundary_points(synthetic_row({0.0, 1.0, 2.0}, [](double x) { return x; }), &w).empty());
  EXPECT_EQ(w.size(), 1u);
  auto g = synthetic_row(linspace(0.0, 6.0, 7), [](double x) { return std::tanh(x - 3.0); });
  g.valid[3] = false;
  w.clear();
  EXPECT_TRUE(phase_boundary_points(g, &w).empty());
  EXPECT_EQ(w.size(), 1u);
}

TEST(PhaseDiagram, SmallGridBoundedAndThreadIndependent) {
  PhaseGridSpec spec;
  spec.n_s = 8;
  spec.alphas = linspace(0.0, 6.0, 7);
  spec.rb_over_as = {1.0, 1.5};
  spec.threads = 1;
  const auto a = ground_phase_diagram(spec);
  spec.threads = 4;
  const auto b = ground_phase_diagram(spec);
  ASSERT_EQ(a.values.size(), 14u);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    EXPECT_TRUE(a.valid[i]);
    EXPECT_GE(a.values[i], -1.0);
    EXPECT_LE(a.values[i], 1.0);
    EXPECT_EQ(a.values[i], b.values[i]);
  }
  // Deep in the ordered regime the staggered correlation dominates.
  EXPECT_GT(a.at(1, 6), a.at(1, 0));
  for (const auto& bp : a.boundary) {
    EXPECT_GE(bp.alpha, 0.0);
    EXPECT_LE(bp.alpha, 6.0);
  }
}

TEST(PhaseDiagram, RejectsOutOfRangeAxes) {
  PhaseGridSpec spec;
  spec.n_s = 4;
  spec.alphas = {7.0};
  spec.rb_over_as = {1.2};
  EXPECT_THROW(ground_phase_diagram(spec), InvalidParameter);
  spec.alphas = {1.0};
  spec.rb_over_as = {2.5};
  EXPECT_THROW(ground_phase_diagram(spec), InvalidParameter);
}
