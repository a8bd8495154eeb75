#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "avgcase/stats.hpp"
#include "oracles.hpp"

using namespace avgcase;

TEST(ExactTv, Examples) {
  FinitePmf b05{{0.0, 1.0}, {0.5, 0.5}}, b0{{0.0, 1.0}, {1.0, 0.0}}, b1{{0.0, 1.0}, {0.0, 1.0}};
  EXPECT_EQ(exact_tv(b05, b05), 0.0);
  EXPECT_EQ(exact_tv(b0, b1), 1.0);
  EXPECT_NEAR(exact_tv_binomial(2, 0.5, 0.25), 0.3125, 1e-15);
  FinitePmf shifted{{1.0, 2.0}, {0.5, 0.5}};
  EXPECT_NEAR(exact_tv(b05, shifted), 0.5, 1e-15);
}

TEST(TvBoundBinomial, ExamplesAndGrid) {
  EXPECT_EQ(tv_bound_binomial(10, 0.3, 0.3), 0.0);
  EXPECT_NEAR(tv_bound_binomial(1, 0.75, 0.5), 0.25 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(exact_tv_binomial(1, 0.75, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(tv_bound_binomial(20, 0.6, 0.5), 0.1 * std::sqrt(40.0), 1e-15);
  EXPECT_LE(exact_tv_binomial(20, 0.6, 0.5), tv_bound_binomial(20, 0.6, 0.5));
  int checked = 0;
  for (std::uint64_t n : {1, 2, 5, 10, 20, 35, 50, 3})
    for (double P = 0.0; P <= 1.0001; P += 0.2)
      for (double Q : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        EXPECT_LE(exact_tv_binomial(n, std::min(P, 1.0), Q), tv_bound_binomial(n, std::min(P, 1.0), Q) + 1e-12);
        ++checked;
      }
  EXPECT_GE(checked, 200);
  EXPECT_THROW(tv_bound_binomial(5, 0.5, 0.0), ParameterError);
}

TEST(Chi2BernPlusBin, ExamplesAndClosedForm) {
  EXPECT_NEAR(chi2_bern_plus_bin(0.4, 7, 0.4), 0.0, 1e-15);
  EXPECT_NEAR(chi2_bern_plus_bin(1.0, 1, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(chi2_bern_plus_bin(0.8, 5, 0.5), 0.072, 1e-12);
  for (std::uint64_t m : {1, 2, 10, 100, 1000})
    for (double P : {0.0, 0.3, 0.9, 1.0})
      for (double Q : {0.1, 0.5, 0.8})
        EXPECT_NEAR(chi2_bern_plus_bin(P, m, Q), chi2_bern_plus_bin_closed_form(P, m, Q), 1e-10);
}

TEST(Chi2BernPlusBin, ProductBoundDominatesExactTv) {
  // k planted Bern(P_i) cells among m cells versus m iid Bern(Q) cells, compared through their sums.
  const std::vector<double> P = {0.9, 0.7, 0.8};
  const std::uint64_t m = 40;
  const double Q = 0.5;
  std::vector<double> law = {1.0};
  auto convolve = [&](double p) {
    std::vector<double> next(law.size() + 1, 0.0);
    for (std::size_t i = 0; i < law.size(); ++i) {
      next[i] += (1.0 - p) * law[i];
      next[i + 1] += p * law[i];
    }
    law = next;
  };
  for (double p : P) convolve(p);
  for (std::uint64_t i = 0; i < m - P.size(); ++i) convolve(Q);
  EXPECT_LE(exact_tv(law, binomial_pmf_vector(m, Q)), tv_bound_bern_product(P, m, Q));
}

TEST(HypVsBin, BoundDominates) {
  EXPECT_EQ(tv_hyp_vs_bin_bound(100, 50, 0), 0.0);
  EXPECT_NEAR(exact_tv_hyp_vs_bin(100, 50, 0), 0.0, 1e-15);
  EXPECT_LE(exact_tv_hyp_vs_bin(100, 50, 5), 0.2);
  EXPECT_DOUBLE_EQ(tv_hyp_vs_bin_bound(100, 50, 5), 0.2);
  EXPECT_LE(exact_tv_hyp_vs_bin(30, 10, 30), 4.0);
  for (std::uint64_t N : {10, 57, 300, 2000, 10000})
    for (std::uint64_t K : {std::uint64_t{1}, N / 3, N / 2, N - 1})
      for (std::uint64_t n : {std::uint64_t{1}, std::uint64_t{3}, N / 10, N / 2, N})
        EXPECT_LE(exact_tv_hyp_vs_bin(N, K, n), tv_hyp_vs_bin_bound(N, K, n) + 1e-12);
}

TEST(EmpiricalTv, Calibration) {
  RngStream rng(1);
  std::vector<double> a(100000), b(100000);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  EXPECT_EQ(empirical_tv_binned(a, a, 100), 0.0);
  // Two independent samples of 1e5 over 100 bins have binned TV near 0.018 with sd 0.002.
  EXPECT_LE(empirical_tv_binned(a, b, 100), 0.025);
  std::vector<double> c(a.size());
  std::transform(a.begin(), a.end(), c.begin(), [](double x) { return x + 100.0; });
  EXPECT_GT(empirical_tv_binned(a, c, 100), 0.95);
}

TEST(BinnedTvToCdf, SmallForMatchingLaw) {
  RngStream rng(2);
  std::vector<double> xs(200000);
  for (auto& x : xs) x = rng.normal();
  std::vector<double> edges;
  for (int i = 1; i < 50; ++i) edges.push_back(normal_quantile(i / 50.0));
  EXPECT_LT(binned_tv_to_cdf(xs, normal_cdf, edges), 0.01);
  EXPECT_GT(binned_tv_to_cdf(xs, [](double x) { return normal_cdf(x - 1.0); }, edges), 0.3);
}

TEST(GoodnessOfFit, KsAndChi2) {
  std::vector<double> constant(1000, 0.3);
  EXPECT_LT(ks_test(constant, normal_cdf).p_value, 1e-4);
  std::vector<double> counts = {10, 20, 30}, expected = {10, 20, 30};
  EXPECT_EQ(chi2_test(counts, expected).statistic, 0.0);
  EXPECT_EQ(chi2_test(counts, expected).p_value, 1.0);
  std::vector<double> zero_exp = {30, 30, 0};
  EXPECT_THROW(chi2_test(counts, zero_exp), TestError);
  EXPECT_NEAR(chi2_sf(3.841458820694124, 1.0), 0.05, 1e-9);
  EXPECT_NEAR(kolmogorov_sf(1.3580986393225505), 0.05, 1e-6);
  EXPECT_NEAR(kolmogorov_sf(0.8), 0.5441424115741980, 1e-9);
}

TEST(GoodnessOfFit, KsCalibrationAtSmallLevel) {
  int rejects = 0;
  const int runs = 400;
  for (int r = 0; r < runs; ++r) {
    RngStream rng(1000 + r);
    std::vector<double> xs(500);
    for (auto& x : xs) x = rng.normal();
    rejects += ks_test(xs, normal_cdf).p_value < 0.05;
  }
  // Rejection rate at level 0.05 stays near 0.05.
  EXPECT_LT(std::abs(binomial_z_test(rejects, runs, 0.05).statistic), 4.0);
  RngStream rng(5);
  std::vector<double> a(5000), b(5000);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  EXPECT_GT(ks_test_two_sample(a, b).p_value, 1e-4);
  for (auto& x : b) x += 0.2;
  EXPECT_LT(ks_test_two_sample(a, b).p_value, 1e-4);
}

TEST(Energy, SmallExamples) {
  const auto E = VertexPartition::contiguous(6, 3);
  EnergyQuery q{E, 0, EnergySignal::PlantedClique, 1.0};
  EXPECT_EQ(low_degree_energy(q), 0.0);
  q.degree = 1;
  // Every cross-part edge contributes (k/n)^4.
  EXPECT_NEAR(low_degree_energy(q), 12.0 * std::pow(0.5, 4.0), 1e-15);
  q.degree = 2;
  EXPECT_NEAR(low_degree_energy(q), oracles::energy_oracle(E, 2, 1.0), 1e-14);
}

TEST(Energy, MatchesOracleOnAllSmallInstances) {
  for (std::size_t n : {4, 6, 8})
    for (std::size_t k : {2, 3, 4}) {
      if (n % k || k == n) continue;
      const auto E = VertexPartition::contiguous(n, k);
      for (std::size_t D = 1; D <= 3; ++D) {
        const EnergyQuery pc{E, D, EnergySignal::PlantedClique, 1.0};
        const double exact = oracles::energy_oracle(E, D, 1.0);
        EXPECT_NEAR(low_degree_energy(pc), exact, 1e-12 * std::max(1.0, exact)) << n << " " << k << " " << D;
        EXPECT_LE(low_degree_energy(pc), low_degree_energy_bound(pc) * (1.0 + 1e-12));
        const EnergyQuery pds{E, D, EnergySignal::PlantedDense, 0.8};
        const double exact_pds = oracles::energy_oracle(E, D, 0.6);
        EXPECT_NEAR(low_degree_energy(pds), exact_pds, 1e-12 * std::max(1.0, exact_pds));
      }
    }
}

TEST(Energy, FeasibilityGuard) {
  const EnergyQuery q{VertexPartition::contiguous(60, 3), 4, EnergySignal::PlantedClique, 1.0};
  try {
    (void)low_degree_energy(q);
    FAIL();
  } catch (const FeasibilityError& e) {
    EXPECT_NE(std::string(e.what()).find("exceed"), std::string::npos);
  }
}
