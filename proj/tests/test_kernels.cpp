#include <gtest/gtest.h>

#include <cmath>

#include "avgcase/kernels.hpp"
#include "avgcase/stats.hpp"

using namespace avgcase;

namespace {

// Draws a symbol from Tern(a, mu1, mu2).
int draw_tern(const TernParams& tp, RngStream& rng) {
  const auto pmf = tern_pmf(tp.a, tp.mu1, tp.mu2);
  return static_cast<int>(sample_finite(pmf, rng));
}

std::function<double(double)> shifted_cdf(double shift) {
  return [shift](double x) { return normal_cdf(x - shift); };
}

}  // namespace

TEST(RkGauss, DeltaAndBounds) {
  EXPECT_NEAR(kernel_delta(0.75, 0.25), std::log(3.0), 1e-15);
  EXPECT_NEAR(kernel_delta(0.9, 0.5), std::log(1.8), 1e-15);
  EXPECT_NEAR(kernel_delta(0.6, 0.1), std::log(2.25), 1e-15);
  EXPECT_NEAR(kernel_delta(1.0, 0.5), std::log(2.0), 1e-15);
  EXPECT_THROW(check_edge_probs(0.3, 0.5), ParameterError);
  EXPECT_THROW(check_edge_probs(0.5, 0.0), ParameterError);
  const double bound = rk_mu_bound(0.75, 0.25, 1000.0);
  EXPECT_NO_THROW(KernelConfig::checked(0.75, 0.25, bound, 1000.0));
  EXPECT_THROW(KernelConfig::checked(0.75, 0.25, 2.0 * bound, 1000.0), ParameterError);
  EXPECT_NO_THROW(KernelConfig::checked(0.75, 0.25, 2.0 * bound, 1000.0, true));
}

TEST(RkGauss, ZeroMeanAcceptanceRate) {
  // At mu = 0 the bit-0 branch accepts with probability 1 - q/p and outputs N(0, 1).
  RngStream rng(1);
  const int n = 200000;
  double accepted = 0.0;
  for (int i = 0; i < n; ++i) accepted += rk_gauss(false, 0.0, 0.75, 0.25, 1, rng) != 0.0;
  EXPECT_LT(std::abs(binomial_z_test(accepted, n, 2.0 / 3.0).statistic), 4.0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = rk_gauss(false, 0.0, 0.75, 0.25, 200, rng);
  EXPECT_GT(ks_test(xs, normal_cdf).p_value, 1e-4);
}

TEST(RkGauss, NoMatchesStandardNormalYesMatchesShift) {
  const double p = 0.75, q = 0.25, n = 1000.0;
  const auto cfg = KernelConfig::checked(p, q, rk_mu_bound(p, q, n), n);
  RngStream rng(2);
  std::vector<double> null_out(100000), alt_out(100000);
  for (auto& x : null_out) x = rk_gauss(rng.bernoulli(q), cfg, rng);
  for (auto& x : alt_out) x = rk_gauss(rng.bernoulli(p), cfg, rng);
  EXPECT_GT(ks_test(null_out, normal_cdf).p_value, 1e-4);
  EXPECT_GT(ks_test(alt_out, shifted_cdf(cfg.mu)).p_value, 1e-4);
}

TEST(RkGauss, ExhaustionIsRare) {
  // Each attempt accepts with probability at least about 1/2 at small mu.
  const double p = 0.75, q = 0.25;
  const double mu = rk_mu_bound(p, q, 1000.0);
  const std::size_t iters = 4;
  RngStream rng(3);
  const int n = 200000;
  double exhausted = 0.0;
  for (int i = 0; i < n; ++i) exhausted += rk_gauss(i % 2 == 0, mu, p, q, iters, rng) == 0.0;
  EXPECT_LT(exhausted / n, 2.0 * std::pow(0.5 + 0.05, double(iters)));
}

TEST(Gaussianize, ShapeAndNullLaw) {
  BinaryMatrix M(40, 25, 0);
  RngStream rng(4);
  const auto X = gaussianize(M, 0.75, 0.25, RealMatrix(40, 25, 0.0), rng);
  EXPECT_EQ(X.rows(), 40U);
  EXPECT_EQ(X.cols(), 25U);
  std::vector<double> xs;
  for (int rep = 0; rep < 100; ++rep) {
    const auto Y = gaussianize(M, 0.75, 0.25, 0.0, rng.substream("rep", rep));
    xs.insert(xs.end(), Y.values().begin(), Y.values().end());
  }
  EXPECT_GT(ks_test(xs, normal_cdf).p_value, 1e-4);
}

TEST(Gaussianize, PlantedBlockMean) {
  const std::size_t m = 60, n = 60;
  const double P = 0.75, Q = 0.25;
  const double tau = gaussianize_tau_bound(P, Q, double(m * n));
  RngStream rng(5);
  double sum = 0.0, count = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    BinaryMatrix M(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) M(i, j) = rng.bernoulli(i < 20 && j < 20 ? P : Q);
    RealMatrix mu(m, n, 0.0);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j) mu(i, j) = tau;
    const auto X = gaussianize(M, P, Q, mu, rng.substream("rep", rep));
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j) {
        sum += X(i, j);
        count += 1.0;
      }
  }
  EXPECT_LT(std::abs(sum / count - tau), 4.0 / std::sqrt(count));
}

TEST(Gaussianize, TauBoundAndThreadInvariance) {
  BinaryMatrix M(10, 10, 1);
  const double bound = gaussianize_tau_bound(0.75, 0.25, 100.0);
  EXPECT_THROW(gaussianize(M, 0.75, 0.25, 2.0 * bound, RngStream(1)), ParameterError);
  GaussianizeOptions opt;
  opt.allow_unproven = true;
  EXPECT_NO_THROW(gaussianize(M, 0.75, 0.25, 2.0 * bound, RngStream(1), opt));
  GaussianizeOptions one, four;
  four.threads = 4;
  EXPECT_EQ(gaussianize(M, 0.75, 0.25, bound, RngStream(8), one),
            gaussianize(M, 0.75, 0.25, bound, RngStream(8), four));
}

TEST(Gaussianize, RotatedNullIsIsotropic) {
  // Rows of X times R^T for an orthonormal R stay N(0, I).
  const std::size_t samples = 20000, d = 4;
  BinaryMatrix M(samples, d, 0);
  RngStream rng(6);
  for (auto& b : M.values()) b = rng.bernoulli(0.25);
  const auto X = gaussianize(M, 0.75, 0.25, 0.0, rng.substream("g"));
  const double R[4][4] = {{0.5, 0.5, 0.5, 0.5}, {0.5, -0.5, 0.5, -0.5}, {0.5, 0.5, -0.5, -0.5}, {0.5, -0.5, -0.5, 0.5}};
  double C[4][4] = {};
  for (std::size_t s = 0; s < samples; ++s) {
    double y[4] = {};
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) y[a] += R[a][b] * X(s, b);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) C[a][b] += y[a] * y[b] / double(samples);
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      EXPECT_LT(std::abs(C[a][b] - (a == b ? 1.0 : 0.0)), 5.0 / std::sqrt(double(samples)) * (a == b ? std::sqrt(2.0) : 1.0));
}

TEST(ComputablePair, LikelihoodRatioHasUnitMean) {
  const std::vector<ComputablePair> pairs = {gaussian_shift_pair(0.3), bernoulli_pair(0.7, 0.4),
                                             exponential_pair(1.5, 2.0)};
  RngStream rng(7);
  for (const auto& pair : pairs) {
    double s = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double lr = pair.likelihood_ratio(pair.sample_noise(rng));
      EXPECT_GE(lr, 0.0);
      s += lr;
    }
    EXPECT_NEAR(s / n, 1.0, 1e-2);
  }
}

TEST(Srk3, AcceptanceFormulas) {
  const TernParams tp{0.4, 0.1, 0.05};
  EXPECT_DOUBLE_EQ(srk3_acceptance(0, tp, 0.0, 0.2), 0.5 * (1.0 - 0.6 / 0.2 * 0.2));
  EXPECT_DOUBLE_EQ(srk3_acceptance(1, tp, 0.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(srk3_acceptance(-1, tp, 0.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(srk3_acceptance(0, tp, 0.3, 0.0), 0.5);
  EXPECT_THROW(srk3_acceptance(2, tp, 0.0, 0.0), ParameterError);
}

TEST(Srk3, IdentityPairGivesNoiseLaw) {
  const auto same = gaussian_shift_pair(0.0);
  const TernParams tp{0.5, 0.1, 0.05};
  RngStream rng(8);
  for (int symbol : {-1, 0, 1}) {
    std::vector<double> xs(50000);
    for (auto& x : xs) x = srk3(symbol, same, same, tp, 30, rng);
    EXPECT_GT(ks_test(xs, normal_cdf).p_value, 1e-4);
  }
}

TEST(Srk3, SymmetricGaussianTargets) {
  const double tau = 1.0, mu = 0.5;
  const auto tp = tern_params_from_truncation(tau, mu);
  const double theta = 1e-3, n = 1e4, k = 100.0;
  const auto family = sparse_pca_family(theta, n, k);
  const double shift = std::sqrt(3.0 * theta * std::log(n) / k);
  const auto plus = family(1.0), minus = family(-1.0);
  const std::size_t iters = static_cast<std::size_t>(std::ceil(4.0 * std::log(n * n)));
  const TernParams flip{tp.a, -tp.mu1, tp.mu2};
  const TernParams null{tp.a, 0.0, 0.0};
  RngStream rng(9);
  std::vector<double> out_plus(100000), out_minus(100000), out_null(100000);
  for (auto& x : out_plus) x = srk3(draw_tern(tp, rng), plus, minus, tp, iters, rng);
  for (auto& x : out_minus) x = srk3(draw_tern(flip, rng), plus, minus, tp, iters, rng);
  for (auto& x : out_null) x = srk3(draw_tern(null, rng), plus, minus, tp, iters, rng);
  EXPECT_GT(ks_test(out_plus, shifted_cdf(shift)).p_value, 1e-4);
  EXPECT_GT(ks_test(out_minus, shifted_cdf(-shift)).p_value, 1e-4);
  EXPECT_GT(ks_test(out_null, normal_cdf).p_value, 1e-4);
}

TEST(Srk3, InvalidInputs) {
  const auto pair = gaussian_shift_pair(0.1);
  RngStream rng(1);
  EXPECT_THROW(srk3(2, pair, pair, {0.5, 0.1, 0.05}, 5, rng), ParameterError);
  EXPECT_THROW(srk3(0, pair, pair, {0.5, 0.0, 0.05}, 5, rng), ParameterError);
  EXPECT_THROW(srk3(0, pair, pair, {0.2, 0.5, 0.01}, 5, rng), ParameterError);
}

TEST(Truncation, MapAndParameters) {
  EXPECT_EQ(truncate_tern(0.5, 1.0), 0);
  EXPECT_EQ(truncate_tern(-2.0, 1.0), -1);
  EXPECT_EQ(truncate_tern(1.0, 1.0), 0);
  EXPECT_EQ(truncate_tern(1.0001, 1.0), 1);
  const auto zero = tern_params_from_truncation(1.0, 0.0);
  EXPECT_EQ(zero.mu1, 0.0);
  EXPECT_NEAR(zero.mu2, 0.0, 1e-16);
  EXPECT_NEAR(zero.a, 0.6826894921370859, 1e-12);
  EXPECT_THROW(tern_params_from_truncation(0.0, 0.1), ParameterError);
}

TEST(Truncation, TernLawMatchesGaussianTails) {
  for (double tau : {0.5, 1.0, 2.0})
    for (double mu : {0.01, 0.3, 1.0}) {
      const auto tp = tern_params_from_truncation(tau, mu);
      const auto pmf = tern_pmf(tp.a, tp.mu1, tp.mu2);
      EXPECT_NEAR(pmf.probs[0], normal_cdf(-tau - mu), 1e-12);
      EXPECT_NEAR(pmf.probs[1], normal_cdf(tau - mu) - normal_cdf(-tau - mu), 1e-12);
      EXPECT_NEAR(pmf.probs[2], normal_sf(tau - mu), 1e-12);
      EXPECT_GT(tp.mu1, 0.0);
      EXPECT_GT(tp.mu2, 0.0);
    }
}

TEST(Truncation, MonteCarloRoundTrip) {
  const double tau = 1.0, mu = 0.4;
  const auto tp = tern_params_from_truncation(tau, mu);
  const auto pmf = tern_pmf(tp.a, tp.mu1, tp.mu2);
  RngStream rng(10);
  const int n = 200000;
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < n; ++i) counts[truncate_tern(mu + rng.normal(), tau) + 1] += 1.0;
  std::vector<double> expected = {pmf.probs[0] * n, pmf.probs[1] * n, pmf.probs[2] * n};
  EXPECT_GT(chi2_test(counts, expected).p_value, 1e-4);
}
