#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "avgcase/distributions.hpp"
#include "avgcase/rng.hpp"
#include "avgcase/stats.hpp"

using namespace avgcase;

namespace {

// Draws and tests law against its exact pmf by chi^2.
double finite_gof_p(const DistSpec& law, std::size_t draws, std::uint64_t seed) {
  const auto pmf = finite_pmf(law);
  EXPECT_TRUE(pmf.has_value());
  RngStream rng(seed);
  std::vector<double> counts(pmf->support.size(), 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const double x = sample(law, rng);
    const auto it = std::find(pmf->support.begin(), pmf->support.end(), x);
    EXPECT_NE(it, pmf->support.end());
    counts[static_cast<std::size_t>(it - pmf->support.begin())] += 1.0;
  }
  std::vector<double> oc, ec;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    o_acc += counts[i];
    e_acc += pmf->probs[i] * static_cast<double>(draws);
    if (e_acc >= 5.0) {
      oc.push_back(o_acc);
      ec.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  oc.back() += o_acc;
  ec.back() += e_acc;
  return chi2_test(oc, ec).p_value;
}

}  // namespace

TEST(RngStream, SameSeedAndPathGiveIdenticalStreams) {
  RngStream a(42), b(42);
  auto sa = a.substream("cell", 7), sb = b.substream("cell", 7);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a(), b());
    ASSERT_EQ(sa.normal(), sb.normal());
  }
}

TEST(RngStream, DistinctPathsDiffer) {
  RngStream root(1);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 1000; ++i) firsts.insert(root.substream("cell", i)());
  firsts.insert(root.substream("other", 0)());
  EXPECT_EQ(firsts.size(), 1001U);
  EXPECT_NE(RngStream(1)(), RngStream(2)());
}

TEST(RngStream, SubstreamDoesNotAdvanceParent) {
  RngStream a(9), b(9);
  (void)a.substream("x", 3);
  EXPECT_EQ(a(), b());
}

TEST(RngStream, SubstreamsAreUncorrelated) {
  const RngStream root(5);
  auto x = root.substream("a"), y = root.substream("b");
  double sxy = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sxy += x.normal() * y.normal();
  EXPECT_LT(std::abs(sxy / n), 5.0 / std::sqrt(double(n)));
}

TEST(RngStream, BelowIsUniform) {
  RngStream rng(3);
  std::vector<double> counts(7, 0.0);
  for (int i = 0; i < 70000; ++i) counts[rng.below(7)] += 1.0;
  std::vector<double> expected(7, 10000.0);
  EXPECT_GT(chi2_test(counts, expected).p_value, 1e-4);
}

TEST(Sample, BernoulliDegenerate) {
  RngStream rng(1);
  const auto zero = DistSpec::bernoulli(0.0), one = DistSpec::bernoulli(1.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample(zero, rng), 0.0);
    EXPECT_EQ(sample(one, rng), 1.0);
  }
}

TEST(Sample, GaussianMoments) {
  RngStream rng(11);
  const auto g = DistSpec::gaussian(0.0, 1.0);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample(g, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(double(n)));
  EXPECT_LT(std::abs(var - 1.0), 0.01);
}

TEST(Sample, GaussianPassesKs) {
  RngStream rng(12);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = rng.normal();
  EXPECT_GT(ks_test(xs, normal_cdf).p_value, 1e-4);
}

TEST(Sample, InvalidSpecsThrow) {
  EXPECT_THROW(DistSpec::bernoulli(1.5), ParameterError);
  EXPECT_THROW(DistSpec::gaussian(0.0, 0.0), ParameterError);
  EXPECT_THROW(DistSpec::hypergeometric(10, 11, 2), ParameterError);
  EXPECT_THROW(DistSpec::finite(FinitePmf{{0.0, 1.0}, {0.5, 0.6}}), ParameterError);
  EXPECT_THROW(DistSpec::tern(0.2, 0.5, 0.0), ParameterError);
}

TEST(Sample, FiniteSupportSpecsPassChiSquare) {
  const std::vector<DistSpec> specs = {
      DistSpec::bernoulli(0.3),
      DistSpec::binomial(20, 0.35),
      DistSpec::binomial(500, 0.1),
      DistSpec::hypergeometric(50, 20, 10),
      DistSpec::tern(0.5, 0.1, 0.05),
      DistSpec::finite(FinitePmf{{-2.0, 0.5, 3.0}, {0.2, 0.5, 0.3}}),
      DistSpec::mixture(0.25, DistSpec::bernoulli(0.1), DistSpec::binomial(3, 0.5)),
  };
  std::uint64_t seed = 100;
  for (const auto& s : specs) EXPECT_GT(finite_gof_p(s, 100000, seed++), 1e-4);
}

TEST(Sample, MixtureIndicatorIsBinomial) {
  // Left is always 0 and right always 1, so the outcome is the component indicator.
  const auto mix = DistSpec::mixture(0.3, DistSpec::bernoulli(0.0), DistSpec::bernoulli(1.0));
  RngStream rng(77);
  const int n = 100000;
  double ones = 0.0;
  for (int i = 0; i < n; ++i) ones += sample(mix, rng);
  std::vector<double> counts = {n - ones, ones}, expected = {0.7 * n, 0.3 * n};
  EXPECT_GT(chi2_test(counts, expected).p_value, 1e-4);
}

TEST(Sample, Determinism) {
  const auto law = DistSpec::mixture(0.5, DistSpec::gaussian(1.0, 2.0), DistSpec::binomial(10, 0.4));
  RngStream a(123), b(123);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample(law, a), sample(law, b));
}

TEST(TernPmf, Examples) {
  const auto z = tern_pmf(0.5, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(z.probs[0], 0.25);
  EXPECT_DOUBLE_EQ(z.probs[1], 0.5);
  EXPECT_DOUBLE_EQ(z.probs[2], 0.25);
  EXPECT_EQ(z.support, (std::vector<double>{-1.0, 0.0, 1.0}));
  const auto s = tern_pmf(0.5, 0.1, 0.0);
  EXPECT_NEAR(s.probs[0], 0.15, 1e-15);
  EXPECT_NEAR(s.probs[1], 0.5, 1e-15);
  EXPECT_NEAR(s.probs[2], 0.35, 1e-15);
  try {
    (void)tern_pmf(0.2, 0.5, 0.0);
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("-1"), std::string::npos);
  }
}

TEST(Normal, CdfValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-12);
  const boost::math::normal_distribution<double> oracle;
  for (double x = -8.0; x <= 8.0; x += 0.01) EXPECT_NEAR(normal_cdf(x), boost::math::cdf(oracle, x), 1e-12);
}

TEST(Normal, QuantileInvertsCdf) {
  EXPECT_NEAR(normal_quantile(normal_cdf(1.7)), 1.7, 1e-10);
  // Rounding of cdf values near 1 limits the upper tail to about 1e-16 / phi(x).
  for (double x = -7.5; x <= 7.5; x += 0.05) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    EXPECT_NEAR(normal_quantile(normal_cdf(x)), x, 1e-10 + (x > 0.0 ? 4e-16 / phi : 0.0));
  }
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
  EXPECT_THROW(normal_quantile(-0.1), DomainError);
}

TEST(Subsets, RandomSubsetIsUniformOverPositions) {
  RngStream rng(8);
  std::vector<double> counts(10, 0.0);
  for (int i = 0; i < 20000; ++i)
    for (auto v : random_subset(10, 3, rng)) counts[v] += 1.0;
  std::vector<double> expected(10, 6000.0);
  EXPECT_GT(chi2_test(counts, expected).p_value, 1e-4);
  const auto perm = random_permutation(50, rng);
  std::set<std::size_t> uniq(perm.begin(), perm.end());
  EXPECT_EQ(uniq.size(), 50U);
}

TEST(Binomial, LargeSamplerMatchesPmf) {
  RngStream rng(21);
  std::vector<std::uint64_t> outcomes;
  for (int i = 0; i < 100000; ++i) outcomes.push_back(sample_binomial(2000, 0.3, rng));
  const auto pmf = binomial_pmf_vector(2000, 0.3);
  EXPECT_GT(chi2_gof(outcomes, pmf).p_value, 1e-4);
}
