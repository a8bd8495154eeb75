#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "avgcase/distributions.hpp"
#include "avgcase/errors.hpp"
#include "avgcase/graph.hpp"

namespace avgcase {

// ---------------------------------------------------------------------------
// Exact distances and closed-form bounds

inline double exact_tv(const FinitePmf& p, const FinitePmf& q) {
  std::map<double, double> diff;
  for (std::size_t i = 0; i < p.support.size(); ++i) diff[p.support[i]] += p.probs[i];
  for (std::size_t i = 0; i < q.support.size(); ++i) diff[q.support[i]] -= q.probs[i];
  double s = 0.0;
  for (const auto& [x, d] : diff) s += std::abs(d);
  return std::min(1.0, 0.5 * s);
}

inline double exact_tv(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  const std::size_t n = std::max(p.size(), q.size());
  for (std::size_t i = 0; i < n; ++i) s += std::abs((i < p.size() ? p[i] : 0.0) - (i < q.size() ? q[i] : 0.0));
  return std::min(1.0, 0.5 * s);
}

// |P - Q| sqrt(n / (2 Q (1 - Q))) bounds TV(Bin(n, P), Bin(n, Q)).
inline double tv_bound_binomial(std::uint64_t n, double P, double Q) {
  require(Q > 0.0 && Q < 1.0, "tv_bound_binomial: Q must lie in (0,1)");
  return std::abs(P - Q) * std::sqrt(static_cast<double>(n) / (2.0 * Q * (1.0 - Q)));
}

inline double exact_tv_binomial(std::uint64_t n, double P, double Q) {
  return exact_tv(binomial_pmf_vector(n, P), binomial_pmf_vector(n, Q));
}

// chi^2(Bern(P) + Bin(m-1, Q), Bin(m, Q)) by direct summation.
inline double chi2_bern_plus_bin(double P, std::uint64_t m, double Q) {
  require(Q > 0.0 && Q < 1.0 && m >= 1, "chi2_bern_plus_bin: need Q in (0,1) and m >= 1");
  const auto ref = binomial_pmf_vector(m, Q);
  const double md = static_cast<double>(m);
  double s = 0.0;
  for (std::uint64_t k = 0; k <= m; ++k) {
    // Likelihood ratio of Bern(P) + Bin(m-1, Q) to Bin(m, Q) at k, free of underflowing pmf quotients.
    const double kd = static_cast<double>(k);
    const double ratio = (1.0 - P) * (md - kd) / (md * (1.0 - Q)) + P * kd / (md * Q);
    s += ref[k] * (ratio - 1.0) * (ratio - 1.0);
  }
  return s;
}

inline double chi2_bern_plus_bin_closed_form(double P, std::uint64_t m, double Q) {
  return (P - Q) * (P - Q) / (static_cast<double>(m) * Q * (1.0 - Q));
}

// sqrt(sum_i (P_i - Q)^2 / (2 m Q (1 - Q))) bounds the TV between the planted-diagonal product
// and Bin(m, Q) marginals.
inline double tv_bound_bern_product(std::span<const double> P, std::uint64_t m, double Q) {
  double s = 0.0;
  for (double p : P) s += (p - Q) * (p - Q);
  return std::sqrt(s / (2.0 * static_cast<double>(m) * Q * (1.0 - Q)));
}

inline double tv_hyp_vs_bin_bound(std::uint64_t N, std::uint64_t K, std::uint64_t n) {
  require(n <= N && K <= N && N > 0, "tv_hyp_vs_bin_bound: need n, K <= N");
  return 4.0 * static_cast<double>(n) / static_cast<double>(N);
}

inline double exact_tv_hyp_vs_bin(std::uint64_t N, std::uint64_t K, std::uint64_t n) {
  return exact_tv(hypergeometric_pmf_vector(N, K, n),
                  binomial_pmf_vector(n, static_cast<double>(K) / static_cast<double>(N)));
}

// ---------------------------------------------------------------------------
// Empirical distances

// Bins at the pooled empirical quantiles; a downward-biased estimate of the true TV.
inline double empirical_tv_binned(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  require(!a.empty() && !b.empty() && bins >= 1, "empirical_tv_binned: need nonempty samples and bins");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> edges;
  for (std::size_t i = 1; i < bins; ++i) edges.push_back(pooled[i * pooled.size() / bins]);
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  auto hist = [&](std::span<const double> s) {
    std::vector<double> h(edges.size() + 1, 0.0);
    for (double x : s) h[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin())] += 1.0;
    for (double& v : h) v /= static_cast<double>(s.size());
    return h;
  };
  return exact_tv(hist(a), hist(b));
}

// TV between the binned empirical law and the exact masses of a continuous cdf on the same bins.
// Edges are the interior cut points; bins are (-inf, e0], (e0, e1], ..., (e_last, inf).
inline double binned_tv_to_cdf(std::span<const double> samples, const std::function<double(double)>& cdf,
                               std::span<const double> edges) {
  require(!samples.empty(), "binned_tv_to_cdf: empty sample");
  std::vector<double> h(edges.size() + 1, 0.0), ref(edges.size() + 1, 0.0);
  for (double x : samples) h[static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin())] += 1.0;
  for (double& v : h) v /= static_cast<double>(samples.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double c = cdf(edges[i]);
    ref[i] = c - prev;
    prev = c;
  }
  ref.back() = 1.0 - prev;
  return exact_tv(h, ref);
}

// ---------------------------------------------------------------------------
// Goodness-of-fit tests

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Survival function of the Kolmogorov distribution.
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Theta-function form converges fast for small x.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int j = 1; j <= 7; j += 2) s += std::exp(-c * j * j);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// One-sample KS test with Stephens' finite-n correction.
inline TestResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), "ks_test: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

// Two-sample KS test.
inline TestResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "ks_test_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d)};
}

inline double chi2_sf(double statistic, double df) {
  if (df <= 0.0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, statistic / 2.0);
}

// Pearson chi^2 with df = (#nonempty bins) - 1 - fitted.
inline TestResult chi2_test(std::span<const double> counts, std::span<const double> expected, int fitted = 0) {
  require(counts.size() == expected.size(), "chi2_test: size mismatch");
  double stat = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (counts[i] > 0.0) throw TestError("chi2_test: observed count in a bin with zero expectation");
      continue;
    }
    const double d = counts[i] - expected[i];
    stat += d * d / expected[i];
    ++bins;
  }
  return {stat, chi2_sf(stat, static_cast<double>(bins - 1 - fitted))};
}

// Goodness of fit of integer outcomes against a pmf on {0..K}; sparse tails are pooled until
// every bin expects at least min_expected observations.
inline TestResult chi2_gof(std::span<const std::uint64_t> outcomes, std::span<const double> pmf,
                           double min_expected = 5.0) {
  const double n = static_cast<double>(outcomes.size());
  std::vector<double> obs(pmf.size(), 0.0);
  for (auto o : outcomes) {
    if (o >= pmf.size() || pmf[o] <= 0.0) throw TestError("chi2_gof: outcome outside the support");
    obs[o] += 1.0;
  }
  std::vector<double> oc, ec;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    o_acc += obs[i];
    e_acc += n * pmf[i];
    if (e_acc >= min_expected) {
      oc.push_back(o_acc);
      ec.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (!ec.empty()) {
    oc.back() += o_acc;
    ec.back() += e_acc;
  } else {
    oc.push_back(o_acc);
    ec.push_back(e_acc);
  }
  return chi2_test(oc, ec);
}

// Two-sided z-test of a binomial frequency.
inline TestResult binomial_z_test(double successes, double trials, double p) {
  require(trials > 0.0 && p > 0.0 && p < 1.0, "binomial_z_test: need trials > 0 and p in (0,1)");
  const double z = (successes - trials * p) / std::sqrt(trials * p * (1.0 - p));
  return {z, std::erfc(std::abs(z) / std::numbers::sqrt2)};
}

// ---------------------------------------------------------------------------
// Low-degree Fourier energy of the k-partite planted clique / dense subgraph prior

enum class EnergySignal { PlantedClique, PlantedDense };

struct EnergyQuery {
  VertexPartition partition;
  std::size_t degree = 0;
  EnergySignal signal = EnergySignal::PlantedClique;
  double p = 1.0;  // edge density of the planted part for PlantedDense
};

inline constexpr double kEnergySubsetBudget = 1e7;

inline std::vector<std::pair<std::size_t, std::size_t>> cross_part_pairs(const VertexPartition& E) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < E.n(); ++u)
    for (std::size_t v = u + 1; v < E.n(); ++v)
      if (E.part_of(u) != E.part_of(v)) out.emplace_back(u, v);
  return out;
}

// Number of nonempty subsets of size <= D from a universe of size e.
inline double energy_subset_count(std::size_t e, std::size_t D) {
  double total = 0.0, c = 1.0;
  for (std::size_t j = 1; j <= std::min(D, e); ++j) {
    c = c * static_cast<double>(e - j + 1) / static_cast<double>(j);
    total += c;
  }
  return total;
}

inline double energy_edge_signal(const EnergyQuery& q) {
  return q.signal == EnergySignal::PlantedClique ? 1.0 : 2.0 * q.p - 1.0;
}

// Sum over nonempty edge sets alpha of cross-part pairs with |alpha| <= D of the squared
// coefficient (k/n)^{2|V(alpha)|} (times signal^{2|alpha|}), zero when V(alpha) meets a part twice.
inline double low_degree_energy(const EnergyQuery& q) {
  const auto& E = q.partition;
  const auto pairs = cross_part_pairs(E);
  const double count = energy_subset_count(pairs.size(), q.degree);
  if (count > kEnergySubsetBudget)
    throw FeasibilityError("low_degree_energy: " + std::to_string(count) + " edge subsets exceed the budget");
  const double density = static_cast<double>(E.k()) / static_cast<double>(E.n());
  const double signal2 = energy_edge_signal(q) * energy_edge_signal(q);
  std::vector<int> vertex_uses(E.n(), 0), part_uses(E.k(), 0);
  int vertices = 0, bad_parts = 0;
  double total = 0.0;
  auto add_vertex = [&](std::size_t v, int delta) {
    const int before = vertex_uses[v];
    vertex_uses[v] += delta;
    if (before == 0 && delta > 0) {
      ++vertices;
      if (part_uses[E.part_of(v)]++ == 1) ++bad_parts;
    } else if (vertex_uses[v] == 0 && delta < 0) {
      --vertices;
      if (--part_uses[E.part_of(v)] == 1) --bad_parts;
    }
  };
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t size) {
    for (std::size_t e = start; e < pairs.size(); ++e) {
      add_vertex(pairs[e].first, 1);
      add_vertex(pairs[e].second, 1);
      if (bad_parts == 0)
        total += std::pow(density, 2.0 * vertices) * std::pow(signal2, static_cast<double>(size + 1));
      if (size + 1 < q.degree) rec(e + 1, size + 1);
      add_vertex(pairs[e].first, -1);
      add_vertex(pairs[e].second, -1);
    }
  };
  if (q.degree > 0) rec(0, 0);
  return total;
}

// Counting bound: sum over t = |V(alpha)| and r = |alpha| of
// C(k,t) (n/k)^t C(C(t,2), r) (k/n)^{2t} signal^{2r}.
inline double low_degree_energy_bound(const EnergyQuery& q) {
  const double n = static_cast<double>(q.partition.n()), k = static_cast<double>(q.partition.k());
  const double signal2 = energy_edge_signal(q) * energy_edge_signal(q);
  auto choose = [](double a, double b) {
    if (b < 0 || b > a) return 0.0;
    return std::exp(std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1));
  };
  double total = 0.0;
  const auto tmax = std::min<std::size_t>(q.partition.k(), 2 * q.degree);
  for (std::size_t t = 2; t <= tmax; ++t) {
    const double td = static_cast<double>(t);
    const double edges = td * (td - 1) / 2;
    const double prefix = choose(k, td) * std::pow(n / k, td) * std::pow(k / n, 2 * td);
    for (std::size_t r = 1; r <= q.degree && static_cast<double>(r) <= edges; ++r)
      total += prefix * choose(edges, static_cast<double>(r)) * std::pow(signal2, static_cast<double>(r));
  }
  return total;
}

}  // namespace avgcase
