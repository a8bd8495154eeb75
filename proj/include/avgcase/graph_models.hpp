#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avgcase/distributions.hpp"
#include "avgcase/graph.hpp"
#include "avgcase/matrix.hpp"

namespace avgcase {

inline Graph sample_gnq(std::size_t n, double q, RngStream& rng) {
  require(q >= 0.0 && q <= 1.0, "sample_gnq: q outside [0,1]");
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(q)) g.set_edge(u, v);
  return g;
}

// G(n, S, p, q): pairs inside S are Bern(p), all others Bern(q).
inline Graph sample_planted_conditional(std::size_t n, const std::vector<std::size_t>& S, double p, double q,
                                        RngStream& rng) {
  require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, "planted graph: probabilities outside [0,1]");
  require(S.size() <= n, "planted graph: |S| exceeds n");
  std::vector<char> in(n, 0);
  for (std::size_t v : S) {
    require(v < n, "planted graph: vertex out of range");
    require(!in[v], "planted graph: repeated vertex in S");
    in[v] = 1;
  }
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(in[u] && in[v] ? p : q)) g.set_edge(u, v);
  return g;
}

// k-partite planted dense subgraph: one planted vertex per part of E.
inline std::pair<Graph, PlantedTrace> sample_k_pds(std::size_t N, std::size_t k, double p, double q,
                                                   const VertexPartition& E, RngStream& rng) {
  require(k > 0 && N % k == 0, "k must divide N");
  require(0.0 <= q && q < p && p <= 1.0, "k-PDS: need 0 <= q < p <= 1");
  require(E.n() == N && E.k() == k, "k-PDS: partition does not match (N, k)");
  std::vector<std::size_t> S;
  S.reserve(k);
  for (std::size_t i = 0; i < k; ++i) S.push_back(E.part(i)[rng.below(E.part_size())]);
  PlantedTrace trace;
  trace.seed = rng.seed();
  trace.planted_set = S;
  trace.params = {{"N", double(N)}, {"k", double(k)}, {"p", p}, {"q", q}};
  Graph g = sample_planted_conditional(N, S, p, q, rng);
  std::sort(trace.planted_set->begin(), trace.planted_set->end());
  return {std::move(g), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Target graph distributions

namespace detail {
inline std::vector<char> indicator(std::size_t n, const std::vector<std::size_t>& s) {
  std::vector<char> out(n, 0);
  for (std::size_t v : s) out[v] = 1;
  return out;
}
inline std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace detail

struct TargetGraphRates {
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0;
};

// Edge probability of the four-case table, given memberships of i and j.
// cls: 0 = outside S and S', 1 = S, 2 = S'.
inline double tg_edge_probability(bool i_in_v, bool j_in_v, int ci, int cj, const TargetGraphRates& r) {
  if (!(i_in_v && j_in_v)) return 0.5;
  if (ci == 1 && cj == 1) return 0.5 + r.mu3;
  if (ci == 2 && cj == 2) return 0.5;
  if ((ci == 1 && cj == 2) || (ci == 2 && cj == 1)) return 0.5 - r.mu2;
  return 0.5 - r.mu1;
}

inline std::pair<Graph, PlantedTrace> sample_tg_h1(std::size_t n, std::size_t k, std::size_t k2, std::size_t m,
                                                   double mu1, double mu2, double mu3, RngStream& rng) {
  require(k + k2 <= m && m <= n, "tg_h1: need k + k2 <= m <= n");
  for (double mu : {mu1, mu2, mu3}) require(mu >= 0.0 && mu < 0.5, "tg_h1: rates must lie in [0, 1/2)");
  const auto V = random_subset(n, m, rng);
  const auto SS = random_subset_of(V, k + k2, rng);
  const std::vector<std::size_t> S(SS.begin(), SS.begin() + static_cast<std::ptrdiff_t>(k));
  const std::vector<std::size_t> S2(SS.begin() + static_cast<std::ptrdiff_t>(k), SS.end());
  const auto in_v = detail::indicator(n, V);
  std::vector<int> cls(n, 0);
  for (auto v : S) cls[v] = 1;
  for (auto v : S2) cls[v] = 2;
  const TargetGraphRates rates{mu1, mu2, mu3};
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(tg_edge_probability(in_v[u], in_v[v], cls[u], cls[v], rates))) g.set_edge(u, v);
  PlantedTrace trace;
  trace.seed = rng.seed();
  trace.planted_set = detail::sorted(S);
  trace.sets["S_prime"] = detail::sorted(S2);
  trace.sets["V"] = detail::sorted(V);
  trace.params = {{"mu1", mu1}, {"mu2", mu2}, {"mu3", mu3}, {"m", double(m)}};
  return {std::move(g), std::move(trace)};
}

inline std::pair<Graph, PlantedTrace> sample_tg_h0(std::size_t n, std::size_t m, double mu1, RngStream& rng) {
  require(m <= n, "tg_h0: need m <= n");
  require(mu1 >= 0.0 && mu1 < 0.5, "tg_h0: mu1 must lie in [0, 1/2)");
  const auto V = random_subset(n, m, rng);
  const auto in_v = detail::indicator(n, V);
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(in_v[u] && in_v[v] ? 0.5 - mu1 : 0.5)) g.set_edge(u, v);
  PlantedTrace trace;
  trace.seed = rng.seed();
  trace.sets["V"] = detail::sorted(V);
  trace.params = {{"mu1", mu1}, {"m", double(m)}};
  return {std::move(g), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Semirandom adversary

using RemovalRate = std::function<double(std::size_t, std::size_t)>;

// Removes each present edge {u,v} independently with probability rate(u,v).
// Pairs inside the planted set are protected.
inline Graph semirandom_apply(const Graph& g, const PlantedTrace& trace, const RemovalRate& rate, RngStream& rng) {
  if (trace.planted_set) {
    const auto& S = *trace.planted_set;
    for (std::size_t a = 0; a < S.size(); ++a)
      for (std::size_t b = a + 1; b < S.size(); ++b)
        if (rate(S[a], S[b]) != 0.0)
          throw AdversaryViolation("semirandom adversary: nonzero removal rate on planted pair (" +
                                   std::to_string(S[a]) + "," + std::to_string(S[b]) + ")");
  }
  Graph out = g;
  for (std::size_t u = 0; u < g.n(); ++u)
    for (std::size_t v = u + 1; v < g.n(); ++v) {
      if (!g.has_edge(u, v)) continue;
      const double r = rate(u, v);
      require(r >= 0.0 && r <= 1.0, "semirandom adversary: removal rate outside [0,1]");
      if (rng.bernoulli(r)) out.set_edge(u, v, false);
    }
  return out;
}

// The adversary that turns G(n, S, 1/2 + mu3, 1/2) into the planted target graph law:
// it draws S' of size k2 from [n]\S and V of size m containing S ∪ S', then removes edges at
// rate 2*mu2 on S x S' and 2*mu1 on V^2 \ (S ∪ S')^2. The returned trace records S, S', V.
struct TargetGraphAdversary {
  PlantedTrace trace;
  RemovalRate rate;
};

inline TargetGraphAdversary target_graph_adversary(std::size_t n, const std::vector<std::size_t>& S,
                                                   std::size_t k2, std::size_t m, double mu1, double mu2,
                                                   RngStream& rng) {
  require(S.size() + k2 <= m && m <= n, "adversary: need |S| + k2 <= m <= n");
  const auto in_s = detail::indicator(n, S);
  std::vector<std::size_t> rest;
  for (std::size_t v = 0; v < n; ++v)
    if (!in_s[v]) rest.push_back(v);
  const auto picked = random_subset_of(rest, m - S.size(), rng);
  const std::vector<std::size_t> S2(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(k2));
  std::vector<std::size_t> V = S;
  V.insert(V.end(), picked.begin(), picked.end());

  auto cls = std::make_shared<std::vector<int>>(n, -1);  // -1 outside V
  for (auto v : V) (*cls)[v] = 0;
  for (auto v : S) (*cls)[v] = 1;
  for (auto v : S2) (*cls)[v] = 2;

  TargetGraphAdversary adv;
  adv.trace.seed = rng.seed();
  adv.trace.planted_set = detail::sorted(S);
  adv.trace.sets["S_prime"] = detail::sorted(S2);
  adv.trace.sets["V"] = detail::sorted(V);
  adv.trace.params = {{"mu1", mu1}, {"mu2", mu2}, {"m", double(m)}};
  adv.rate = [cls, mu1, mu2](std::size_t u, std::size_t v) {
    const int a = (*cls)[u], b = (*cls)[v];
    if (a < 0 || b < 0) return 0.0;
    if (a == 1 && b == 1) return 0.0;
    if (a == 2 && b == 2) return 0.0;
    if ((a == 1 && b == 2) || (a == 2 && b == 1)) return 2.0 * mu2;
    return 2.0 * mu1;
  };
  return adv;
}

// ---------------------------------------------------------------------------
// Sample corruption (rows of X are samples)

enum class CorruptionMode { Huber, EpsCorruption };

using OutlierSampler = std::function<void(std::span<double>, RngStream&)>;

// Huber: each sample replaced independently with probability eps.
// EpsCorruption: replaces min(Bin(n, huber_rate), floor(eps n)) uniformly chosen samples;
// huber_rate < 0 means huber_rate = eps.
inline RealMatrix corrupt_samples(const RealMatrix& X, double eps, const OutlierSampler& outlier,
                                  CorruptionMode mode, RngStream& rng, double huber_rate = -1.0,
                                  std::vector<std::size_t>* replaced = nullptr) {
  require(eps >= 0.0 && eps < 1.0, "corrupt_samples: eps must lie in [0,1)");
  RealMatrix out = X;
  std::vector<std::size_t> idx;
  const std::size_t n = X.rows();
  if (mode == CorruptionMode::Huber) {
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(eps)) idx.push_back(i);
  } else {
    const double rate = huber_rate < 0.0 ? eps : huber_rate;
    const auto budget = static_cast<std::uint64_t>(std::floor(eps * static_cast<double>(n)));
    const auto count = std::min<std::uint64_t>(sample_binomial(n, rate, rng), budget);
    idx = random_subset(n, count, rng);
    std::sort(idx.begin(), idx.end());
  }
  for (std::size_t i : idx) outlier(out.row(i), rng);
  if (replaced) *replaced = idx;
  return out;
}

}  // namespace avgcase
