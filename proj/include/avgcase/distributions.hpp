#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "avgcase/errors.hpp"
#include "avgcase/rng.hpp"

namespace avgcase {

// ---------------------------------------------------------------------------
// Standard normal

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_normal_pdf(double x, double mean = 0.0) {
  const double z = x - mean;
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Phi(x) through glibc erfc, which is accurate to a few ulp over the real line.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// 1 - Phi(x) without cancellation.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Acklam's rational approximation followed by two Halley steps.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int step = 0; step < 2; ++step) {
    // Work with the smaller tail so the residual keeps relative precision.
    const double e = (x < 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Finite distributions

struct FinitePmf {
  std::vector<double> support;
  std::vector<double> probs;

  void validate() const {
    require(support.size() == probs.size() && !support.empty(),
            "FinitePmf: support and probabilities must be nonempty and aligned");
    double total = 0.0;
    for (double p : probs) {
      require(p >= 0.0, "FinitePmf: negative probability");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "FinitePmf: probabilities must sum to 1");
  }
};

// Masses of Tern(a, mu1, mu2) on (-1, 0, +1).
inline FinitePmf tern_pmf(double a, double mu1, double mu2) {
  const double neg = (1.0 - a) / 2.0 - mu1 + mu2;
  const double zero = a - 2.0 * mu2;
  const double pos = (1.0 - a) / 2.0 + mu1 + mu2;
  if (neg < 0.0) throw ParameterError("tern_pmf: outcome -1 has negative mass " + std::to_string(neg));
  if (zero < 0.0) throw ParameterError("tern_pmf: outcome 0 has negative mass " + std::to_string(zero));
  if (pos < 0.0) throw ParameterError("tern_pmf: outcome +1 has negative mass " + std::to_string(pos));
  return {{-1.0, 0.0, 1.0}, {neg, zero, pos}};
}

inline double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double binomial_pmf(std::uint64_t n, double p, std::uint64_t k) {
  if (k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return std::exp(log_choose(n, k) + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

inline std::vector<double> binomial_pmf_vector(std::uint64_t n, double p) {
  std::vector<double> out(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) out[k] = binomial_pmf(n, p, k);
  return out;
}

// Hyp(N, K, n): successes among n draws without replacement from N items, K marked.
inline std::vector<double> hypergeometric_pmf_vector(std::uint64_t N, std::uint64_t K, std::uint64_t n) {
  std::vector<double> out(n + 1, 0.0);
  const double denom = log_choose(N, n);
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (k > K || n - k > N - K) continue;
    out[k] = std::exp(log_choose(K, k) + log_choose(N - K, n - k) - denom);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Samplers for integer laws

inline std::uint64_t sample_binomial(std::uint64_t n, double p, RngStream& rng) {
  if (p <= 0.0 || n == 0) return 0;
  if (p >= 1.0) return n;
  if (n <= 64) {
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < n; ++i) count += rng.bernoulli(p) ? 1 : 0;
    return count;
  }
  // Inversion that starts at the mode and alternates outward.
  const auto mode = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::floor((n + 1) * p)));
  const double pm = binomial_pmf(n, p, mode);
  double u = rng.uniform();
  if (u < pm) return mode;
  u -= pm;
  const double odds = p / (1.0 - p);
  std::int64_t lo = static_cast<std::int64_t>(mode) - 1;
  std::uint64_t hi = mode + 1;
  double plo = pm, phi = pm;
  while (lo >= 0 || hi <= n) {
    if (lo >= 0) {
      const auto k = static_cast<double>(lo + 1);
      plo *= k / ((static_cast<double>(n) - k + 1.0) * odds);
      if (u < plo) return static_cast<std::uint64_t>(lo);
      u -= plo;
      --lo;
    }
    if (hi <= n) {
      const auto k = static_cast<double>(hi - 1);
      phi *= (static_cast<double>(n) - k) / (k + 1.0) * odds;
      if (u < phi) return hi;
      u -= phi;
      ++hi;
    }
  }
  return mode;
}

// Sequential urn draws.
inline std::uint64_t sample_hypergeometric(std::uint64_t N, std::uint64_t K, std::uint64_t n, RngStream& rng) {
  require(K <= N && n <= N, "Hypergeometric: need K <= N and n <= N");
  std::uint64_t marked = K, total = N, hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (rng.below(total) < marked) {
      ++hits;
      --marked;
    }
    --total;
  }
  return hits;
}

// Uniformly random ordered s-subset of [0, n) via partial Fisher-Yates.
inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t s, RngStream& rng) {
  require(s <= n, "random_subset: subset larger than ground set");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(s);
  return idx;
}

// Uniform subset of the given items, in random order.
template <class T>
std::vector<T> random_subset_of(const std::vector<T>& items, std::size_t s, RngStream& rng) {
  std::vector<T> out;
  out.reserve(s);
  for (std::size_t i : random_subset(items.size(), s, rng)) out.push_back(items[i]);
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  return random_subset(n, n, rng);
}

// ---------------------------------------------------------------------------
// DistSpec

struct DistSpec;

namespace dist {
struct Bernoulli { double p; };
struct Binomial { std::uint64_t n; double p; };
struct Hypergeometric { std::uint64_t N, K, n; };
struct Gaussian { double mean, sd; };
struct Tern { double a, mu1, mu2; };
struct Finite { FinitePmf pmf; };
// Draws `right` with probability eps and `left` otherwise.
struct Mixture {
  double eps;
  std::shared_ptr<const DistSpec> left, right;
};
}  // namespace dist

struct DistSpec {
  using Kind = std::variant<dist::Bernoulli, dist::Binomial, dist::Hypergeometric, dist::Gaussian,
                            dist::Tern, dist::Finite, dist::Mixture>;
  Kind kind;

  static DistSpec bernoulli(double p) { return make(dist::Bernoulli{p}); }
  static DistSpec binomial(std::uint64_t n, double p) { return make(dist::Binomial{n, p}); }
  static DistSpec hypergeometric(std::uint64_t N, std::uint64_t K, std::uint64_t n) {
    return make(dist::Hypergeometric{N, K, n});
  }
  static DistSpec gaussian(double mean, double sd) { return make(dist::Gaussian{mean, sd}); }
  static DistSpec tern(double a, double mu1, double mu2) { return make(dist::Tern{a, mu1, mu2}); }
  static DistSpec finite(FinitePmf pmf) { return make(dist::Finite{std::move(pmf)}); }
  static DistSpec mixture(double eps, DistSpec left, DistSpec right) {
    return make(dist::Mixture{eps, std::make_shared<const DistSpec>(std::move(left)),
                              std::make_shared<const DistSpec>(std::move(right))});
  }

  void validate() const;

 private:
  static DistSpec make(Kind k) {
    DistSpec s{std::move(k)};
    s.validate();
    return s;
  }
};

namespace detail {
inline bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }
template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;
}  // namespace detail

inline void DistSpec::validate() const {
  std::visit(detail::overloaded{
                 [](const dist::Bernoulli& d) { require(detail::is_prob(d.p), "Bernoulli: p outside [0,1]"); },
                 [](const dist::Binomial& d) { require(detail::is_prob(d.p), "Binomial: p outside [0,1]"); },
                 [](const dist::Hypergeometric& d) {
                   require(d.K <= d.N && d.n <= d.N, "Hypergeometric: need K <= N and n <= N");
                 },
                 [](const dist::Gaussian& d) {
                   require(d.sd > 0.0 && std::isfinite(d.mean), "Gaussian: need sd > 0 and finite mean");
                 },
                 [](const dist::Tern& d) {
                   require(detail::is_prob(d.a), "Tern: a outside [0,1]");
                   (void)tern_pmf(d.a, d.mu1, d.mu2);
                 },
                 [](const dist::Finite& d) { d.pmf.validate(); },
                 [](const dist::Mixture& d) {
                   require(detail::is_prob(d.eps), "Mixture: eps outside [0,1]");
                   require(d.left && d.right, "Mixture: missing component");
                 },
             },
             kind);
}

inline double sample_finite(const FinitePmf& pmf, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
    acc += pmf.probs[i];
    if (u < acc) return pmf.support[i];
  }
  // Rounding residue: last outcome with positive mass.
  for (std::size_t i = pmf.probs.size(); i-- > 0;)
    if (pmf.probs[i] > 0.0) return pmf.support[i];
  return pmf.support.back();
}

inline double sample(const DistSpec& law, RngStream& rng) {
  return std::visit(
      detail::overloaded{
          [&](const dist::Bernoulli& d) { return rng.bernoulli(d.p) ? 1.0 : 0.0; },
          [&](const dist::Binomial& d) { return static_cast<double>(sample_binomial(d.n, d.p, rng)); },
          [&](const dist::Hypergeometric& d) {
            return static_cast<double>(sample_hypergeometric(d.N, d.K, d.n, rng));
          },
          [&](const dist::Gaussian& d) { return d.mean + d.sd * rng.normal(); },
          [&](const dist::Tern& d) { return sample_finite(tern_pmf(d.a, d.mu1, d.mu2), rng); },
          [&](const dist::Finite& d) { return sample_finite(d.pmf, rng); },
          [&](const dist::Mixture& d) {
            return rng.bernoulli(d.eps) ? sample(*d.right, rng) : sample(*d.left, rng);
          },
      },
      law.kind);
}

// Exact pmf when the support is finite; nullopt for Gaussians and mixtures containing them.
inline std::optional<FinitePmf> finite_pmf(const DistSpec& law) {
  return std::visit(
      detail::overloaded{
          [](const dist::Bernoulli& d) -> std::optional<FinitePmf> {
            return FinitePmf{{0.0, 1.0}, {1.0 - d.p, d.p}};
          },
          [](const dist::Binomial& d) -> std::optional<FinitePmf> {
            FinitePmf out;
            out.probs = binomial_pmf_vector(d.n, d.p);
            for (std::uint64_t k = 0; k <= d.n; ++k) out.support.push_back(static_cast<double>(k));
            return out;
          },
          [](const dist::Hypergeometric& d) -> std::optional<FinitePmf> {
            FinitePmf out;
            out.probs = hypergeometric_pmf_vector(d.N, d.K, d.n);
            for (std::uint64_t k = 0; k <= d.n; ++k) out.support.push_back(static_cast<double>(k));
            return out;
          },
          [](const dist::Gaussian&) -> std::optional<FinitePmf> { return std::nullopt; },
          [](const dist::Tern& d) -> std::optional<FinitePmf> { return tern_pmf(d.a, d.mu1, d.mu2); },
          [](const dist::Finite& d) -> std::optional<FinitePmf> { return d.pmf; },
          [](const dist::Mixture& d) -> std::optional<FinitePmf> {
            auto l = finite_pmf(*d.left);
            auto r = finite_pmf(*d.right);
            if (!l || !r) return std::nullopt;
            FinitePmf out;
            auto add = [&](double x, double w) {
              for (std::size_t i = 0; i < out.support.size(); ++i)
                if (out.support[i] == x) {
                  out.probs[i] += w;
                  return;
                }
              out.support.push_back(x);
              out.probs.push_back(w);
            };
            for (std::size_t i = 0; i < l->support.size(); ++i) add(l->support[i], (1.0 - d.eps) * l->probs[i]);
            for (std::size_t i = 0; i < r->support.size(); ++i) add(r->support[i], d.eps * r->probs[i]);
            return out;
          },
      },
      law.kind);
}

}  // namespace avgcase
