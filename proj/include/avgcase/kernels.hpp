#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "avgcase/distributions.hpp"
#include "avgcase/matrix.hpp"
#include "avgcase/parallel.hpp"

namespace avgcase {

// ---------------------------------------------------------------------------
// Gaussian rejection kernel

// min{log(p/q), log((1-q)/(1-p))}; the second term is +inf when p = 1.
inline double kernel_delta(double p, double q) {
  const double a = std::log(p / q);
  const double b = p >= 1.0 ? std::numeric_limits<double>::infinity() : std::log((1.0 - q) / (1.0 - p));
  return std::min(a, b);
}

inline void check_edge_probs(double p, double q) {
  require(0.0 < q && q < p && p <= 1.0, "rejection kernel: need 0 < q < p <= 1");
}

// Largest mean shift covered by the standalone kernel guarantee at size n.
inline double rk_mu_bound(double p, double q, double n) {
  check_edge_probs(p, q);
  return kernel_delta(p, q) / (2.0 * std::sqrt(6.0 * std::log(n) + 2.0 * std::log(1.0 / (p - q))));
}

// ceil(6 log(n) / delta).
inline std::size_t rk_iterations(double p, double q, double n) {
  check_edge_probs(p, q);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(6.0 * std::log(n) / kernel_delta(p, q))));
}

struct KernelConfig {
  double p = 0.0, q = 0.0, mu = 0.0;
  std::size_t iterations = 1;
  double delta = 0.0;

  // Validated configuration for problem size n; the mean bound can be waived explicitly.
  static KernelConfig checked(double p, double q, double mu, double n, bool allow_unproven = false) {
    check_edge_probs(p, q);
    require(mu >= 0.0, "rejection kernel: mu must be nonnegative");
    const double bound = rk_mu_bound(p, q, n);
    if (!allow_unproven && mu > bound)
      throw ParameterError("rejection kernel: mu = " + std::to_string(mu) + " exceeds the bound " +
                           std::to_string(bound) + " at n = " + std::to_string(n));
    return {p, q, mu, rk_iterations(p, q, n), kernel_delta(p, q)};
  }
};

// Maps Bern(p) to about N(mu, 1) and Bern(q) to about N(0, 1); returns 0 if no draw is accepted.
inline double rk_gauss(bool bit, double mu, double p, double q, std::size_t iterations, RngStream& rng) {
  check_edge_probs(p, q);
  require(iterations >= 1, "rejection kernel: need at least one iteration");
  const double log_q_over_p = std::log(q / p);
  const double log_ratio_absent = p >= 1.0 ? -std::numeric_limits<double>::infinity()
                                           : std::log((1.0 - p) / (1.0 - q));
  const double half_mu2 = 0.5 * mu * mu;
  for (std::size_t it = 0; it < iterations; ++it) {
    const double z = rng.normal();
    if (!bit) {
      // log(q phi_mu(z) / (p phi_0(z)))
      const double lr = log_q_over_p + mu * z - half_mu2;
      if (lr <= 0.0 && rng.uniform() < -std::expm1(lr)) return z;
    } else {
      const double x = z + mu;
      // log((1-p) phi_0(x) / ((1-q) phi_mu(x)))
      const double lr = log_ratio_absent - (mu * x - half_mu2);
      if (lr <= 0.0 && rng.uniform() < -std::expm1(lr)) return x;
    }
  }
  return 0.0;
}

inline double rk_gauss(bool bit, const KernelConfig& cfg, RngStream& rng) {
  return rk_gauss(bit, cfg.mu, cfg.p, cfg.q, cfg.iterations, rng);
}

// ---------------------------------------------------------------------------
// Gaussianize

// delta / (2 sqrt(3 log(mn) + 2 log (P-Q)^-1)).
inline double gaussianize_tau_bound(double P, double Q, double cells) {
  check_edge_probs(P, Q);
  return kernel_delta(P, Q) / (2.0 * std::sqrt(3.0 * std::log(cells) + 2.0 * std::log(1.0 / (P - Q))));
}

// ceil(3 log(mn) / delta).
inline std::size_t gaussianize_iterations(double P, double Q, double cells) {
  check_edge_probs(P, Q);
  return std::max<std::size_t>(1,
                               static_cast<std::size_t>(std::ceil(3.0 * std::log(cells) / kernel_delta(P, Q))));
}

struct GaussianizeOptions {
  std::size_t iterations = 0;  // 0 selects ceil(3 log(mn) / delta)
  bool allow_unproven = false;
  std::size_t threads = 1;
};

// Entrywise rk_G with target mean mean(i, j). Entry (i, j) draws from its own substream.
template <class MeanFn>
RealMatrix gaussianize_with(const BinaryMatrix& M, double P, double Q, MeanFn&& mean, RngStream rng,
                            const GaussianizeOptions& opt = {}) {
  check_edge_probs(P, Q);
  const std::size_t rows = M.rows(), cols = M.cols();
  const double cells = std::max(2.0, static_cast<double>(rows) * static_cast<double>(cols));
  double tau = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double m = mean(i, j);
      require(m >= 0.0, "gaussianize: target means must be nonnegative");
      tau = std::max(tau, m);
    }
  const double bound = gaussianize_tau_bound(P, Q, cells);
  if (!opt.allow_unproven && tau > bound)
    throw ParameterError("gaussianize: tau = " + std::to_string(tau) + " exceeds the bound " +
                         std::to_string(bound));
  const std::size_t iters = opt.iterations ? opt.iterations : gaussianize_iterations(P, Q, cells);
  RealMatrix out(rows, cols);
  parallel_for(rows, opt.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols; ++j) {
      RngStream cell = rng.substream("cell", i * cols + j);
      out(i, j) = rk_gauss(M(i, j) != 0, mean(i, j), P, Q, iters, cell);
    }
  });
  return out;
}

inline RealMatrix gaussianize(const BinaryMatrix& M, double P, double Q, double mu, RngStream rng,
                              const GaussianizeOptions& opt = {}) {
  return gaussianize_with(M, P, Q, [mu](std::size_t, std::size_t) { return mu; }, rng, opt);
}

inline RealMatrix gaussianize(const BinaryMatrix& M, double P, double Q, const RealMatrix& mu, RngStream rng,
                              const GaussianizeOptions& opt = {}) {
  require(mu.rows() == M.rows() && mu.cols() == M.cols(), "gaussianize: mean matrix shape mismatch");
  return gaussianize_with(M, P, Q, [&mu](std::size_t i, std::size_t j) { return mu(i, j); }, rng, opt);
}

// ---------------------------------------------------------------------------
// Computable pairs

// Planted law P and noise law Q on the real line with sampling and dP/dQ oracles.
struct ComputablePair {
  std::function<double(RngStream&)> sample_noise;
  std::function<double(RngStream&)> sample_planted;
  std::function<double(double)> log_likelihood_ratio;

  [[nodiscard]] double likelihood_ratio(double x) const { return std::exp(log_likelihood_ratio(x)); }
};

// Maps nu to the pair (P_nu, Q).
using PairFamily = std::function<ComputablePair(double)>;

// P = N(shift, 1), Q = N(0, 1).
inline ComputablePair gaussian_shift_pair(double shift) {
  return {[](RngStream& r) { return r.normal(); }, [shift](RngStream& r) { return shift + r.normal(); },
          [shift](double x) { return shift * x - 0.5 * shift * shift; }};
}

// P = Bern(planted), Q = Bern(noise) on {0, 1}.
inline ComputablePair bernoulli_pair(double planted, double noise) {
  require(0.0 < noise && noise < 1.0 && 0.0 <= planted && planted <= 1.0, "bernoulli pair: bad probabilities");
  return {[noise](RngStream& r) { return r.bernoulli(noise) ? 1.0 : 0.0; },
          [planted](RngStream& r) { return r.bernoulli(planted) ? 1.0 : 0.0; },
          [planted, noise](double x) {
            return x > 0.5 ? std::log(planted / noise) : std::log1p(-planted) - std::log1p(-noise);
          }};
}

// P = Exp(planted_rate), Q = Exp(noise_rate).
inline ComputablePair exponential_pair(double planted_rate, double noise_rate) {
  require(planted_rate > 0.0 && noise_rate > 0.0, "exponential pair: rates must be positive");
  return {[noise_rate](RngStream& r) { return -std::log(r.uniform_pos()) / noise_rate; },
          [planted_rate](RngStream& r) { return -std::log(r.uniform_pos()) / planted_rate; },
          [planted_rate, noise_rate](double x) {
            return std::log(planted_rate / noise_rate) - (planted_rate - noise_rate) * x;
          }};
}

// Spiked-covariance family: P_nu = N(nu sqrt(3 theta log n / k), 1), Q = N(0, 1).
inline PairFamily sparse_pca_family(double theta, double n, double k) {
  const double scale = std::sqrt(3.0 * theta * std::log(n) / k);
  return [scale](double nu) { return gaussian_shift_pair(nu * scale); };
}

// Gaussian mixture family with a fixed shift scale: P_nu = N(nu * scale, 1).
inline PairFamily gaussian_shift_family(double scale) {
  return [scale](double nu) { return gaussian_shift_pair(nu * scale); };
}

// ---------------------------------------------------------------------------
// Symmetric 3-ary rejection kernel

struct TernParams {
  double a = 0.0, mu1 = 0.0, mu2 = 0.0;
};

// Acceptance probability of a candidate x given the likelihood-ratio combinations.
inline double srk3_acceptance(int symbol, const TernParams& tp, double L1, double L2) {
  switch (symbol) {
    case 1:
      return 0.5 * (1.0 + tp.a / (4.0 * tp.mu2) * L2 + L1 / (4.0 * tp.mu1));
    case 0:
      return 0.5 * (1.0 - (1.0 - tp.a) / (4.0 * tp.mu2) * L2);
    case -1:
      return 0.5 * (1.0 + tp.a / (4.0 * tp.mu2) * L2 - L1 / (4.0 * tp.mu1));
    default:
      throw ParameterError("srk3: symbol must be -1, 0 or 1");
  }
}

// Maps Tern(a, mu1, mu2), Tern(a, -mu1, mu2), Tern(a, 0, 0) to about P_plus, P_minus, Q.
// Both pairs share the noise law; candidates are drawn from plus.sample_noise.
// The fallback after N rejections is a fresh draw from Q made before the loop.
inline double srk3(int symbol, const ComputablePair& plus, const ComputablePair& minus, const TernParams& tp,
                   std::size_t iterations, RngStream& rng) {
  require(symbol >= -1 && symbol <= 1, "srk3: symbol must be -1, 0 or 1");
  require(tp.mu1 != 0.0 && tp.mu2 != 0.0, "srk3: mu1 and mu2 must be nonzero");
  (void)tern_pmf(tp.a, tp.mu1, tp.mu2);
  const double l1_cap = 2.0 * std::abs(tp.mu1);
  const double l2_cap = 2.0 * std::abs(tp.mu2) / std::max(tp.a, 1.0 - tp.a);
  const double fallback = plus.sample_noise(rng);
  for (std::size_t it = 0; it < iterations; ++it) {
    const double x = plus.sample_noise(rng);
    const double lp = plus.likelihood_ratio(x);
    const double lm = minus.likelihood_ratio(x);
    const double L1 = lp - lm;
    const double L2 = lp + lm - 2.0;
    if (std::abs(L1) > l1_cap || std::abs(L2) > l2_cap) continue;
    const double accept = srk3_acceptance(symbol, tp, L1, L2);
    if (accept < -1e-12 || accept > 1.0 + 1e-12)
      throw std::logic_error("srk3: acceptance probability " + std::to_string(accept) + " outside [0,1]");
    if (rng.uniform() < accept) return x;
  }
  return fallback;
}

// ---------------------------------------------------------------------------
// Truncation to Tern

inline int truncate_tern(double x, double tau) {
  if (x > tau) return 1;
  if (x < -tau) return -1;
  return 0;
}

// Parameters of the law of tr_tau(N(mu, 1)) written as Tern(a, mu1, mu2).
inline TernParams tern_params_from_truncation(double tau, double mu) {
  require(tau > 0.0, "truncation: tau must be positive");
  const double a = normal_cdf(tau) - normal_cdf(-tau);
  const double up = normal_cdf(tau + mu), down = normal_cdf(tau - mu);
  return {a, 0.5 * (up - down), 0.5 * (2.0 * normal_cdf(tau) - up - down)};
}

}  // namespace avgcase
