#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgcase/distributions.hpp"
#include "avgcase/errors.hpp"
#include "avgcase/geometry.hpp"
#include "avgcase/kernels.hpp"

namespace avgcase {

// Edge density of each clone: 1 - sqrt((1-p)(1-q)), or sqrt(q) when p = 1.
inline double cloned_density(double p, double q) {
  check_edge_probs(p, q);
  return 1.0 - std::sqrt((1.0 - p) * (1.0 - q)) + (p >= 1.0 ? std::sqrt(q) - 1.0 : 0.0);
}

// Smallest multiple of base strictly greater than x.
inline std::size_t smallest_multiple_above(std::size_t base, double x) {
  require(base > 0, "multiple base must be positive");
  const auto b = static_cast<double>(base);
  auto mult = static_cast<std::size_t>(std::floor(x / b)) + 1;
  while (static_cast<double>((mult - 1) * base) > x) --mult;
  return mult * base;
}

// delta / (2 sqrt(3 log(k m r^t) + 2 log (p-Q)^-1)) / sqrt(r^t (r-1)).
inline double isgm_mu_bound(double p, double Q, std::size_t k, std::size_t m, std::uint64_t r, std::uint64_t t) {
  const double rt = static_cast<double>(checked_pow(r, t));
  const double cells = static_cast<double>(k) * static_cast<double>(m) * rt;
  return kernel_delta(p, Q) / (2.0 * std::sqrt(3.0 * std::log(cells) + 2.0 * std::log(1.0 / (p - Q)))) /
         std::sqrt(rt * static_cast<double>(r - 1));
}

enum class Target { ISGM, RSME, SEMI_CR, GLSM };

inline std::string target_name(Target t) {
  switch (t) {
    case Target::ISGM: return "isgm";
    case Target::RSME: return "rsme";
    case Target::SEMI_CR: return "semi-cr";
    case Target::GLSM: return "glsm";
  }
  return "?";
}

struct RegimeCheck {
  std::string name;
  bool holds = false;
  double lhs = 0.0, rhs = 0.0;
};

struct PlanRequest {
  Target target = Target::ISGM;
  double p = 0.75, q = 0.25;
  std::size_t N = 0;  // graph size (derived for RSME)
  std::size_t k = 0;  // part count of the graph; for RSME the target sparsity
  std::optional<std::uint64_t> r;
  double eps = 0.0;  // used when r is not given
  std::optional<std::uint64_t> t;
  std::optional<std::size_t> ell;
  double beta = 0.5;
  std::size_t n = 0, d = 0;  // 0 derives a default
  double w = 8.0;
  double c = 1.0;
  std::optional<double> mu;
  double tau = 1.0;
};

struct ReductionPlan {
  Target target = Target::ISGM;
  double p = 0.0, q = 0.0, Q = 0.0, delta = 0.0;
  std::uint64_t r = 0, t = 0;
  std::size_t k_prime = 0, N = 0, m = 0, n = 0, d = 0;
  double eps = 0.0, w = 0.0, c = 1.0;
  double mu = 0.0, mu_bound = 0.0;
  // Block-rotation targets.
  std::size_t ell = 0, s = 0, m_prime = 0, m_rotated = 0, k_target = 0, k_second = 0;
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0, threshold = 0.0;
  // Sparse-mixture target.
  double tau = 1.0;
  std::size_t srk_iterations = 0;
  std::vector<RegimeCheck> regime;

  [[nodiscard]] std::uint64_t rt() const { return checked_pow(r, t); }
  [[nodiscard]] std::size_t rows_h() const { return static_cast<std::size_t>((rt() - 1) / (r - 1)); }
  [[nodiscard]] double mu_prime() const { return -mu * (1.0 - eps) / eps; }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["target"] = target_name(target);
    j["p"] = p;
    j["q"] = q;
    j["Q"] = Q;
    j["delta"] = delta;
    j["N"] = N;
    j["k"] = k_prime;
    j["m"] = m;
    if (target == Target::SEMI_CR) {
      j["ell"] = ell;
      j["s"] = s;
      j["m_prime"] = m_prime;
      j["m_rotated"] = m_rotated;
      j["k_target"] = k_target;
      j["k_second"] = k_second;
      j["mu1"] = mu1;
      j["mu2"] = mu2;
      j["mu3"] = mu3;
      j["threshold"] = threshold;
    } else {
      j["r"] = r;
      j["t"] = t;
      j["eps"] = eps;
      j["mu_prime"] = mu_prime();
      j["d"] = d;
      if (target == Target::RSME) j["k_target"] = k_target;
      if (target == Target::GLSM) {
        j["tau"] = tau;
        j["srk_iterations"] = srk_iterations;
      }
    }
    j["n"] = n;
    j["w"] = w;
    j["c"] = c;
    j["mu"] = mu;
    j["mu_bound"] = mu_bound;
    j["regime"] = nlohmann::ordered_json::array();
    for (const auto& rc : regime)
      j["regime"].push_back({{"condition", rc.name}, {"holds", rc.holds}, {"lhs", rc.lhs}, {"rhs", rc.rhs}});
    return j;
  }
};

namespace detail {
inline void add_check(ReductionPlan& plan, std::string name, double lhs, double rhs) {
  plan.regime.push_back({std::move(name), lhs <= rhs, lhs, rhs});
}

inline void finish_isgm_like(ReductionPlan& plan, const PlanRequest& req) {
  const double rt = static_cast<double>(plan.rt());
  const double kl = static_cast<double>(plan.k_prime) * static_cast<double>(plan.rows_h());
  if (plan.n == 0) plan.n = static_cast<std::size_t>(std::floor(kl / plan.w));
  if (plan.d == 0) plan.d = plan.m;
  plan.mu_bound = isgm_mu_bound(plan.p, plan.Q, plan.k_prime, plan.m, plan.r, plan.t);
  if (!req.mu) plan.mu = plan.c * plan.mu_bound;
  require(plan.n >= 1, "plan: target sample count is zero");
  require(static_cast<double>(plan.n) <= kl, "plan: n exceeds the k(r^t-1)/(r-1) rotated columns");
  require(plan.d >= plan.m, "plan: need d >= m");
  require(static_cast<double>(plan.k_prime) * rt >= static_cast<double>(plan.m), "plan: need k r^t >= m");
  add_check(plan, "w*n <= k*(r^t-1)/(r-1)", plan.w * static_cast<double>(plan.n), kl);
  add_check(plan, "m <= k*r^t", static_cast<double>(plan.m), static_cast<double>(plan.k_prime) * rt);
  add_check(plan, "m <= d", static_cast<double>(plan.m), static_cast<double>(plan.d));
  add_check(plan, "mu <= mean bound", plan.mu, plan.mu_bound);
}
}  // namespace detail

inline ReductionPlan plan_parameters(const PlanRequest& req) {
  ReductionPlan plan;
  plan.target = req.target;
  plan.p = req.p;
  plan.q = req.q;
  plan.Q = cloned_density(req.p, req.q);
  plan.delta = kernel_delta(plan.p, plan.Q);
  plan.w = req.w;
  plan.c = req.c;
  plan.n = req.n;
  plan.d = req.d;
  plan.tau = req.tau;
  require(req.w >= 1.0, "plan: w must be at least 1");
  require(req.c > 0.0, "plan: c must be positive");
  if (req.mu) plan.mu = *req.mu;
  const double ratio = plan.p / plan.Q + 1.0;

  auto graph_checks = [&] {
    require(plan.k_prime > 0 && plan.N > 0, "plan: N and k must be positive");
    require(plan.N % plan.k_prime == 0, "k must divide N");
    detail::add_check(plan, "k <= Q*N/4", static_cast<double>(plan.k_prime), plan.Q * static_cast<double>(plan.N) / 4.0);
    detail::add_check(plan, "k^2/N <= 1/w", static_cast<double>(plan.k_prime * plan.k_prime) / static_cast<double>(plan.N),
                      1.0 / plan.w);
  };
  auto min_t = [&](std::uint64_t r) {
    std::uint64_t t = 2;
    while (static_cast<double>(plan.k_prime) * static_cast<double>(checked_pow(r, t)) < static_cast<double>(plan.m)) {
      ++t;
      if (checked_pow(r, t) == 0) throw ParameterError("plan: no t with k r^t >= m in 64-bit range");
    }
    return t;
  };

  switch (req.target) {
    case Target::ISGM: {
      plan.N = req.N;
      plan.k_prime = req.k;
      graph_checks();
      if (req.r) {
        require(is_prime(*req.r), "plan: r must be prime");
        plan.r = *req.r;
      } else {
        require(req.eps > 0.0 && req.eps < 1.0, "plan: need eps in (0,1) or an explicit r");
        plan.r = next_prime_above(1.0 / req.eps);
      }
      plan.eps = 1.0 / static_cast<double>(plan.r);
      plan.m = smallest_multiple_above(plan.k_prime, ratio * static_cast<double>(plan.N));
      plan.t = req.t ? *req.t : min_t(plan.r);
      (void)PrimePower(plan.r, plan.t);
      detail::finish_isgm_like(plan, req);
      break;
    }
    case Target::RSME: {
      require(req.k > 0, "plan: RSME needs the target sparsity k");
      require(req.eps > 0.0 && req.eps < 1.0, "plan: RSME needs eps in (0,1)");
      require(std::floor(req.w) == req.w, "plan: RSME needs an integer w");
      plan.r = next_prime_above(1.0 / req.eps);
      plan.eps = 1.0 / static_cast<double>(plan.r);
      plan.k_target = req.k;
      const double cap = req.w * static_cast<double>(req.k) * ratio;
      std::uint64_t t = 0;
      for (std::uint64_t cand = 1; checked_pow(plan.r, cand) != 0 && static_cast<double>(checked_pow(plan.r, cand)) < cap; ++cand)
        t = cand;
      if (t < 2) throw ParameterError("plan: no power r^t >= r^2 below w k (1 + p/Q)");
      plan.t = t;
      plan.k_prime = static_cast<std::size_t>(std::floor(static_cast<double>(plan.rt()) / (req.w * ratio)));
      require(plan.k_prime >= 1, "plan: derived k' is zero");
      plan.N = static_cast<std::size_t>(req.w) * plan.k_prime * plan.k_prime;
      graph_checks();
      plan.m = smallest_multiple_above(plan.k_prime, ratio * static_cast<double>(plan.N));
      if (plan.n == 0) plan.n = static_cast<std::size_t>(std::floor(static_cast<double>(plan.k_prime * plan.rows_h()) / plan.w));
      detail::finish_isgm_like(plan, req);
      // Mean at the explicit RSME choice, which uses 6 log(k' r^t).
      const double rt = static_cast<double>(plan.rt());
      plan.mu_bound = plan.delta /
                      (2.0 * std::sqrt(6.0 * std::log(static_cast<double>(plan.k_prime) * rt) +
                                       2.0 * std::log(1.0 / (plan.p - plan.Q)))) /
                      std::sqrt(rt * static_cast<double>(plan.r - 1));
      if (!req.mu) plan.mu = plan.c * plan.mu_bound;
      plan.regime.back() = {"mu <= mean bound", plan.mu <= plan.mu_bound, plan.mu, plan.mu_bound};
      detail::add_check(plan, "1/r < eps", plan.eps, req.eps);
      break;
    }
    case Target::SEMI_CR: {
      plan.N = req.N;
      plan.k_prime = req.k;
      graph_checks();
      plan.r = 3;
      if (req.ell) {
        plan.ell = *req.ell;
      } else {
        const double x = std::log(std::pow(static_cast<double>(plan.N), req.beta) / static_cast<double>(plan.k_prime)) /
                         std::log(3.0);
        plan.ell = static_cast<std::size_t>(std::max(1.0, std::ceil(x)));
      }
      require(plan.ell >= 1, "plan: ell must be at least 1");
      plan.t = plan.ell;
      const std::size_t block = static_cast<std::size_t>(checked_pow(3, plan.ell));
      plan.m = smallest_multiple_above((block - 1) * plan.k_prime, ratio * static_cast<double>(plan.N));
      plan.s = plan.m / ((block - 1) * plan.k_prime);
      plan.m_prime = block * plan.k_prime * plan.s;
      plan.m_rotated = (block - 1) / 2 * plan.k_prime * plan.s;
      if (plan.n == 0) plan.n = plan.m_rotated;
      require(plan.n >= plan.m_rotated, "plan: need n >= m''");
      plan.k_target = (block / 3 - 1) / 2 * plan.k_prime;
      plan.k_second = block / 3 * plan.k_prime;
      plan.mu_bound = plan.delta / (2.0 * std::sqrt(6.0 * std::log(static_cast<double>(plan.m)) +
                                                    2.0 * std::log(1.0 / (plan.p - plan.Q))));
      if (!req.mu) plan.mu = plan.c * plan.mu_bound;
      const double b = static_cast<double>(block);
      plan.mu1 = normal_cdf(0.5 * plan.mu / b) - 0.5;
      plan.mu2 = plan.mu3 = normal_cdf(1.5 * plan.mu / b) - 0.5;
      plan.threshold = plan.mu / (2.0 * b);
      detail::add_check(plan, "m'' <= n", static_cast<double>(plan.m_rotated), static_cast<double>(plan.n));
      detail::add_check(plan, "mu <= mean bound", plan.mu, plan.mu_bound);
      break;
    }
    case Target::GLSM: {
      plan.N = req.N;
      plan.k_prime = req.k;
      graph_checks();
      plan.r = 2;
      plan.eps = 0.5;
      plan.m = smallest_multiple_above(plan.k_prime, ratio * static_cast<double>(plan.N));
      if (req.t) {
        plan.t = *req.t;
      } else {
        const auto t_fig = static_cast<std::uint64_t>(
            std::max(2.0, std::ceil(std::log2(static_cast<double>(plan.N) / (plan.c * static_cast<double>(plan.k_prime))))));
        plan.t = std::max(t_fig, min_t(2));
      }
      (void)PrimePower(plan.r, plan.t);
      if (plan.n == 0) {
        const double kl = static_cast<double>(plan.k_prime * plan.rows_h());
        plan.n = static_cast<std::size_t>(std::floor(std::min(kl, plan.c * static_cast<double>(plan.N)) / plan.w));
      }
      if (plan.d == 0)
        plan.d = std::max(plan.m, static_cast<std::size_t>(std::ceil(static_cast<double>(plan.N) / plan.c)));
      detail::finish_isgm_like(plan, req);
      detail::add_check(plan, "w*n <= c*N", plan.w * static_cast<double>(plan.n), plan.c * static_cast<double>(plan.N));
      detail::add_check(plan, "N/c <= d", static_cast<double>(plan.N) / plan.c, static_cast<double>(plan.d));
      require(plan.tau > 0.0, "plan: tau must be positive");
      plan.srk_iterations = static_cast<std::size_t>(
          std::ceil(4.0 * std::log(static_cast<double>(plan.d) * static_cast<double>(plan.n))));
      break;
    }
  }
  return plan;
}

}  // namespace avgcase
