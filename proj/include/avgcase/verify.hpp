#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgcase/distributions.hpp"
#include "avgcase/errors.hpp"
#include "avgcase/graph_models.hpp"
#include "avgcase/pipelines.hpp"
#include "avgcase/plan.hpp"
#include "avgcase/stats.hpp"

namespace avgcase {

enum class TestStatus { Pass, Fail, Inconclusive };

inline std::string status_name(TestStatus s) {
  switch (s) {
    case TestStatus::Pass: return "pass";
    case TestStatus::Fail: return "fail";
    case TestStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline TestStatus status_from_name(const std::string& s) {
  if (s == "pass") return TestStatus::Pass;
  if (s == "fail") return TestStatus::Fail;
  if (s == "inconclusive") return TestStatus::Inconclusive;
  throw FormatError("unknown test status " + s);
}

struct TestOutcome {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = false;
  TestStatus status = TestStatus::Fail;
  // Largest acceptable statistic for threshold tests; p-value tests leave it unset.
  std::optional<double> max_statistic;
  std::size_t samples = 0;
  std::size_t min_samples = 0;
};

struct VerifyReport {
  std::string pipeline;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<TestOutcome> tests;
  TestStatus verdict = TestStatus::Fail;

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["pipeline"] = pipeline;
    j["params"] = params;
    j["seed"] = seed;
    j["tests"] = nlohmann::ordered_json::array();
    for (const auto& t : tests)
      j["tests"].push_back({{"name", t.name},
                            {"statistic", t.statistic},
                            {"p_value", t.p_value},
                            {"pass", t.pass},
                            {"status", status_name(t.status)}});
    j["verdict"] = status_name(verdict);
    return j;
  }

  static VerifyReport from_json(const nlohmann::ordered_json& j) {
    VerifyReport r;
    r.pipeline = j.at("pipeline").get<std::string>();
    r.params = j.at("params");
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("tests")) {
      TestOutcome o;
      o.name = t.at("name").get<std::string>();
      o.statistic = t.at("statistic").get<double>();
      o.p_value = t.at("p_value").get<double>();
      o.pass = t.at("pass").get<bool>();
      o.status = status_from_name(t.at("status").get<std::string>());
      r.tests.push_back(o);
    }
    r.verdict = status_from_name(j.at("verdict").get<std::string>());
    return r;
  }
};

// ---------------------------------------------------------------------------
// Null checks on pooled samples (rows are samples)

// Evenly spaced coordinate subset of size at most count.
inline std::vector<std::size_t> spread_indices(std::size_t total, std::size_t count) {
  std::vector<std::size_t> out;
  count = std::min(count, total);
  for (std::size_t i = 0; i < count; ++i) out.push_back(i * total / count);
  return out;
}

// KS of every coordinate against cdf; reports the largest D and the Bonferroni-adjusted smallest p.
inline TestOutcome ks_per_coordinate(const RealMatrix& X, const std::function<double(double)>& cdf,
                                     std::string name = "ks_per_coordinate") {
  TestOutcome o;
  o.name = std::move(name);
  o.samples = X.rows();
  double min_p = 1.0;
  std::vector<double> col(X.rows());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    for (std::size_t i = 0; i < X.rows(); ++i) col[i] = X(i, c);
    const auto r = ks_test(col, cdf);
    o.statistic = std::max(o.statistic, r.statistic);
    min_p = std::min(min_p, r.p_value);
  }
  o.p_value = std::min(1.0, min_p * static_cast<double>(X.cols()));
  return o;
}

// Uncentered second moments over a coordinate subset; the mean is known to be zero under the null.
inline RealMatrix second_moments(const RealMatrix& X, const std::vector<std::size_t>& coords) {
  const std::size_t s = coords.size();
  RealMatrix C(s, s);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto row = X.row(i);
    for (std::size_t a = 0; a < s; ++a) {
      const double xa = row[coords[a]];
      for (std::size_t b = a; b < s; ++b) C(a, b) += xa * row[coords[b]];
    }
  }
  const double n = static_cast<double>(X.rows());
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a; b < s; ++b) C(b, a) = (C(a, b) /= n);
  return C;
}

// Max off-diagonal |C_ab| scaled by sqrt(n); threshold 5.
inline TestOutcome covariance_offdiag(const RealMatrix& C, std::size_t n, std::string name = "covariance_offdiag") {
  TestOutcome o;
  o.name = std::move(name);
  o.samples = n;
  double worst = 0.0;
  for (std::size_t a = 0; a < C.rows(); ++a)
    for (std::size_t b = a + 1; b < C.cols(); ++b) worst = std::max(worst, std::abs(C(a, b)));
  o.statistic = worst * std::sqrt(static_cast<double>(n));
  const double pairs = static_cast<double>(C.rows() * (C.rows() - 1) / 2);
  o.p_value = std::min(1.0, pairs * 2.0 * normal_sf(o.statistic));
  o.max_statistic = 5.0;
  return o;
}

// Max |C_aa - 1| scaled by sqrt(n/2); threshold 5.
inline TestOutcome covariance_diag(const RealMatrix& C, std::size_t n, std::string name = "covariance_diag") {
  TestOutcome o;
  o.name = std::move(name);
  o.samples = n;
  double worst = 0.0;
  for (std::size_t a = 0; a < C.rows(); ++a) worst = std::max(worst, std::abs(C(a, a) - 1.0));
  o.statistic = worst * std::sqrt(static_cast<double>(n) / 2.0);
  o.p_value = std::min(1.0, static_cast<double>(C.rows()) * 2.0 * normal_sf(o.statistic));
  o.max_statistic = 5.0;
  return o;
}

// Applies the power guard and the Bonferroni level; the verdict is pass only if every test passes.
inline void finalize(VerifyReport& rep, double alpha) {
  const double level = alpha / static_cast<double>(std::max<std::size_t>(1, rep.tests.size()));
  bool all_pass = true, any_fail = false;
  for (auto& t : rep.tests) {
    if (t.samples < t.min_samples) {
      t.status = TestStatus::Inconclusive;
      t.pass = false;
    } else {
      t.pass = t.max_statistic ? t.statistic <= *t.max_statistic : t.p_value >= level;
      t.status = t.pass ? TestStatus::Pass : TestStatus::Fail;
    }
    all_pass = all_pass && t.pass;
    any_fail = any_fail || t.status == TestStatus::Fail;
  }
  rep.verdict = all_pass ? TestStatus::Pass : any_fail ? TestStatus::Fail : TestStatus::Inconclusive;
}

// ---------------------------------------------------------------------------
// Batteries

struct VerifyConfig {
  std::string pipeline = "isgm";
  std::uint64_t seed = 0;
  std::size_t trials = 0;  // 0 selects the battery default
  double alpha = 1e-4;
  std::size_t threads = 1;
  Fault fault = Fault::None;
  bool planted = false;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
};

namespace detail {
template <class T>
T param_or(const nlohmann::ordered_json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline PlanRequest request_from_params(Target target, const nlohmann::ordered_json& j, std::size_t N, std::size_t k) {
  PlanRequest req;
  req.target = target;
  req.N = param_or<std::size_t>(j, "N", N);
  req.k = param_or<std::size_t>(j, "k", k);
  req.p = param_or<double>(j, "p", 0.75);
  req.q = param_or<double>(j, "q", 0.25);
  req.w = param_or<double>(j, "w", 8.0);
  req.c = param_or<double>(j, "c", 1.0);
  if (j.contains("r")) req.r = j.at("r").get<std::uint64_t>();
  if (j.contains("t")) req.t = j.at("t").get<std::uint64_t>();
  if (j.contains("ell")) req.ell = j.at("ell").get<std::size_t>();
  if (j.contains("mu")) req.mu = j.at("mu").get<double>();
  req.n = param_or<std::size_t>(j, "n", 0);
  req.d = param_or<std::size_t>(j, "d", 0);
  req.eps = param_or<double>(j, "eps", 0.0);
  req.tau = param_or<double>(j, "tau", 1.0);
  return req;
}

inline void copy_plan(VerifyReport& rep, const ReductionPlan& plan) {
  const auto j = plan.to_json();
  for (const auto& [key, value] : j.items())
    if (key != "regime") rep.params[key] = value;
}

// Column of X restricted to rows in `rows`.
inline std::vector<double> column(const RealMatrix& X, std::size_t c, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(X(i, c));
  return out;
}

inline RealMatrix stack(const std::vector<RealMatrix>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  RealMatrix out(rows, parts.empty() ? 0 : parts.front().cols());
  std::size_t at = 0;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.rows(); ++i, ++at) std::copy(p.row(i).begin(), p.row(i).end(), out.row(at).begin());
  return out;
}
}  // namespace detail

// Null battery for k-PDS to ISGM; the planted battery adds the component-count and mean checks.
inline VerifyReport verify_isgm(const VerifyConfig& cfg) {
  VerifyReport rep;
  rep.pipeline = "isgm";
  rep.seed = cfg.seed;
  auto req = detail::request_from_params(Target::ISGM, cfg.params, 200, 4);
  if (!req.r && req.eps == 0.0) req.r = 2;
  ReductionPlan plan = plan_parameters(req);
  if (!cfg.params.contains("d")) {
    req.d = plan.m + 50;
    plan = plan_parameters(req);
  }
  detail::copy_plan(rep, plan);
  const std::size_t trials = cfg.trials ? cfg.trials : 40;
  rep.params["trials"] = trials;
  PipelineOptions opt;
  opt.threads = cfg.threads;
  opt.fault = cfg.fault;
  const RngStream root(cfg.seed);
  const auto E = VertexPartition::contiguous(plan.N, plan.k_prime);

  std::vector<RealMatrix> null_runs;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream gr = root.substream("h0-graph", t);
    const Graph G = sample_gnq(plan.N, plan.q, gr);
    null_runs.push_back(pds_to_isgm(G, E, plan, root.substream("h0-run", t), opt).samples);
  }
  const RealMatrix pooled = detail::stack(null_runs);
  const std::size_t min_samples = 1000;
  auto ks = ks_per_coordinate(pooled, normal_cdf);
  ks.min_samples = min_samples;
  rep.tests.push_back(ks);
  const auto coords = spread_indices(plan.d, 96);
  const RealMatrix C = second_moments(pooled, coords);
  for (auto test : {covariance_offdiag(C, pooled.rows()), covariance_diag(C, pooled.rows())}) {
    test.min_samples = min_samples;
    rep.tests.push_back(test);
  }

  if (cfg.planted) {
    std::vector<double> counts(plan.n + 1, 0.0);
    double pos_sum = 0.0, neg_sum = 0.0, pos_sq = 0.0, neg_sq = 0.0, pos_n = 0.0, neg_n = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      RngStream gr = root.substream("h1-graph", t);
      const auto [G, tr] = sample_k_pds(plan.N, plan.k_prime, plan.p, plan.q, E, gr);
      const auto inst = pds_to_isgm(G, E, plan, root.substream("h1-run", t), opt, &tr);
      const auto& comp = *inst.trace.component_set;
      counts[comp.size()] += 1.0;
      std::vector<char> is_pos(plan.n, 0);
      for (auto s : comp) is_pos[s] = 1;
      for (std::size_t s = 0; s < plan.n; ++s)
        for (std::size_t c : *inst.trace.planted_set) {
          const double x = inst.samples(s, c);
          (is_pos[s] ? pos_sum : neg_sum) += x;
          (is_pos[s] ? pos_sq : neg_sq) += x * x;
          (is_pos[s] ? pos_n : neg_n) += 1.0;
        }
    }
    std::vector<std::uint64_t> outcomes;
    for (std::size_t c = 0; c < counts.size(); ++c)
      for (int rep_i = 0; rep_i < static_cast<int>(counts[c]); ++rep_i) outcomes.push_back(c);
    const auto pmf = binomial_pmf_vector(plan.n, 1.0 - plan.eps);
    const auto chi = chi2_gof(outcomes, pmf);
    TestOutcome o;
    o.name = "positive_component_count";
    o.statistic = chi.statistic;
    o.p_value = chi.p_value;
    o.samples = trials;
    o.min_samples = 100;
    rep.tests.push_back(o);
    auto mean_test = [&](const char* name, double sum, double sq, double cnt, double target) {
      TestOutcome m;
      m.name = name;
      m.samples = static_cast<std::size_t>(cnt);
      m.min_samples = 100;
      if (cnt < 2.0) return m;
      const double mean = sum / cnt, var = std::max(sq / cnt - mean * mean, 1e-300);
      m.statistic = (mean - target) / std::sqrt(var / cnt);
      m.max_statistic = 4.0;
      m.statistic = std::abs(m.statistic);
      m.p_value = std::erfc(m.statistic / std::numbers::sqrt2);
      return m;
    };
    rep.tests.push_back(mean_test("planted_mean_positive", pos_sum, pos_sq, pos_n, plan.mu));
    rep.tests.push_back(mean_test("planted_mean_negative", neg_sum, neg_sq, neg_n, plan.mu_prime()));
  }
  finalize(rep, cfg.alpha);
  return rep;
}

// Null battery for k-PDS to SEMI-CR: edge frequency inside V against 1/2 - mu1.
inline VerifyReport verify_semi_cr(const VerifyConfig& cfg) {
  VerifyReport rep;
  rep.pipeline = "semi-cr";
  rep.seed = cfg.seed;
  auto req = detail::request_from_params(Target::SEMI_CR, cfg.params, 64, 4);
  if (!req.ell) req.ell = 2;
  const ReductionPlan plan = plan_parameters(req);
  detail::copy_plan(rep, plan);
  const std::size_t trials = cfg.trials ? cfg.trials : 200;
  rep.params["trials"] = trials;
  PipelineOptions opt;
  opt.threads = cfg.threads;
  opt.fault = cfg.fault;
  const RngStream root(cfg.seed);
  const auto E = VertexPartition::contiguous(plan.N, plan.k_prime);
  double inside = 0.0, inside_edges = 0.0, outside = 0.0, outside_edges = 0.0;
  std::vector<double> degree;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream gr = root.substream("h0-graph", t);
    const Graph G = sample_gnq(plan.N, plan.q, gr);
    const auto [H, tr] = pds_to_semi_cr(G, E, plan, root.substream("h0-run", t), opt);
    const auto in_v = detail::indicator(plan.n, tr.sets.at("V"));
    for (std::size_t u = 0; u < plan.n; ++u)
      for (std::size_t v = u + 1; v < plan.n; ++v) {
        const bool e = H.has_edge(u, v);
        if (in_v[u] && in_v[v]) {
          inside += 1.0;
          inside_edges += e;
        } else {
          outside += 1.0;
          outside_edges += e;
        }
      }
  }
  const auto z = binomial_z_test(inside_edges, inside, 0.5 - plan.mu1);
  TestOutcome o;
  o.name = "edge_frequency_in_V";
  o.statistic = z.statistic;
  o.p_value = z.p_value;
  o.samples = static_cast<std::size_t>(inside);
  o.min_samples = 10000;
  rep.tests.push_back(o);
  if (outside > 0.0) {
    const auto zo = binomial_z_test(outside_edges, outside, 0.5);
    TestOutcome oo;
    oo.name = "edge_frequency_outside_V";
    oo.statistic = zo.statistic;
    oo.p_value = zo.p_value;
    oo.samples = static_cast<std::size_t>(outside);
    oo.min_samples = 10000;
    rep.tests.push_back(oo);
  }
  finalize(rep, cfg.alpha);
  return rep;
}

// Null battery for k-PDS to GLSM with the sparse-PCA family: per-coordinate KS against Q = N(0,1).
inline VerifyReport verify_glsm(const VerifyConfig& cfg) {
  VerifyReport rep;
  rep.pipeline = "glsm";
  rep.seed = cfg.seed;
  const auto req = detail::request_from_params(Target::GLSM, cfg.params, 64, 4);
  const ReductionPlan plan = plan_parameters(req);
  detail::copy_plan(rep, plan);
  const double theta = detail::param_or<double>(cfg.params, "theta", 1e-3);
  rep.params["theta"] = theta;
  const std::size_t trials = cfg.trials ? cfg.trials : 150;
  rep.params["trials"] = trials;
  PipelineOptions opt;
  opt.threads = cfg.threads;
  opt.fault = cfg.fault;
  const auto family = sparse_pca_family(theta, static_cast<double>(plan.n), static_cast<double>(plan.k_prime));
  const DistSpec D = DistSpec::gaussian(0.0, 1.0 / std::sqrt(3.0 * std::log(static_cast<double>(plan.n))));
  const RngStream root(cfg.seed);
  const auto E = VertexPartition::contiguous(plan.N, plan.k_prime);
  std::vector<RealMatrix> runs;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream gr = root.substream("h0-graph", t);
    const Graph G = sample_gnq(plan.N, plan.q, gr);
    runs.push_back(pds_to_glsm(G, E, plan, family, D, root.substream("h0-run", t), opt).samples);
  }
  const RealMatrix pooled = detail::stack(runs);
  auto ks = ks_per_coordinate(pooled, normal_cdf);
  ks.min_samples = 1000;
  rep.tests.push_back(ks);
  const auto coords = spread_indices(plan.d, 64);
  const RealMatrix C = second_moments(pooled, coords);
  for (auto test : {covariance_offdiag(C, pooled.rows()), covariance_diag(C, pooled.rows())}) {
    test.min_samples = 1000;
    rep.tests.push_back(test);
  }
  finalize(rep, cfg.alpha);
  return rep;
}

using Battery = std::function<VerifyReport(const VerifyConfig&)>;

inline const std::map<std::string, Battery>& battery_registry() {
  static const std::map<std::string, Battery> registry = {
      {"isgm", verify_isgm}, {"semi-cr", verify_semi_cr}, {"glsm", verify_glsm}};
  return registry;
}

inline VerifyReport verify_reduction(const VerifyConfig& cfg) {
  const auto& reg = battery_registry();
  const auto it = reg.find(cfg.pipeline);
  if (it == reg.end()) throw ParameterError("verify: unknown pipeline " + cfg.pipeline);
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "verify: alpha must lie in (0,1)");
  return it->second(cfg);
}

}  // namespace avgcase
