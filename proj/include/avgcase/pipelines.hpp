#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avgcase/distributions.hpp"
#include "avgcase/errors.hpp"
#include "avgcase/geometry.hpp"
#include "avgcase/graph.hpp"
#include "avgcase/graph_models.hpp"
#include "avgcase/kernels.hpp"
#include "avgcase/matrix.hpp"
#include "avgcase/parallel.hpp"
#include "avgcase/plan.hpp"
#include "avgcase/rng.hpp"

namespace avgcase {

enum class Fault { None, NonOrthonormalRotation };

struct PipelineOptions {
  std::size_t threads = 1;
  bool allow_unproven = false;
  Fault fault = Fault::None;
};

// Rows are samples: samples(i, j) is coordinate j of sample i.
struct IsgmInstance {
  RealMatrix samples;
  PlantedTrace trace;
};

namespace detail {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstBlock = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;
using MutBlock = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;

inline std::string bits_label(std::uint32_t v, std::size_t t) {
  std::string s;
  for (std::size_t c = 0; c < t; ++c) s += ((v >> c) & 1U) ? '1' : '0';
  return s;
}

// Rotation matrix used by the pipelines; the fault adds each row to the next one.
inline RealMatrix rotation_values(const IncidenceMatrix& H, Fault fault) {
  RealMatrix out = H.values;
  if (fault == Fault::NonOrthonormalRotation)
    for (std::size_t i = 0; i + 1 < H.rows; ++i)
      for (std::size_t j = 0; j < H.cols; ++j) out(i, j) += H.values(i + 1, j);
  return out;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Graph cloning

// Per-pair output pmfs over {0,1}^t; outcome v is a bitmask with bit c set when clone c has the edge.
struct ClonePmfs {
  std::size_t copies = 0;
  std::vector<double> present, absent;
};

inline ClonePmfs clone_pmfs(std::size_t copies, double p, double q, double P, double Q) {
  require(copies >= 1 && copies <= 16, "graph_clone: copies must lie in [1, 16]");
  check_edge_probs(p, q);
  check_edge_probs(P, Q);
  const double t = static_cast<double>(copies);
  constexpr double tol = 1e-12;
  if ((1.0 - p) / (1.0 - q) > std::pow((1.0 - P) / (1.0 - Q), t) * (1.0 + tol))
    throw ParameterError("graph_clone: need (1-p)/(1-q) <= ((1-P)/(1-Q))^t");
  if (std::pow(P / Q, t) > (p / q) * (1.0 + tol)) throw ParameterError("graph_clone: need (P/Q)^t <= p/q");
  ClonePmfs out;
  out.copies = copies;
  const std::size_t outcomes = std::size_t{1} << copies;
  out.present.resize(outcomes);
  out.absent.resize(outcomes);
  auto mass = [&](double x, int ones) { return std::pow(x, ones) * std::pow(1.0 - x, static_cast<int>(copies) - ones); };
  for (std::size_t v = 0; v < outcomes; ++v) {
    const int ones = std::popcount(static_cast<std::uint32_t>(v));
    const double a = mass(P, ones), b = mass(Q, ones);
    double pres = ((1.0 - q) * a - (1.0 - p) * b) / (p - q);
    double abs = (p * b - q * a) / (p - q);
    for (double* x : {&pres, &abs}) {
      if (*x < -tol)
        throw ParameterError("graph_clone: negative mass " + std::to_string(*x) + " at v=" +
                             detail::bits_label(static_cast<std::uint32_t>(v), copies));
      *x = std::max(*x, 0.0);
    }
    out.present[v] = pres;
    out.absent[v] = abs;
  }
  for (const auto* pmf : {&out.present, &out.absent}) {
    double s = 0.0;
    for (double x : *pmf) s += x;
    require(std::abs(s - 1.0) <= 1e-10, "graph_clone: pmf does not sum to 1");
  }
  return out;
}

// Draws one outcome per pair; returns `copies` graphs on the same vertex set.
inline std::vector<Graph> graph_clone(const Graph& G, std::size_t copies, double p, double q, double P, double Q,
                                      RngStream& rng) {
  const ClonePmfs pmfs = clone_pmfs(copies, p, q, P, Q);
  auto cumulative = [](const std::vector<double>& pmf) {
    std::vector<double> c(pmf.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) c[i] = (s += pmf[i]);
    c.back() = 1.0;
    return c;
  };
  const auto cp = cumulative(pmfs.present), ca = cumulative(pmfs.absent);
  std::vector<Graph> out(copies, Graph(G.n()));
  for (std::size_t u = 0; u < G.n(); ++u)
    for (std::size_t v = u + 1; v < G.n(); ++v) {
      const auto& c = G.has_edge(u, v) ? cp : ca;
      const double x = rng.uniform();
      const auto outcome = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), x) - c.begin());
      for (std::size_t t = 0; t < copies; ++t)
        if ((outcome >> t) & 1U) out[t].set_edge(u, v);
    }
  return out;
}

// ---------------------------------------------------------------------------
// k-partite Bernoulli submatrix

struct KPartiteResult {
  BinaryMatrix matrix;        // m x m
  VertexPartition partition;  // contiguous parts F of [m]
  std::vector<std::size_t> lineage;  // original vertex -> row/column index
  PlantedTrace trace;
};

inline KPartiteResult to_k_partite_submatrix(const Graph& G, const VertexPartition& E, double p, double q,
                                             std::size_t m, RngStream rng, bool allow_unproven = false,
                                             const PlantedTrace* input = nullptr) {
  check_edge_probs(p, q);
  const std::size_t N = G.n(), k = E.k();
  require(E.n() == N, "submatrix: partition size must match the graph");
  require(N % k == 0, "k must divide N");
  require(m % k == 0, "k must divide m");
  require(m >= N, "submatrix: need m >= N");
  const double Q = cloned_density(p, q);
  if (!allow_unproven && static_cast<double>(m) < (p / Q + 1.0) * static_cast<double>(N))
    throw ParameterError("submatrix: need m >= (p/Q + 1) N");

  RngStream clone_rng = rng.substream("clone");
  const auto clones = graph_clone(G, 2, p, q, p, Q, clone_rng);

  KPartiteResult res;
  res.matrix = BinaryMatrix(m, m);
  RngStream noise = rng.substream("noise");
  for (auto& x : res.matrix.values()) x = noise.bernoulli(Q) ? 1 : 0;
  res.partition = VertexPartition::contiguous(m, k);
  res.lineage.assign(N, 0);

  const std::size_t part_in = N / k, part_out = m / k, spare = (m - N) / k;
  for (std::size_t t = 0; t < k; ++t) {
    RngStream pr = rng.substream("part", t);
    const auto s1 = static_cast<std::size_t>(sample_binomial(part_in, p, pr));
    const auto s2 = static_cast<std::size_t>(sample_binomial(part_out, Q, pr));
    const auto slots = random_subset(part_out, part_in, pr);  // ordered: E_t[j] -> F_t[slots[j]]
    const auto& Et = E.part(t);
    std::vector<char> used(part_out, 0);
    for (std::size_t j = 0; j < part_in; ++j) {
      res.lineage[Et[j]] = t * part_out + slots[j];
      used[slots[j]] = 1;
    }
    for (std::size_t j = 0; j < part_out; ++j) res.matrix(t * part_out + j, t * part_out + j) = 0;
    for (std::size_t idx : random_subset(part_in, s1, pr)) {
      const std::size_t i = t * part_out + slots[idx];
      res.matrix(i, i) = 1;
    }
    std::vector<std::size_t> free_slots;
    for (std::size_t j = 0; j < part_out; ++j)
      if (!used[j]) free_slots.push_back(t * part_out + j);
    const std::size_t t2 = std::min(s2 > s1 ? s2 - s1 : 0, spare);
    for (std::size_t i : random_subset_of(free_slots, t2, pr)) res.matrix(i, i) = 1;
  }
  for (std::size_t u = 0; u < N; ++u)
    for (std::size_t v = 0; v < N; ++v) {
      if (u == v) continue;
      const std::size_t i = res.lineage[u], j = res.lineage[v];
      res.matrix(i, j) = (i < j ? clones[0] : clones[1]).has_edge(u, v) ? 1 : 0;
    }

  res.trace.seed = rng.seed();
  res.trace.params = {{"p", p}, {"q", q}, {"Q", Q}, {"m", double(m)}, {"k", double(k)}};
  if (input && input->planted_set) {
    std::vector<std::size_t> U;
    for (std::size_t v : *input->planted_set) U.push_back(res.lineage.at(v));
    std::sort(U.begin(), U.end());
    res.trace.planted_set = U;
  }
  return res;
}

// ---------------------------------------------------------------------------
// k-PDS to ISGM

inline IsgmInstance pds_to_isgm(const Graph& G, const VertexPartition& E, const ReductionPlan& plan, RngStream rng,
                                const PipelineOptions& opt = {}, const PlantedTrace* input = nullptr) {
  require(G.n() == plan.N, "pds_to_isgm: graph size does not match the plan");
  require(E.k() == plan.k_prime, "pds_to_isgm: part count does not match the plan");
  require(is_prime(plan.r), "pds_to_isgm: r must be prime");
  const PrimePower pp(plan.r, plan.t);
  const std::size_t k = plan.k_prime, m = plan.m, rt = pp.points(), ell = pp.hyperplanes();
  require(m % k == 0, "k must divide m");
  require(k * rt >= m, "pds_to_isgm: need k r^t >= m");
  require(plan.n >= 1 && plan.n <= k * ell, "pds_to_isgm: need 1 <= n <= k(r^t-1)/(r-1)");
  require(plan.d >= m, "pds_to_isgm: need d >= m");
  require(plan.mu >= 0.0, "pds_to_isgm: mu must be nonnegative");

  // Step 1.
  auto sub = to_k_partite_submatrix(G, E, plan.p, plan.q, m, rng.substream("submatrix"), opt.allow_unproven, input);

  // Step 2: pad each part to r^t columns and permute.
  const std::size_t part = m / k, wide = k * rt;
  std::vector<std::vector<std::size_t>> slot(k);
  for (std::size_t i = 0; i < k; ++i) {
    RngStream sr = rng.substream("slots", i);
    slot[i] = random_permutation(rt, sr);
  }
  RngStream rr = rng.substream("rows");
  const auto row_of = random_permutation(m, rr);
  BinaryMatrix padded(m, wide);
  std::vector<char> original(wide, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < part; ++j) original[i * rt + slot[i][j]] = 1;
  for (std::size_t c = 0; c < wide; ++c) {
    if (original[c]) continue;
    RngStream pad = rng.substream("pad", c);
    for (std::size_t row = 0; row < m; ++row) padded(row, c) = pad.bernoulli(plan.Q) ? 1 : 0;
  }
  for (std::size_t row = 0; row < m; ++row)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < part; ++j)
        padded(row_of[row], i * rt + slot[i][j]) = sub.matrix(row, i * part + j);

  // Step 3.
  const double scale = std::sqrt(static_cast<double>(rt) * static_cast<double>(plan.r - 1));
  GaussianizeOptions gopt;
  gopt.allow_unproven = opt.allow_unproven;
  gopt.threads = opt.threads;
  const RealMatrix gauss = gaussianize(padded, plan.p, plan.Q, plan.mu * scale, rng.substream("gauss"), gopt);

  // Steps 4-5: rotate each part by H^T.
  const IncidenceMatrix H = build_H(pp);
  const RealMatrix Hv = detail::rotation_values(H, opt.fault);
  const detail::ConstBlock Hmap(Hv.data(), static_cast<Eigen::Index>(ell), static_cast<Eigen::Index>(rt),
                                Eigen::OuterStride<>(static_cast<Eigen::Index>(rt)));
  RealMatrix rotated(m, k * ell);
  parallel_for(k, opt.threads, [&](std::size_t i) {
    const detail::ConstBlock in(gauss.data() + i * rt, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(rt),
                                Eigen::OuterStride<>(static_cast<Eigen::Index>(wide)));
    detail::MutBlock out(rotated.data() + i * ell, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(ell),
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(k * ell)));
    out.noalias() = in * Hmap.transpose();
  });

  // Step 6: subsample columns and embed the m rows into d coordinates.
  RngStream cr = rng.substream("columns");
  const auto cols = random_subset(k * ell, plan.n, cr);
  RngStream er = rng.substream("embed");
  const auto coord_of = random_subset(plan.d, m, er);
  std::vector<char> embedded(plan.d, 0);
  for (std::size_t c : coord_of) embedded[c] = 1;

  IsgmInstance out;
  out.samples = RealMatrix(plan.n, plan.d);
  parallel_for(plan.n, opt.threads, [&](std::size_t s) {
    RngStream fill = rng.substream("fill", s);
    auto row = out.samples.row(s);
    for (std::size_t c = 0; c < plan.d; ++c)
      if (!embedded[c]) row[c] = fill.normal();
    for (std::size_t r = 0; r < m; ++r) row[coord_of[r]] = rotated(r, cols[s]);
  });

  auto& tr = out.trace;
  tr.seed = rng.seed();
  tr.params = {{"mu", plan.mu}, {"mu_prime", plan.mu_prime()}, {"eps", plan.eps}, {"r", double(plan.r)},
               {"t", double(plan.t)}, {"m", double(m)}, {"n", double(plan.n)}, {"d", double(plan.d)},
               {"k", double(k)}};
  if (input && input->planted_set) {
    std::vector<std::size_t> S;
    std::vector<std::size_t> planted_slot(k, 0);
    for (std::size_t v : *input->planted_set) {
      const std::size_t idx = sub.lineage.at(v);
      S.push_back(coord_of[row_of[idx]]);
      planted_slot[idx / part] = slot[idx / part][idx % part];
    }
    std::sort(S.begin(), S.end());
    tr.planted_set = S;
    std::vector<std::size_t> positive;
    for (std::size_t s = 0; s < plan.n; ++s) {
      const std::size_t i = cols[s] / ell, j = cols[s] % ell;
      if (!H.on_plane(j, planted_slot[i])) positive.push_back(s);
    }
    tr.component_set = positive;
  }
  return out;
}

// Direct ISGM sampler: S uniform of size k; each sample has mean mu on S w.p. 1-eps, else mu'.
inline IsgmInstance sample_isgm(std::size_t n, std::size_t d, std::size_t k, double mu, double eps, RngStream& rng) {
  require(k <= d, "sample_isgm: need k <= d");
  require(eps > 0.0 && eps < 1.0, "sample_isgm: eps must lie in (0,1)");
  IsgmInstance out;
  const double mu_prime = -mu * (1.0 - eps) / eps;
  auto S = random_subset(d, k, rng);
  std::sort(S.begin(), S.end());
  out.samples = RealMatrix(n, d);
  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < n; ++i) {
    const bool neg = rng.bernoulli(eps);
    if (!neg) positive.push_back(i);
    auto row = out.samples.row(i);
    for (auto& x : row) x = rng.normal();
    for (std::size_t c : S) row[c] += neg ? mu_prime : mu;
  }
  out.trace.seed = rng.seed();
  out.trace.planted_set = S;
  out.trace.component_set = positive;
  out.trace.params = {{"mu", mu}, {"mu_prime", mu_prime}, {"eps", eps}, {"n", double(n)}, {"d", double(d)},
                      {"k", double(k)}};
  return out;
}

// Doubles the sample set ell times via (X+G)/sqrt2, (X-G)/sqrt2 and keeps a uniform n_prime subset.
inline IsgmInstance isgm_sample_clone(const IsgmInstance& X, std::size_t ell, std::size_t n_prime, RngStream& rng) {
  require(ell <= 30, "sample cloning: ell too large");
  const std::size_t n = X.samples.rows(), d = X.samples.cols();
  require(n_prime <= (n << ell), "sample cloning: need n' <= 2^ell n");
  RealMatrix cur = X.samples;
  std::vector<char> positive(n, 0);
  if (X.trace.component_set)
    for (std::size_t i : *X.trace.component_set) positive.at(i) = 1;
  for (std::size_t round = 0; round < ell; ++round) {
    RngStream gr = rng.substream("clone", round);
    RealMatrix next(cur.rows() * 2, d);
    std::vector<char> next_pos(cur.rows() * 2);
    for (std::size_t i = 0; i < cur.rows(); ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        const double g = gr.normal();
        next(2 * i, c) = (cur(i, c) + g) / std::numbers::sqrt2;
        next(2 * i + 1, c) = (cur(i, c) - g) / std::numbers::sqrt2;
      }
      next_pos[2 * i] = next_pos[2 * i + 1] = positive[i];
    }
    cur = std::move(next);
    positive = std::move(next_pos);
  }
  const auto before = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
  RngStream sr = rng.substream("subsample");
  const auto keep = random_subset(cur.rows(), n_prime, sr);
  IsgmInstance out;
  out.samples = RealMatrix(n_prime, d);
  std::vector<std::size_t> comp;
  for (std::size_t i = 0; i < n_prime; ++i) {
    std::copy(cur.row(keep[i]).begin(), cur.row(keep[i]).end(), out.samples.row(i).begin());
    if (positive[keep[i]]) comp.push_back(i);
  }
  out.trace = X.trace;
  out.trace.seed = rng.seed();
  if (X.trace.component_set) out.trace.component_set = comp;
  const double shrink = std::pow(2.0, -0.5 * static_cast<double>(ell));
  for (const char* key : {"mu", "mu_prime"})
    if (auto it = out.trace.params.find(key); it != out.trace.params.end()) it->second *= shrink;
  out.trace.params["n"] = static_cast<double>(n_prime);
  out.trace.params["positive_before_subsample"] = before;
  return out;
}

// ---------------------------------------------------------------------------
// k-PDS to semirandom community recovery

// Two-sided rotation of every B x B block with H_{3,ell}; B = 3^ell. Output has (B-1)/2 rows per block.
inline RealMatrix block_rotate(const RealMatrix& padded, std::size_t ell, Fault fault = Fault::None,
                               std::size_t threads = 1) {
  const PrimePower pp(3, ell);
  const std::size_t B = pp.points(), h = pp.hyperplanes();
  require(padded.rows() == padded.cols() && padded.rows() % B == 0, "block rotation: size must be a multiple of 3^ell");
  const std::size_t blocks = padded.rows() / B, out_n = blocks * h;
  const IncidenceMatrix H = build_H(pp);
  const RealMatrix Hv = detail::rotation_values(H, fault);
  const detail::ConstBlock Hmap(Hv.data(), static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(B),
                                Eigen::OuterStride<>(static_cast<Eigen::Index>(B)));
  const auto n_in = static_cast<Eigen::Index>(padded.rows());
  RealMatrix right(padded.rows(), out_n);  // padded * blockdiag(H^T)
  parallel_for(blocks, threads, [&](std::size_t b) {
    const detail::ConstBlock in(padded.data() + b * B, n_in, static_cast<Eigen::Index>(B), Eigen::OuterStride<>(n_in));
    detail::MutBlock out(right.data() + b * h, n_in, static_cast<Eigen::Index>(h),
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(out_n)));
    out.noalias() = in * Hmap.transpose();
  });
  RealMatrix rotated(out_n, out_n);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const detail::ConstBlock in(right.data() + b * B * out_n, static_cast<Eigen::Index>(B),
                                static_cast<Eigen::Index>(out_n), Eigen::OuterStride<>(static_cast<Eigen::Index>(out_n)));
    detail::MutBlock out(rotated.data() + b * h * out_n, static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(out_n),
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(out_n)));
    out.noalias() = Hmap * in;
  });
  return rotated;
}

// Graph with edge {i,j}, i < j, iff M(i,j) >= threshold.
inline Graph threshold_upper(const RealMatrix& M, double threshold) {
  require(M.rows() == M.cols(), "threshold: matrix must be square");
  Graph g(M.rows());
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = i + 1; j < M.cols(); ++j)
      if (M(i, j) >= threshold) g.set_edge(i, j);
  return g;
}

inline Graph block_rotate_threshold(const RealMatrix& padded, std::size_t ell, double threshold,
                                    Fault fault = Fault::None, std::size_t threads = 1) {
  return threshold_upper(block_rotate(padded, ell, fault, threads), threshold);
}

inline std::pair<Graph, PlantedTrace> pds_to_semi_cr(const Graph& G, const VertexPartition& E,
                                                     const ReductionPlan& plan, RngStream rng,
                                                     const PipelineOptions& opt = {},
                                                     const PlantedTrace* input = nullptr) {
  require(plan.target == Target::SEMI_CR, "pds_to_semi_cr: plan must target SEMI_CR");
  require(G.n() == plan.N && E.k() == plan.k_prime, "pds_to_semi_cr: graph does not match the plan");
  const std::size_t k = plan.k_prime, m = plan.m, ell = plan.ell;
  const std::size_t B = static_cast<std::size_t>(checked_pow(3, ell)), h = (B - 1) / 2;
  require(m % ((B - 1) * k) == 0, "pds_to_semi_cr: need (3^ell - 1) k to divide m");
  const std::size_t s = m / ((B - 1) * k), part = m / k, blocks = k * s, m_pad = blocks * B, m_rot = blocks * h;
  require(plan.n >= m_rot, "pds_to_semi_cr: need n >= m''");

  auto sub = to_k_partite_submatrix(G, E, plan.p, plan.q, m, rng.substream("submatrix"), opt.allow_unproven, input);
  GaussianizeOptions gopt;
  gopt.allow_unproven = opt.allow_unproven;
  gopt.threads = opt.threads;
  const RealMatrix gauss = gaussianize(sub.matrix, plan.p, plan.Q, plan.mu, rng.substream("gauss"), gopt);

  // Original index -> padded index; position 0 of every block is a fresh row and column.
  auto padded_index = [&](std::size_t o) {
    const std::size_t i = o / part, rem = o % part, j = rem / (B - 1), pos = rem % (B - 1) + 1;
    return (i * s + j) * B + pos;
  };
  std::vector<std::size_t> to_pad(m);
  for (std::size_t o = 0; o < m; ++o) to_pad[o] = padded_index(o);
  RealMatrix padded(m_pad, m_pad);
  for (std::size_t a = 0; a < m_pad; ++a) {
    RngStream pr = rng.substream("pad-row", a);
    for (std::size_t c = 0; c < m_pad; ++c)
      if (a % B == 0 || c % B == 0) padded(a, c) = pr.normal();
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) padded(to_pad[i], to_pad[j]) = gauss(i, j);

  const Graph core = block_rotate_threshold(padded, ell, plan.threshold, opt.fault, opt.threads);

  RngStream lr = rng.substream("labels");
  const auto label = random_permutation(plan.n, lr);
  Graph out(plan.n);
  RngStream er = rng.substream("pad-edges");
  for (std::size_t u = 0; u < plan.n; ++u)
    for (std::size_t v = u + 1; v < plan.n; ++v) {
      const bool present = v < m_rot ? core.has_edge(u, v) : er.bernoulli(0.5);
      if (present) out.set_edge(label[u], label[v]);
    }

  PlantedTrace tr;
  tr.seed = rng.seed();
  tr.params = {{"mu", plan.mu},         {"mu1", plan.mu1}, {"mu2", plan.mu2},
               {"mu3", plan.mu3},       {"threshold", plan.threshold}, {"ell", double(ell)},
               {"m", double(m)},        {"m_rotated", double(m_rot)},  {"n", double(plan.n)}};
  std::vector<std::size_t> V;
  for (std::size_t v = 0; v < m_rot; ++v) V.push_back(label[v]);
  std::sort(V.begin(), V.end());
  tr.sets["V"] = V;
  if (input && input->planted_set) {
    const IncidenceMatrix H = build_H(PrimePower(3, ell));
    std::vector<std::size_t> S, S2;
    for (std::size_t v : *input->planted_set) {
      const std::size_t a = to_pad[sub.lineage.at(v)], b = a / B, pos = a % B;
      for (std::size_t row = 0; row < h; ++row) (H.on_plane(row, pos) ? S : S2).push_back(label[b * h + row]);
    }
    std::sort(S.begin(), S.end());
    std::sort(S2.begin(), S2.end());
    tr.planted_set = S;
    tr.sets["S_prime"] = S2;
  }
  return {std::move(out), std::move(tr)};
}

// ---------------------------------------------------------------------------
// Universality conditions

struct UcQuantiles {
  std::string law;
  double l1_median = 0.0, l1_q99 = 0.0, l1_max = 0.0;
  double l2_median = 0.0, l2_q99 = 0.0, l2_max = 0.0;
  double violation_rate = 0.0;
};

struct UcReport {
  double in_range_rate = 0.0;
  bool condition_i = false;
  bool condition_ii = false;
  double threshold = 0.0;
  std::vector<UcQuantiles> laws;  // L1 and L2 normalized by their bounds (values above 1 violate)
  std::vector<std::string> failed;
  [[nodiscard]] bool passes() const { return condition_i && condition_ii; }
};

// Monte Carlo check of P[nu in [-1,1]] and of |L1| <= 1/sqrt(k log n), |L2| <= 1/(k log n).
inline UcReport check_uc(std::size_t n, std::size_t k, std::size_t d, const DistSpec& D, const PairFamily& family,
                         std::size_t budget, RngStream rng, double threshold = 0.01) {
  require(n >= 2 && k >= 1 && d >= k, "check_uc: need n >= 2 and 1 <= k <= d");
  require(budget >= 1, "check_uc: sample budget must be positive");
  UcReport rep;
  rep.threshold = threshold;
  const double klog = static_cast<double>(k) * std::log(static_cast<double>(n));
  const double l1_bound = 1.0 / std::sqrt(klog), l2_bound = 1.0 / klog;

  std::size_t in_range = 0;
  std::vector<double> nus(budget);
  RngStream nr = rng.substream("nu");
  for (auto& nu : nus) {
    nu = sample(D, nr);
    if (std::abs(nu) <= 1.0) ++in_range;
    nu = std::clamp(nu, -1.0, 1.0);
  }
  rep.in_range_rate = static_cast<double>(in_range) / static_cast<double>(budget);
  rep.condition_i = rep.in_range_rate >= 1.0 - threshold;
  if (!rep.condition_i) rep.failed.push_back("(i) P[nu in [-1,1]] >= 1 - threshold");

  auto quantile = [](std::vector<double> v, double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
    return v[idx];
  };
  rep.condition_ii = true;
  const char* names[] = {"P_nu", "P_minus_nu", "Q"};
  for (int law = 0; law < 3; ++law) {
    RngStream xr = rng.substream("x", static_cast<std::uint64_t>(law));
    std::vector<double> l1(budget), l2(budget);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < budget; ++i) {
      const auto plus = family(nus[i]), minus = family(-nus[i]);
      const double x = law == 0 ? plus.sample_planted(xr) : law == 1 ? minus.sample_planted(xr) : plus.sample_noise(xr);
      const double lp = plus.likelihood_ratio(x), lm = minus.likelihood_ratio(x);
      l1[i] = std::abs(lp - lm) / l1_bound;
      l2[i] = std::abs(lp + lm - 2.0) / l2_bound;
      if (l1[i] > 1.0 || l2[i] > 1.0) ++bad;
    }
    UcQuantiles qs;
    qs.law = names[law];
    qs.l1_median = quantile(l1, 0.5);
    qs.l1_q99 = quantile(l1, 0.99);
    qs.l1_max = *std::max_element(l1.begin(), l1.end());
    qs.l2_median = quantile(l2, 0.5);
    qs.l2_q99 = quantile(l2, 0.99);
    qs.l2_max = *std::max_element(l2.begin(), l2.end());
    qs.violation_rate = static_cast<double>(bad) / static_cast<double>(budget);
    if (qs.violation_rate > threshold) {
      rep.condition_ii = false;
      rep.failed.push_back(std::string("(ii) likelihood-ratio bounds under ") + names[law]);
    }
    rep.laws.push_back(qs);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// k-PDS to general sparse mixtures

// Maps an ISGM instance with eps = 1/2 and mean mu through truncation and 3-srk.
// nu_i ~ D clamped to [-1,1]; planted coordinates of positive samples become P_nu, negative P_{-nu}.
inline IsgmInstance glsm_from_isgm(const IsgmInstance& X, const PairFamily& family, const DistSpec& D, double tau,
                                   double mu, std::size_t iterations, RngStream rng, std::size_t threads = 1) {
  require(tau > 0.0, "glsm: tau must be positive");
  require(iterations >= 1, "glsm: need at least one iteration");
  const TernParams tp = tern_params_from_truncation(tau, mu);
  const std::size_t n = X.samples.rows(), d = X.samples.cols();
  IsgmInstance out;
  out.samples = RealMatrix(n, d);
  std::vector<double> nus(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream nr = rng.substream("nu", i);
    nus[i] = std::clamp(sample(D, nr), -1.0, 1.0);
  }
  parallel_for(n, threads, [&](std::size_t i) {
    const auto plus = family(nus[i]), minus = family(-nus[i]);
    RngStream cr = rng.substream("srk", i);
    for (std::size_t j = 0; j < d; ++j)
      out.samples(i, j) = srk3(truncate_tern(X.samples(i, j), tau), plus, minus, tp, iterations, cr);
  });
  out.trace = X.trace;
  out.trace.seed = rng.seed();
  out.trace.series["nu"] = nus;
  out.trace.params["tau"] = tau;
  out.trace.params["a"] = tp.a;
  out.trace.params["tern_mu1"] = tp.mu1;
  out.trace.params["tern_mu2"] = tp.mu2;
  out.trace.params["srk_iterations"] = static_cast<double>(iterations);
  return out;
}

inline IsgmInstance pds_to_glsm(const Graph& G, const VertexPartition& E, const ReductionPlan& plan,
                                const PairFamily& family, const DistSpec& D, RngStream rng,
                                const PipelineOptions& opt = {}, const PlantedTrace* input = nullptr,
                                std::size_t uc_budget = 20000) {
  require(plan.target == Target::GLSM, "pds_to_glsm: plan must target GLSM");
  require(plan.r == 2, "pds_to_glsm: plan must use r = 2");
  if (!opt.allow_unproven) {
    const auto uc = check_uc(plan.n, plan.k_prime, plan.d, D, family, uc_budget, rng.substream("uc"));
    if (!uc.passes()) {
      std::string msg = "pds_to_glsm: universality condition failed:";
      for (const auto& f : uc.failed) msg += " " + f + ";";
      throw ParameterError(msg);
    }
  }
  const IsgmInstance isgm = pds_to_isgm(G, E, plan, rng.substream("isgm"), opt, input);
  const std::size_t iters = plan.srk_iterations
                                ? plan.srk_iterations
                                : static_cast<std::size_t>(std::ceil(
                                      4.0 * std::log(static_cast<double>(plan.d) * static_cast<double>(plan.n))));
  return glsm_from_isgm(isgm, family, D, plan.tau, plan.mu, iters, rng.substream("srk"), opt.threads);
}

}  // namespace avgcase
