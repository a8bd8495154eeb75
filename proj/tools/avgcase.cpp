#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "avgcase/avgcase.hpp"

namespace fs = std::filesystem;
using namespace avgcase;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Flags win over AVGCASE_* variables, which win over defaults.
fs::path out_dir(const Common& c) {
  fs::path dir = c.out.empty() ? fs::path(env_or("AVGCASE_OUT_DIR", ".")) : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

std::size_t thread_count(const Common& c) {
  if (c.threads) return c.threads;
  const std::string v = env_or("AVGCASE_THREADS", "1");
  try {
    const auto n = std::stoul(v);
    require(n >= 1, "AVGCASE_THREADS must be a positive integer");
    return n;
  } catch (const std::logic_error&) {
    throw ParameterError("AVGCASE_THREADS must be a positive integer");
  }
}

std::uint64_t required_seed(const Common& c) {
  if (!c.seed) throw ParameterError("--seed is required; no ambient randomness is used");
  return *c.seed;
}

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  if (with_seed) cmd->add_option("--seed", c.seed, "64-bit seed (required)");
  cmd->add_option("--out", c.out, "Output directory (env AVGCASE_OUT_DIR, default .)");
  cmd->add_option("--threads", c.threads, "Worker threads (env AVGCASE_THREADS, default 1)");
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  Common common;
  std::size_t n = 0, k = 0, k2 = 0, m = 0, d = 0;
  double p = 0.0, q = 0.5, mu = 0.0, eps = 0.5, mu1 = 0.0, mu2 = 0.0, mu3 = 0.0;
  bool h0 = false;
};

int run_generate(const std::string& problem, const GenerateArgs& a) {
  const std::uint64_t seed = required_seed(a.common);
  const fs::path dir = out_dir(a.common);
  RngStream rng(seed);
  if (problem == "gnq") {
    require(a.n >= 1, "gnq: --n must be positive");
    const Graph g = sample_gnq(a.n, a.q, rng);
    save_graph((dir / "graph.txt").string(), g);
    PlantedTrace tr;
    tr.seed = seed;
    tr.params = {{"n", double(a.n)}, {"q", a.q}};
    save_trace((dir / "trace.json").string(), tr);
    std::cout << "gnq n=" << a.n << " edges=" << g.edge_count() << '\n';
  } else if (problem == "kpds") {
    require(a.k >= 1, "kpds: --k must be positive");
    require(a.n % a.k == 0, "k must divide N");
    const auto E = VertexPartition::contiguous(a.n, a.k);
    const auto [g, tr] = sample_k_pds(a.n, a.k, a.p, a.q, E, rng);
    save_graph((dir / "graph.txt").string(), g);
    save_trace((dir / "trace.json").string(), tr);
    std::cout << "kpds n=" << a.n << " k=" << a.k << " edges=" << g.edge_count() << '\n';
  } else if (problem == "isgm") {
    const auto inst = sample_isgm(a.n, a.d, a.k, a.mu, a.eps, rng);
    save_amat((dir / "samples.amat").string(), inst.samples);
    save_trace((dir / "trace.json").string(), inst.trace);
    std::cout << "isgm n=" << a.n << " d=" << a.d << " k=" << a.k << '\n';
  } else if (problem == "tg") {
    const auto [g, tr] = a.h0 ? sample_tg_h0(a.n, a.m, a.mu1, rng)
                              : sample_tg_h1(a.n, a.k, a.k2, a.m, a.mu1, a.mu2, a.mu3, rng);
    save_graph((dir / "graph.txt").string(), g);
    save_trace((dir / "trace.json").string(), tr);
    std::cout << "tg n=" << a.n << " m=" << a.m << " edges=" << g.edge_count() << '\n';
  } else {
    throw ParameterError("unknown problem " + problem);
  }
  return kExitPass;
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceArgs {
  Common common;
  std::string input, trace;
  std::size_t k = 0;
  double p = 0.75, q = 0.25;
  bool plan_auto = false, allow_unproven = false;
  std::optional<std::uint64_t> r, t;
  std::optional<std::size_t> ell;
  std::size_t n = 0, d = 0;
  std::optional<double> mu;
  double eps = 0.0, w = 8.0, c = 1.0, tau = 1.0, theta = 1e-3, beta = 0.5;
};

int run_reduce(const std::string& pipeline, const ReduceArgs& a) {
  const std::uint64_t seed = required_seed(a.common);
  const Graph G = load_graph(a.input);
  std::optional<PlantedTrace> input;
  if (!a.trace.empty()) input = load_trace(a.trace);
  require(a.k >= 1, "--k must be positive");
  require(G.n() % a.k == 0, "k must divide N");
  const auto E = VertexPartition::contiguous(G.n(), a.k);

  PlanRequest req;
  req.N = G.n();
  req.k = a.k;
  req.p = a.p;
  req.q = a.q;
  req.r = a.r;
  req.t = a.t;
  req.ell = a.ell;
  req.n = a.n;
  req.d = a.d;
  req.mu = a.mu;
  req.eps = a.eps;
  req.w = a.w;
  req.c = a.c;
  req.tau = a.tau;
  req.beta = a.beta;
  if (pipeline == "isgm") {
    req.target = Target::ISGM;
    if (!a.plan_auto && !(a.r || a.eps > 0.0)) throw ParameterError("reduce isgm: give --plan-auto with --eps, or --r");
  } else if (pipeline == "semi-cr") {
    req.target = Target::SEMI_CR;
    if (!a.plan_auto && !a.ell) throw ParameterError("reduce semi-cr: give --plan-auto or --ell");
  } else if (pipeline == "glsm") {
    req.target = Target::GLSM;
  } else {
    throw ParameterError("unknown pipeline " + pipeline);
  }
  const ReductionPlan plan = plan_parameters(req);
  const fs::path dir = out_dir(a.common);
  write_json(dir / "plan.json", plan.to_json());

  PipelineOptions opt;
  opt.threads = thread_count(a.common);
  opt.allow_unproven = a.allow_unproven;
  const PlantedTrace* tp = input ? &*input : nullptr;
  const RngStream rng(seed);
  if (pipeline == "semi-cr") {
    const auto [H, tr] = pds_to_semi_cr(G, E, plan, rng, opt, tp);
    save_graph((dir / "graph.txt").string(), H);
    save_trace((dir / "trace.json").string(), tr);
    std::cout << "semi-cr n=" << plan.n << " m=" << plan.m << " ell=" << plan.ell << " edges=" << H.edge_count()
              << '\n';
    return kExitPass;
  }
  IsgmInstance inst;
  if (pipeline == "isgm") {
    inst = pds_to_isgm(G, E, plan, rng, opt, tp);
  } else {
    const auto family = sparse_pca_family(a.theta, static_cast<double>(plan.n), static_cast<double>(plan.k_prime));
    const DistSpec D = DistSpec::gaussian(0.0, 1.0 / std::sqrt(3.0 * std::log(static_cast<double>(plan.n))));
    inst = pds_to_glsm(G, E, plan, family, D, rng, opt, tp);
    inst.trace.params["theta"] = a.theta;
  }
  save_amat((dir / "samples.amat").string(), inst.samples);
  save_trace((dir / "trace.json").string(), inst.trace);
  std::cout << pipeline << " r=" << plan.r << " t=" << plan.t << " m=" << plan.m << " n=" << plan.n
            << " d=" << plan.d << " mu=" << plan.mu << '\n';
  return kExitPass;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  Common common;
  std::string pipeline = "isgm", params, fault = "none";
  std::size_t trials = 0;
  double alpha = 1e-4;
  bool planted = false;
};

int run_verify(const VerifyArgs& a) {
  VerifyConfig cfg;
  cfg.pipeline = a.pipeline;
  cfg.seed = a.common.seed.value_or(0);
  cfg.trials = a.trials;
  cfg.alpha = a.alpha;
  cfg.threads = thread_count(a.common);
  cfg.planted = a.planted;
  if (a.fault == "non-orthonormal")
    cfg.fault = Fault::NonOrthonormalRotation;
  else if (a.fault != "none")
    throw ParameterError("--fault must be none or non-orthonormal");
  if (!a.params.empty()) {
    std::string text = a.params;
    if (fs::exists(text)) {
      std::ifstream is(text);
      std::stringstream ss;
      ss << is.rdbuf();
      text = ss.str();
    }
    try {
      cfg.params = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError(std::string("--params is not valid JSON: ") + e.what());
    }
    require(cfg.params.is_object(), "--params must be a JSON object");
  }
  const VerifyReport rep = verify_reduction(cfg);
  const fs::path dir = out_dir(a.common);
  write_json(dir / "report.json", rep.to_json());
  for (const auto& t : rep.tests)
    std::cout << t.name << ": " << status_name(t.status) << " statistic=" << t.statistic << " p=" << t.p_value
              << '\n';
  std::cout << "verdict=" << status_name(rep.verdict) << '\n';
  return rep.verdict == TestStatus::Pass ? kExitPass : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// energy

struct EnergyArgs {
  std::size_t n = 0, k = 0, parts = 0, degree = 0;
  std::string signal = "pc";
};

int run_energy(const EnergyArgs& a) {
  const std::size_t parts = a.parts ? a.parts : a.k;
  require(parts == a.k, "energy: the planted prior places one vertex per part, so --parts must equal --k");
  EnergyQuery q;
  q.partition = VertexPartition::contiguous(a.n, parts);
  q.degree = a.degree;
  if (a.signal == "pc") {
    q.signal = EnergySignal::PlantedClique;
  } else if (a.signal.rfind("pds:", 0) == 0) {
    q.signal = EnergySignal::PlantedDense;
    try {
      q.p = std::stod(a.signal.substr(4));
    } catch (const std::logic_error&) {
      throw ParameterError("--signal pds:<p> needs a numeric p");
    }
    require(q.p >= 0.0 && q.p <= 1.0, "--signal pds:<p> needs p in [0,1]");
  } else {
    throw ParameterError("--signal must be pc or pds:<p>");
  }
  const double energy = low_degree_energy(q);
  std::cout.precision(17);
  std::cout << "energy=" << energy << '\n' << "bound=" << low_degree_energy_bound(q) << '\n';
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average-case reduction toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  std::string problem;
  auto* g = app.add_subcommand("generate", "Sample a problem instance");
  g->add_option("problem", problem, "gnq | kpds | isgm | tg")->required()->check(CLI::IsMember({"gnq", "kpds", "isgm", "tg"}));
  add_common(g, gen.common);
  g->add_option("--n", gen.n, "Vertices (graphs) or samples (isgm)");
  g->add_option("--k", gen.k, "Parts (kpds), planted size (tg), sparsity (isgm)");
  g->add_option("--k2", gen.k2, "Size of S' (tg)");
  g->add_option("--m", gen.m, "Size of V (tg)");
  g->add_option("--d", gen.d, "Dimension (isgm)");
  g->add_option("--p", gen.p, "Planted edge density (kpds)");
  g->add_option("--q", gen.q, "Base edge density (gnq, kpds)");
  g->add_option("--mu", gen.mu, "Mean on the support (isgm)");
  g->add_option("--eps", gen.eps, "Weight of the negative component (isgm)");
  g->add_option("--mu1", gen.mu1, "tg rate mu1");
  g->add_option("--mu2", gen.mu2, "tg rate mu2");
  g->add_option("--mu3", gen.mu3, "tg rate mu3");
  g->add_flag("--h0", gen.h0, "Sample the tg null law");

  ReduceArgs red;
  std::string pipeline;
  auto* r = app.add_subcommand("reduce", "Run a reduction on a GRAPHv1 input");
  r->add_option("pipeline", pipeline, "isgm | semi-cr | glsm")->required()->check(CLI::IsMember({"isgm", "semi-cr", "glsm"}));
  add_common(r, red.common);
  r->add_option("--in", red.input, "Input GRAPHv1 file")->required();
  r->add_option("--trace", red.trace, "Optional input trace; only used to report the output trace");
  r->add_option("--k", red.k, "Number of parts of the input")->required();
  r->add_option("--p", red.p, "Planted edge density");
  r->add_option("--q", red.q, "Base edge density");
  r->add_flag("--plan-auto", red.plan_auto, "Derive every plan parameter not given explicitly");
  r->add_option("--eps", red.eps, "Mixture weight; --plan-auto picks the smallest prime r > 1/eps");
  r->add_option("--r", red.r, "Prime r");
  r->add_option("--t", red.t, "Exponent t");
  r->add_option("--ell", red.ell, "Block exponent (semi-cr)");
  r->add_option("--beta", red.beta, "Exponent in ell = ceil(log3(N^beta / k)) (semi-cr auto plan)");
  r->add_option("--n", red.n, "Output sample count or vertex count");
  r->add_option("--d", red.d, "Output dimension");
  r->add_option("--mu", red.mu, "Mean override");
  r->add_option("--w", red.w, "Slow-growth factor w");
  r->add_option("--c", red.c, "Constant multiplying the mean bound");
  r->add_option("--tau", red.tau, "Truncation level (glsm)");
  r->add_option("--theta", red.theta, "Signal strength of the sparse-PCA family (glsm)");
  r->add_flag("--allow-unproven", red.allow_unproven, "Run outside the proven parameter regime");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Run a pipeline's statistical battery");
  add_common(v, ver.common);
  v->add_option("--pipeline", ver.pipeline, "isgm | semi-cr | glsm");
  v->add_option("--params", ver.params, "JSON object (or file) overriding battery parameters");
  v->add_option("--trials", ver.trials, "Pipeline reruns (0 selects the battery default)");
  v->add_option("--alpha", ver.alpha, "Family-wise significance level");
  v->add_flag("--planted", ver.planted, "Add the planted battery");
  v->add_option("--fault", ver.fault, "Fault injection: none | non-orthonormal");

  EnergyArgs en;
  auto* e = app.add_subcommand("energy", "Brute-force low-degree energy of the k-partite planted prior");
  e->add_option("--n", en.n, "Vertices")->required();
  e->add_option("--k", en.k, "Planted set size")->required();
  e->add_option("--parts", en.parts, "Parts of the partition (defaults to k)");
  e->add_option("--degree", en.degree, "Maximum degree D")->required();
  e->add_option("--signal", en.signal, "pc | pds:<p>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (g->parsed()) return run_generate(problem, gen);
    if (r->parsed()) return run_reduce(pipeline, red);
    if (v->parsed()) return run_verify(ver);
    if (e->parsed()) return run_energy(en);
  } catch (const ParameterError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const FeasibilityError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
