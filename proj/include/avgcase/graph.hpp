#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avgcase/errors.hpp"

namespace avgcase {

// Simple undirected graph; adjacency is a packed upper-triangular bitset.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : n_(n), bits_((pair_count(n) + 63) / 64, 0) {}

  static std::size_t pair_count(std::size_t n) { return n * (n > 0 ? n - 1 : 0) / 2; }

  [[nodiscard]] std::size_t n() const { return n_; }

  [[nodiscard]] bool has_edge(std::size_t u, std::size_t v) const {
    if (u == v) return false;
    const std::size_t idx = index(u, v);
    return (bits_[idx >> 6] >> (idx & 63)) & 1U;
  }

  void set_edge(std::size_t u, std::size_t v, bool present = true) {
    require(u != v && u < n_ && v < n_, "Graph: invalid pair");
    const std::size_t idx = index(u, v);
    const std::uint64_t mask = std::uint64_t{1} << (idx & 63);
    if (present)
      bits_[idx >> 6] |= mask;
    else
      bits_[idx >> 6] &= ~mask;
  }

  [[nodiscard]] std::size_t edge_count() const {
    std::size_t c = 0;
    for (auto w : bits_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  // Edges as (u, v) with u < v in lexicographic order.
  [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v = u + 1; v < n_; ++v)
        if (has_edge(u, v)) out.emplace_back(u, v);
    return out;
  }

  bool operator==(const Graph&) const = default;

 private:
  [[nodiscard]] std::size_t index(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    return u * (2 * n_ - u - 1) / 2 + (v - u - 1);
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Partition of [n] into k equal parts.
class VertexPartition {
 public:
  VertexPartition() = default;

  explicit VertexPartition(std::vector<std::vector<std::size_t>> parts) : parts_(std::move(parts)) {
    require(!parts_.empty(), "partition needs at least one part");
    n_ = 0;
    for (const auto& p : parts_) n_ += p.size();
    part_of_.assign(n_, parts_.size());
    const std::size_t size = parts_.front().size();
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      require(parts_[i].size() == size, "partition parts must have equal size");
      for (std::size_t v : parts_[i]) {
        require(v < n_ && part_of_[v] == parts_.size(), "partition must cover [n] exactly once");
        part_of_[v] = i;
      }
    }
  }

  // Parts {0..n/k-1}, {n/k..2n/k-1}, ...
  static VertexPartition contiguous(std::size_t n, std::size_t k) {
    require(k > 0, "k must be positive");
    require(n % k == 0, "k must divide N");
    std::vector<std::vector<std::size_t>> parts(k);
    const std::size_t size = n / k;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < size; ++j) parts[i].push_back(i * size + j);
    return VertexPartition(std::move(parts));
  }

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::size_t k() const { return parts_.size(); }
  [[nodiscard]] std::size_t part_size() const { return parts_.empty() ? 0 : parts_.front().size(); }
  [[nodiscard]] std::size_t part_of(std::size_t v) const { return part_of_.at(v); }
  [[nodiscard]] const std::vector<std::size_t>& part(std::size_t i) const { return parts_.at(i); }
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& parts() const { return parts_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<std::size_t>> parts_;
  std::vector<std::size_t> part_of_;
};

// Ground-truth latent metadata. Carried next to an instance for verification only.
struct PlantedTrace {
  std::uint64_t seed = 0;
  std::optional<std::vector<std::size_t>> planted_set;
  std::optional<std::vector<std::size_t>> component_set;
  std::map<std::string, double> params;
  // Further named index sets (for example the second community of a target graph).
  std::map<std::string, std::vector<std::size_t>> sets;
  // Named real-valued per-index series (for example per-sample mixture weights).
  std::map<std::string, std::vector<double>> series;

  // Checks |S ∩ E_i| = 1 for every part.
  [[nodiscard]] bool consistent_with(const VertexPartition& E) const {
    if (!planted_set) return true;
    if (planted_set->size() != E.k()) return false;
    std::vector<int> hits(E.k(), 0);
    for (std::size_t v : *planted_set) {
      if (v >= E.n()) return false;
      ++hits[E.part_of(v)];
    }
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
  }
};

inline nlohmann::ordered_json trace_to_json(const PlantedTrace& t) {
  nlohmann::ordered_json j;
  j["seed"] = t.seed;
  j["planted_set"] = t.planted_set ? nlohmann::ordered_json(*t.planted_set) : nlohmann::ordered_json(nullptr);
  j["component_set"] =
      t.component_set ? nlohmann::ordered_json(*t.component_set) : nlohmann::ordered_json(nullptr);
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.params) j["params"][k] = v;
  if (!t.sets.empty()) {
    j["sets"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.sets) j["sets"][k] = v;
  }
  if (!t.series.empty()) {
    j["series"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.series) j["series"][k] = v;
  }
  return j;
}

inline PlantedTrace trace_from_json(const nlohmann::ordered_json& j) {
  PlantedTrace t;
  t.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("planted_set").is_null()) t.planted_set = j.at("planted_set").get<std::vector<std::size_t>>();
  if (!j.at("component_set").is_null())
    t.component_set = j.at("component_set").get<std::vector<std::size_t>>();
  for (const auto& [k, v] : j.at("params").items()) t.params[k] = v.get<double>();
  if (j.contains("sets"))
    for (const auto& [k, v] : j.at("sets").items()) t.sets[k] = v.get<std::vector<std::size_t>>();
  if (j.contains("series"))
    for (const auto& [k, v] : j.at("series").items()) t.series[k] = v.get<std::vector<double>>();
  return t;
}

inline void save_trace(const std::string& path, const PlantedTrace& t) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << trace_to_json(t).dump(2) << '\n';
}

inline PlantedTrace load_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return trace_from_json(nlohmann::ordered_json::parse(is));
}

// ---------------------------------------------------------------------------
// GRAPHv1 text format

inline void write_graph(std::ostream& os, const Graph& g) {
  os << "# GRAPHv1\n";
  os << "n=" << g.n() << " edges=" << g.edge_count() << '\n';
  for (std::size_t u = 0; u < g.n(); ++u)
    for (std::size_t v = u + 1; v < g.n(); ++v)
      if (g.has_edge(u, v)) os << u << ' ' << v << '\n';
}

inline Graph read_graph(std::istream& is) {
  std::string line;
  std::optional<Graph> g;
  std::size_t declared = 0;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!g) {
      std::size_t n = 0;
      if (std::sscanf(line.c_str() + first, "n=%zu edges=%zu", &n, &declared) != 2)
        throw FormatError("GRAPHv1: bad header line: " + line);
      g.emplace(n);
      continue;
    }
    std::istringstream ls(line);
    std::size_t u = 0, v = 0;
    if (!(ls >> u >> v) || u >= v || v >= g->n()) throw FormatError("GRAPHv1: bad edge line: " + line);
    g->set_edge(u, v);
  }
  if (!g) throw FormatError("GRAPHv1: missing header");
  if (g->edge_count() != declared) throw FormatError("GRAPHv1: edge count does not match header");
  return *g;
}

inline void save_graph(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_graph(os, g);
}

inline Graph load_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return read_graph(is);
}

}  // namespace avgcase
