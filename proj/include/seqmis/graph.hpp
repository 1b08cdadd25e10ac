#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seqmis/degree.hpp"
#include "seqmis/errors.hpp"
#include "seqmis/rng.hpp"

namespace seqmis {

using Vertex = std::uint32_t;

/// Undirected multigraph. A multi-edge appears once per copy in both
/// endpoint lists; a self-loop is stored once in its owner's list and
/// contributes two to the owner's degree.
class MultiGraph {
 public:
  MultiGraph() = default;
  explicit MultiGraph(std::size_t n) : adj_(n), loops_(n, 0) {}

  std::size_t size() const { return adj_.size(); }

  void add_edge(Vertex u, Vertex v) {
    check(u);
    check(v);
    adj_[u].push_back(v);
    if (u != v) {
      adj_[v].push_back(u);
    } else {
      ++loops_[u];
    }
    ++edges_;
  }

  std::span<const Vertex> neighbors(Vertex v) const { return adj_[v]; }

  std::uint32_t degree(Vertex v) const { return static_cast<std::uint32_t>(adj_[v].size()) + loops_[v]; }

  std::uint32_t self_loops(Vertex v) const { return loops_[v]; }

  std::uint64_t edge_count() const { return edges_; }

  double mean_degree() const { return size() == 0 ? 0.0 : 2.0 * static_cast<double>(edges_) / size(); }

  /// Edges as (u, v) with u <= v, one entry per multi-edge copy, in adjacency order.
  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    out.reserve(edges_);
    for (Vertex u = 0; u < size(); ++u) {
      for (Vertex w : adj_[u]) {
        if (u <= w) out.emplace_back(u, w);
      }
    }
    return out;
  }

  bool operator==(const MultiGraph&) const = default;

 private:
  void check(Vertex v) const {
    if (v >= adj_.size()) throw InputError("vertex id " + std::to_string(v) + " out of range");
  }

  std::vector<std::vector<Vertex>> adj_;
  std::vector<std::uint32_t> loops_;
  std::uint64_t edges_ = 0;
};

/// Uniform random pairing of half-edges.
inline MultiGraph gen_configuration_model(const DegreeSequence& seq, std::uint64_t seed) {
  if (!seq.even()) throw InputError("configuration model needs an even degree sum");
  std::vector<Vertex> stubs;
  stubs.reserve(seq.total());
  for (Vertex v = 0; v < seq.size(); ++v) stubs.insert(stubs.end(), seq.degrees[v], v);
  Rng rng(seed);
  // Pair the first remaining stub with a uniformly chosen other remaining stub.
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    const std::size_t j = i + 1 + rng.below(stubs.size() - i - 1);
    std::swap(stubs[i + 1], stubs[j]);
  }
  MultiGraph g(seq.size());
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) g.add_edge(stubs[i], stubs[i + 1]);
  return g;
}

/// G(n, lambda/n) by geometric skipping over the n(n-1)/2 pairs.
inline MultiGraph gen_erdos_renyi(std::size_t n, double lambda, std::uint64_t seed) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
  if (lambda > static_cast<double>(n)) throw InputError("lambda must not exceed n");
  MultiGraph g(n);
  if (n < 2 || lambda == 0.0) return g;
  const double p = lambda / static_cast<double>(n);
  Rng rng(seed);
  if (p >= 1.0) {
    for (Vertex v = 1; v < n; ++v)
      for (Vertex w = 0; w < v; ++w) g.add_edge(w, v);
    return g;
  }
  const double log_q = std::log1p(-p);
  // Batagelj & Brandes enumeration of pairs (w < v).
  long long v = 1, w = -1;
  const long long nn = static_cast<long long>(n);
  while (v < nn) {
    const double r = 1.0 - rng.uniform();
    w += 1 + static_cast<long long>(std::floor(std::log(r) / log_q));
    while (w >= v && v < nn) {
      w -= v;
      ++v;
    }
    if (v < nn) g.add_edge(static_cast<Vertex>(w), static_cast<Vertex>(v));
  }
  return g;
}

inline DegreeSequence degree_sequence(const MultiGraph& g) {
  DegreeSequence seq;
  seq.degrees.resize(g.size());
  for (Vertex v = 0; v < g.size(); ++v) seq.degrees[v] = g.degree(v);
  return seq;
}

/// mass(k) = #{v : deg(v) = k}, or that count over n when normalized.
inline DegreeDistribution empirical_degree_measure(const MultiGraph& g, bool normalized) {
  if (g.size() == 0) return DegreeDistribution({0.0}, false);
  return DegreeDistribution::from_sequence(degree_sequence(g), normalized);
}

inline void write_edge_list(const MultiGraph& g, std::ostream& out) {
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

/// Reads `u v` lines (0-indexed). The vertex count is max id + 1 unless
/// `n` is given.
inline MultiGraph read_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
  std::vector<std::pair<Vertex, Vertex>> edges;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long u, v;
    std::string rest;
    if (!(ss >> u >> v) || (ss >> rest) || u < 0 || v < 0 || u > 0xffffffffLL || v > 0xffffffffLL) {
      throw InputError("edge list line " + std::to_string(lineno) + ": expected `u v`");
    }
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    max_id = std::max<std::size_t>({max_id, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    any = true;
  }
  const std::size_t count = n ? *n : (any ? max_id + 1 : 0);
  if (any && max_id >= count) throw InputError("edge list references a vertex beyond n");
  MultiGraph g(count);
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

inline MultiGraph load_edge_list(const std::string& path, std::optional<std::size_t> n = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list: " + path);
  return read_edge_list(in, n);
}

}  // namespace seqmis
