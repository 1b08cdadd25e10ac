#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqmis/degree.hpp"
#include "seqmis/errors.hpp"
#include "seqmis/graph.hpp"
#include "seqmis/rate.hpp"
#include "seqmis/rng.hpp"

namespace seqmis {

/// How the next unexplored vertex is chosen.
struct Policy {
  enum class Kind { uniform, min_degree, static_rate, dynamic_rate };

  Kind kind = Kind::uniform;
  /// Used by the rate kinds. static_rate reads the vertex's initial degree,
  /// dynamic_rate its current degree towards unexplored vertices.
  RateFunction rate = RateFunction::constant();

  static Policy uniform() { return {}; }
  static Policy min_degree() { return {Kind::min_degree, RateFunction::constant()}; }
  static Policy static_rate(RateFunction r) { return {Kind::static_rate, std::move(r)}; }
  static Policy dynamic_rate(RateFunction r) { return {Kind::dynamic_rate, std::move(r)}; }

  std::string name() const {
    switch (kind) {
      case Kind::uniform:
        return "greedy";
      case Kind::min_degree:
        return "min_degree";
      case Kind::static_rate:
        return "static(" + rate.describe() + ")";
      case Kind::dynamic_rate:
        return "dynamic(" + rate.describe() + ")";
    }
    return "?";
  }
};

/// `greedy`, `min_degree`, `static:L`, `dynamic:L`. The rate forms use
/// lambda(k) = (k+1)^{-L}, so a large positive L approximates degree-greedy.
inline Policy parse_policy(const std::string& s) {
  if (s == "greedy" || s == "uniform") return Policy::uniform();
  if (s == "min_degree" || s == "degree_greedy") return Policy::min_degree();
  const auto colon = s.find(':');
  if (colon != std::string::npos) {
    const std::string kind = s.substr(0, colon);
    double l;
    try {
      std::size_t used = 0;
      l = std::stod(s.substr(colon + 1), &used);
      if (used != s.size() - colon - 1) throw InputError("x");
    } catch (const std::exception&) {
      throw InputError("bad policy exponent: " + s);
    }
    if (kind == "static") return Policy::static_rate(RateFunction::power(-l));
    if (kind == "dynamic") return Policy::dynamic_rate(RateFunction::power(-l));
  }
  throw InputError("unknown policy: " + s);
}

struct Activation {
  double time;
  Vertex vertex;
  /// Degree towards unexplored vertices when selected.
  std::uint32_t degree;
};

struct MeasureSnapshot {
  double time;
  /// mu_t(k) / n over current unexplored degree k.
  std::vector<double> mu;
};

/// State of the unexplored graph the first time a vertex of degree >= 2 is chosen.
struct HighDegreeSelection {
  std::size_t step;
  double time;
  std::uint32_t degree;
  double remaining_fraction;
  /// sum k(k-1) mu(k) / sum k mu(k) over the unexplored graph at that instant.
  double subcrit_ratio;
};

struct ExplorationResult {
  std::size_t n = 0;
  std::vector<Vertex> active;
  std::vector<Vertex> blocked;
  double jamming = 0.0;
  double final_time = 0.0;
  std::vector<Activation> activation_log;
  /// Initial degree -> number of active vertices with that degree.
  std::vector<std::uint64_t> active_degree_hist;
  std::vector<MeasureSnapshot> snapshots;
  std::optional<HighDegreeSelection> first_high_degree;
  /// Lazy configuration-model runs only: the pairing that was realized.
  std::optional<MultiGraph> realized;
};

struct ExploreOptions {
  /// Virtual times at which mu_t is recorded; must be sorted.
  std::vector<double> snapshot_times;
  bool record_log = true;
  bool record_graph = false;
};

/// `points` evenly spaced times on [0, t_end].
inline std::vector<double> even_time_grid(double t_end, std::size_t points = 200) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = points == 1 ? 0.0 : t_end * i / (points - 1);
  return g;
}

namespace detail {

/// Vertices grouped by an integer key with O(1) insert/erase/move and
/// tracking of the smallest and largest non-empty key.
class BucketSet {
 public:
  void reset(std::size_t vertices, std::size_t keys) {
    buckets_.assign(keys, {});
    key_.assign(vertices, 0);
    pos_.assign(vertices, 0);
    lo_ = keys;
    hi_ = 0;
    size_ = 0;
  }

  void insert(Vertex v, std::size_t key) {
    key_[v] = static_cast<std::uint32_t>(key);
    pos_[v] = static_cast<std::uint32_t>(buckets_[key].size());
    buckets_[key].push_back(v);
    lo_ = std::min(lo_, key);
    hi_ = std::max(hi_, key);
    ++size_;
  }

  void erase(Vertex v) {
    auto& b = buckets_[key_[v]];
    const Vertex last = b.back();
    b[pos_[v]] = last;
    pos_[last] = pos_[v];
    b.pop_back();
    --size_;
    if (size_ == 0) {
      lo_ = buckets_.size();
      hi_ = 0;
      return;
    }
    while (buckets_[lo_].empty()) ++lo_;
    while (buckets_[hi_].empty()) --hi_;
  }

  void move(Vertex v, std::size_t key) {
    if (key_[v] == key) return;
    erase(v);
    insert(v, key);
  }

  std::size_t size() const { return size_; }
  std::size_t count(std::size_t key) const { return buckets_[key].size(); }
  std::size_t lo() const { return lo_; }
  std::size_t hi() const { return hi_; }
  Vertex pick(std::size_t key, Rng& rng) const { return buckets_[key][rng.below(buckets_[key].size())]; }

 private:
  std::vector<std::vector<Vertex>> buckets_;
  std::vector<std::uint32_t> key_;
  std::vector<std::uint32_t> pos_;
  std::size_t lo_ = 0;
  std::size_t hi_ = 0;
  std::size_t size_ = 0;
};

enum class State : std::uint8_t { unexplored, active, blocked };

/// Selection machinery shared by the fixed-graph and lazy runs.
class ExplorationCore {
 public:
  ExplorationCore(const Policy& policy, std::vector<std::uint32_t> initial_degree, const ExploreOptions& opts)
      : policy_(policy), initial_(std::move(initial_degree)), opts_(opts) {
    const std::size_t n = initial_.size();
    current_ = initial_;
    state_.assign(n, State::unexplored);
    const std::uint32_t kmax = initial_.empty() ? 0 : *std::max_element(initial_.begin(), initial_.end());
    hist_.assign(kmax + 1, 0);
    buckets_.reset(n, kmax + 1);
    if (policy_.kind == Policy::Kind::static_rate || policy_.kind == Policy::Kind::dynamic_rate) {
      log_rate_.resize(kmax + 1);
      for (std::size_t k = 0; k <= kmax; ++k) {
        log_rate_[k] = policy_.rate.log_rate(k);
        if (!std::isfinite(log_rate_[k])) throw InputError("rate must be positive and finite on the support");
      }
    }
    for (Vertex v = 0; v < n; ++v) {
      ++hist_[initial_[v]];
      buckets_.insert(v, key_for(v));
    }
    result_.n = n;
    result_.active_degree_hist.assign(kmax + 1, 0);
  }

  bool done() const { return buckets_.size() == 0; }
  State state(Vertex v) const { return state_[v]; }
  std::uint32_t current_degree(Vertex v) const { return current_[v]; }

  /// Chooses the next vertex, advances virtual time and records it as active.
  Vertex activate_next(Rng& rng) {
    const Vertex v = select(rng);
    advance_snapshots(time_);
    if (!result_.first_high_degree && current_[v] >= 2) note_high_degree(current_[v]);
    if (opts_.record_log) result_.activation_log.push_back({time_, v, current_[v]});
    result_.active.push_back(v);
    ++result_.active_degree_hist[initial_[v]];
    leave(v, State::active);
    return v;
  }

  void block(Vertex v) {
    result_.blocked.push_back(v);
    leave(v, State::blocked);
  }

  /// One fewer edge from an unexplored vertex to the unexplored graph.
  void lose_edge(Vertex v) {
    --hist_[current_[v]];
    --current_[v];
    ++hist_[current_[v]];
    if (keyed_by_current()) buckets_.move(v, current_[v]);
  }

  ExplorationResult finish() {
    advance_snapshots(std::numeric_limits<double>::infinity());
    auto& r = result_;
    r.final_time = time_;
    r.jamming = r.n == 0 ? 0.0 : static_cast<double>(r.active.size()) / static_cast<double>(r.n);
    std::sort(r.active.begin(), r.active.end());
    std::sort(r.blocked.begin(), r.blocked.end());
    return std::move(r);
  }

 private:
  bool keyed_by_current() const {
    return policy_.kind == Policy::Kind::min_degree || policy_.kind == Policy::Kind::dynamic_rate;
  }

  std::size_t key_for(Vertex v) const {
    switch (policy_.kind) {
      case Policy::Kind::uniform:
        return 0;
      case Policy::Kind::static_rate:
        return initial_[v];
      default:
        return current_[v];
    }
  }

  Vertex select(Rng& rng) {
    const std::size_t remaining = buckets_.size();
    switch (policy_.kind) {
      case Policy::Kind::uniform:
        time_ += rng.exponential(static_cast<double>(remaining));
        return buckets_.pick(0, rng);
      case Policy::Kind::min_degree:
        time_ += rng.exponential(static_cast<double>(remaining));
        return buckets_.pick(buckets_.lo(), rng);
      default:
        break;
    }
    // Categorical over keys with weight rate(key) * count(key), in log space.
    const std::size_t lo = buckets_.lo(), hi = buckets_.hi();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = lo; k <= hi; ++k) {
      if (buckets_.count(k) == 0) continue;
      top = std::max(top, log_rate_[k] + std::log(static_cast<double>(buckets_.count(k))));
    }
    weights_.assign(hi - lo + 1, 0.0);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (buckets_.count(k) == 0) continue;
      sum += std::exp(log_rate_[k] + std::log(static_cast<double>(buckets_.count(k))) - top);
      weights_[k - lo] = sum;
    }
    // Total rate is exp(top) * sum.
    time_ += rng.exponential(1.0) * std::exp(-top) / sum;
    const double u = rng.uniform() * sum;
    std::size_t k = lo;
    while (k < hi && (buckets_.count(k) == 0 || weights_[k - lo] <= u)) ++k;
    while (buckets_.count(k) == 0) --k;
    return buckets_.pick(k, rng);
  }

  void leave(Vertex v, State s) {
    --hist_[current_[v]];
    buckets_.erase(v);
    state_[v] = s;
  }

  void advance_snapshots(double t) {
    const auto& grid = opts_.snapshot_times;
    while (next_snapshot_ < grid.size() && grid[next_snapshot_] < t) {
      MeasureSnapshot s{grid[next_snapshot_], std::vector<double>(hist_.size())};
      for (std::size_t k = 0; k < hist_.size(); ++k)
        s.mu[k] = static_cast<double>(hist_[k]) / static_cast<double>(result_.n);
      result_.snapshots.push_back(std::move(s));
      ++next_snapshot_;
    }
  }

  void note_high_degree(std::uint32_t degree) {
    double first = 0.0, second = 0.0;
    std::size_t remaining = 0;
    for (std::size_t k = 0; k < hist_.size(); ++k) {
      first += static_cast<double>(k) * hist_[k];
      second += static_cast<double>(k) * (static_cast<double>(k) - 1.0) * hist_[k];
      remaining += hist_[k];
    }
    result_.first_high_degree = HighDegreeSelection{result_.active.size(), time_, degree,
                                                    static_cast<double>(remaining) / result_.n,
                                                    first > 0.0 ? second / first : 0.0};
  }

  Policy policy_;
  std::vector<std::uint32_t> initial_;
  std::vector<std::uint32_t> current_;
  std::vector<State> state_;
  std::vector<std::uint64_t> hist_;
  std::vector<double> log_rate_;
  std::vector<double> weights_;
  BucketSet buckets_;
  const ExploreOptions& opts_;
  ExplorationResult result_;
  double time_ = 0.0;
  std::size_t next_snapshot_ = 0;
};

}  // namespace detail

/// Sequential exploration on a fixed graph: activate, block unexplored
/// neighbours, repeat until nothing is unexplored. Self-loops never block
/// their owner; a multi-edge blocks its endpoint once.
inline ExplorationResult run_exploration(const MultiGraph& g, const Policy& policy, std::uint64_t seed,
                                         const ExploreOptions& opts = {}) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> deg(n);
  for (Vertex v = 0; v < n; ++v) deg[v] = g.degree(v);
  detail::ExplorationCore core(policy, std::move(deg), opts);
  Rng rng(seed);
  std::vector<Vertex> removed;
  while (!core.done()) {
    const Vertex v = core.activate_next(rng);
    removed.assign(1, v);
    for (Vertex w : g.neighbors(v)) {
      if (core.state(w) == detail::State::unexplored) {
        core.block(w);
        removed.push_back(w);
      }
    }
    for (Vertex x : removed)
      for (Vertex y : g.neighbors(x))
        if (core.state(y) == detail::State::unexplored) core.lose_edge(y);
  }
  return core.finish();
}

/// Exploration that builds the configuration model on the fly: an activated
/// vertex pairs its free half-edges uniformly among all free half-edges, its
/// new neighbours are blocked and immediately pair their own free half-edges.
/// The realized pairing is a uniform configuration-model sample.
inline ExplorationResult run_lazy_cm_exploration(const DegreeSequence& seq, const Policy& policy,
                                                 std::uint64_t seed, const ExploreOptions& opts = {}) {
  if (!seq.even()) throw InputError("lazy exploration needs an even degree sum");
  const std::size_t n = seq.size();
  std::vector<std::uint64_t> first(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) first[v + 1] = first[v] + seq.degrees[v];
  const std::uint64_t stubs = first[n];
  std::vector<Vertex> owner(stubs);
  for (Vertex v = 0; v < n; ++v)
    for (auto h = first[v]; h < first[v + 1]; ++h) owner[h] = v;
  std::vector<std::uint64_t> pool(stubs);
  std::vector<std::int64_t> where(stubs);
  for (std::uint64_t h = 0; h < stubs; ++h) {
    pool[h] = h;
    where[h] = static_cast<std::int64_t>(h);
  }
  auto take = [&](std::uint64_t h) {
    const auto i = static_cast<std::size_t>(where[h]);
    pool[i] = pool.back();
    where[pool[i]] = static_cast<std::int64_t>(i);
    pool.pop_back();
    where[h] = -1;
  };

  detail::ExplorationCore core(policy, seq.degrees, opts);
  Rng rng(seed);
  std::vector<std::pair<Vertex, Vertex>> realized;
  std::vector<Vertex> newly_blocked;

  // Pairs every free half-edge of v; calls on_partner(w) for each partner.
  auto pair_all = [&](Vertex v, auto&& on_partner) {
    for (auto h = first[v]; h < first[v + 1]; ++h) {
      if (where[h] < 0) continue;
      take(h);
      const std::uint64_t p = pool[rng.below(pool.size())];
      take(p);
      const Vertex w = owner[p];
      if (opts.record_graph) realized.emplace_back(v, w);
      on_partner(w);
    }
  };

  while (!core.done()) {
    const Vertex v = core.activate_next(rng);
    newly_blocked.clear();
    pair_all(v, [&](Vertex w) {
      if (w != v && core.state(w) == detail::State::unexplored) {
        core.block(w);
        newly_blocked.push_back(w);
      }
    });
    for (Vertex w : newly_blocked) {
      pair_all(w, [&](Vertex x) {
        if (core.state(x) == detail::State::unexplored) core.lose_edge(x);
      });
    }
  }
  auto result = core.finish();
  if (opts.record_graph) {
    MultiGraph g(n);
    for (auto [u, w] : realized) g.add_edge(u, w);
    result.realized = std::move(g);
  }
  return result;
}

struct IndependenceCheck {
  bool independent = false;
  bool maximal = false;
};

/// Self-loops are ignored: a vertex is never its own conflicting neighbour.
inline IndependenceCheck verify_independent(const MultiGraph& g, const std::vector<Vertex>& set) {
  std::vector<char> in(g.size(), 0);
  for (Vertex v : set) {
    if (v >= g.size()) throw InputError("vertex id " + std::to_string(v) + " out of range");
    in[v] = 1;
  }
  IndependenceCheck c;
  c.independent = true;
  for (Vertex v : set)
    for (Vertex w : g.neighbors(v))
      if (w != v && in[w]) c.independent = false;
  if (!c.independent) return c;
  c.maximal = true;
  for (Vertex v = 0; v < g.size() && c.maximal; ++v) {
    if (in[v]) continue;
    bool covered = false;
    for (Vertex w : g.neighbors(v)) covered = covered || (w != v && in[w]);
    c.maximal = covered;
  }
  return c;
}

struct MaxIndependentSet {
  std::size_t size = 0;
  std::vector<Vertex> witness;
};

namespace detail {

inline void mis_branch(const std::vector<std::uint32_t>& nbr, std::uint32_t candidates, std::uint32_t chosen,
                       std::uint32_t& best) {
  if (std::popcount(chosen) + std::popcount(candidates) <= std::popcount(best)) return;
  if (candidates == 0) {
    best = chosen;
    return;
  }
  int pivot = -1, pivot_deg = -1;
  for (std::uint32_t c = candidates; c; c &= c - 1) {
    const int v = std::countr_zero(c);
    const int d = std::popcount(nbr[v] & candidates);
    if (d > pivot_deg) {
      pivot = v;
      pivot_deg = d;
    }
  }
  const std::uint32_t bit = 1u << pivot;
  if (pivot_deg == 0) {
    // No edges left among the candidates: take them all.
    mis_branch(nbr, 0, chosen | candidates, best);
    return;
  }
  mis_branch(nbr, candidates & ~bit & ~nbr[pivot], chosen | bit, best);
  mis_branch(nbr, candidates & ~bit, chosen, best);
}

}  // namespace detail

/// Exact independence number by branch and bound; n <= 30.
inline MaxIndependentSet brute_force_max_is(const MultiGraph& g) {
  if (g.size() > 30) throw InputError("brute_force_max_is supports at most 30 vertices");
  const auto n = static_cast<std::uint32_t>(g.size());
  std::vector<std::uint32_t> nbr(n, 0);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex w : g.neighbors(v))
      if (w != v) nbr[v] |= 1u << w;
  std::uint32_t best = 0;
  const std::uint32_t all = n == 32 ? ~0u : ((1u << n) - 1u);
  detail::mis_branch(nbr, all, 0, best);
  MaxIndependentSet r;
  r.size = static_cast<std::size_t>(std::popcount(best));
  for (Vertex v = 0; v < n; ++v)
    if (best >> v & 1u) r.witness.push_back(v);
  return r;
}

}  // namespace seqmis
