#pragma once

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seqmis/errors.hpp"
#include "seqmis/explore.hpp"
#include "seqmis/graph.hpp"
#include "seqmis/rng.hpp"

namespace seqmis {

struct GlauberConfig {
  // Discrete chain.
  double beta = 1.0;
  std::uint64_t steps = 1'000'000;
  // Continuous-time CSMA.
  double backoff_mean = 1e-6;
  double tx_mean = 1e2;
  double horizon = std::numeric_limits<double>::infinity();
  std::uint64_t max_transitions = 100'000;
  /// Density of the logarithmic sampling grid.
  std::size_t points_per_decade = 40;

  void validate() const {
    if (!(beta > 0.0)) throw InputError("beta must be > 0");
    if (!(backoff_mean > 0.0) || !(tx_mean > 0.0)) throw InputError("backoff and transmission means must be > 0");
    if (!(horizon > 0.0)) throw InputError("horizon must be > 0");
    if (points_per_decade == 0) throw InputError("points_per_decade must be >= 1");
  }
};

enum class Phase : std::uint8_t { sequential, glauber, csma };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::sequential:
      return "sequential";
    case Phase::glauber:
      return "glauber";
    case Phase::csma:
      return "csma";
  }
  return "?";
}

struct ActivitySample {
  Phase phase;
  /// Step index (discrete chain) or successful-transition count (CSMA and sequential phases).
  std::uint64_t index;
  double time;
  std::size_t active;
};

struct ActivityTrajectory {
  std::vector<ActivitySample> samples;
  std::vector<Vertex> final_set;
  /// CSMA only: the first instant no idle vertex could start transmitting.
  std::optional<ActivitySample> first_maximal;
  std::uint64_t transitions = 0;
  double final_time = 0.0;
};

/// Indices 0..10 then geometrically spaced; strictly increasing.
class LogGrid {
 public:
  explicit LogGrid(std::size_t per_decade) : factor_(std::pow(10.0, 1.0 / static_cast<double>(per_decade))) {}

  bool due(std::uint64_t index) const { return index >= next_; }

  void advance(std::uint64_t index) {
    while (next_ <= index) {
      const auto grown = static_cast<std::uint64_t>(std::ceil(static_cast<double>(next_) * factor_));
      next_ = std::max(next_ + 1, grown);
    }
  }

 private:
  double factor_;
  std::uint64_t next_ = 0;
};

namespace detail {

/// Active set with per-vertex counts of active neighbours (self-loops ignored).
class ActivityState {
 public:
  explicit ActivityState(const MultiGraph& g) : g_(g), active_(g.size(), 0), blockers_(g.size(), 0) {}

  void seed(const std::vector<Vertex>& initial) {
    const auto check = verify_independent(g_, initial);
    if (!check.independent) throw InputError("initial configuration is not an independent set");
    for (Vertex v : initial)
      if (!active_[v]) activate(v);
  }

  bool active(Vertex v) const { return active_[v] != 0; }
  bool free(Vertex v) const { return !active_[v] && blockers_[v] == 0; }
  std::size_t count() const { return count_; }

  void activate(Vertex v) {
    active_[v] = 1;
    ++count_;
    for (Vertex w : g_.neighbors(v))
      if (w != v) ++blockers_[w];
  }

  void deactivate(Vertex v) {
    active_[v] = 0;
    --count_;
    for (Vertex w : g_.neighbors(v))
      if (w != v) --blockers_[w];
  }

  std::vector<Vertex> members() const {
    std::vector<Vertex> out;
    for (Vertex v = 0; v < g_.size(); ++v)
      if (active_[v]) out.push_back(v);
    return out;
  }

  const MultiGraph& graph() const { return g_; }

 private:
  const MultiGraph& g_;
  std::vector<char> active_;
  std::vector<std::uint32_t> blockers_;
  std::size_t count_ = 0;
};

/// Indexable subset of vertices with O(1) insert, erase and uniform pick.
class VertexPool {
 public:
  explicit VertexPool(std::size_t n) : pos_(n, npos) {}
  bool contains(Vertex v) const { return pos_[v] != npos; }
  void insert(Vertex v) {
    if (contains(v)) return;
    pos_[v] = items_.size();
    items_.push_back(v);
  }
  void erase(Vertex v) {
    if (!contains(v)) return;
    const Vertex last = items_.back();
    items_[pos_[v]] = last;
    pos_[last] = pos_[v];
    items_.pop_back();
    pos_[v] = npos;
  }
  std::size_t size() const { return items_.size(); }
  Vertex pick(Rng& rng) const { return items_[rng.below(items_.size())]; }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos_;
  std::vector<Vertex> items_;
};

}  // namespace detail

/// Discrete Glauber chain for the hard-core model with activation odds beta.
/// Holds a reference to the graph.
class GlauberChain {
 public:
  GlauberChain(MultiGraph&&, double, const std::vector<Vertex>&, std::uint64_t) = delete;
  GlauberChain(const MultiGraph& g, double beta, const std::vector<Vertex>& initial, std::uint64_t seed)
      : state_(g), rng_(seed), p_add_(beta / (1.0 + beta)) {
    if (!(beta > 0.0)) throw InputError("beta must be > 0");
    state_.seed(initial);
  }

  /// One update: pick v uniformly; add it (if unblocked) with probability
  /// beta/(1+beta), otherwise remove it.
  void step() {
    const auto n = state_.graph().size();
    if (n == 0) return;
    const auto v = static_cast<Vertex>(rng_.below(n));
    if (rng_.uniform() < p_add_) {
      if (state_.free(v)) state_.activate(v);
    } else if (state_.active(v)) {
      state_.deactivate(v);
    }
  }

  std::size_t active_count() const { return state_.count(); }
  bool active(Vertex v) const { return state_.active(v); }
  std::vector<Vertex> active_set() const { return state_.members(); }

  /// Bit mask of the configuration; graphs of at most 64 vertices.
  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (Vertex v = 0; v < std::min<std::size_t>(64, state_.graph().size()); ++v)
      if (state_.active(v)) m |= std::uint64_t{1} << v;
    return m;
  }

 private:
  detail::ActivityState state_;
  Rng rng_;
  double p_add_;
};

inline ActivityTrajectory run_glauber(const MultiGraph& g, const GlauberConfig& cfg, const std::vector<Vertex>& initial,
                                      std::uint64_t seed) {
  cfg.validate();
  GlauberChain chain(g, cfg.beta, initial, seed);
  ActivityTrajectory tr;
  LogGrid grid(cfg.points_per_decade);
  for (std::uint64_t k = 0; k <= cfg.steps; ++k) {
    if (k > 0) chain.step();
    if (grid.due(k) || k == cfg.steps) {
      tr.samples.push_back({Phase::glauber, k, static_cast<double>(k), chain.active_count()});
      grid.advance(k);
    }
  }
  tr.transitions = cfg.steps;
  tr.final_time = static_cast<double>(cfg.steps);
  tr.final_set = chain.active_set();
  return tr;
}

/// Continuous-time CSMA: an idle vertex with no transmitting neighbour
/// finishes its exponential backoff at rate 1/backoff_mean (a frozen
/// exponential timer resumes with the same law), a transmission ends at rate
/// 1/tx_mean. Only successful starts and ends count as transitions. Holds a
/// reference to the graph.
class CsmaChain {
 public:
  CsmaChain(MultiGraph&&, const GlauberConfig&, const std::vector<Vertex>&, std::uint64_t) = delete;
  CsmaChain(const MultiGraph& g, const GlauberConfig& cfg, const std::vector<Vertex>& initial, std::uint64_t seed)
      : state_(g), idle_(g.size()), on_(g.size()), rng_(seed),
        start_rate_(1.0 / cfg.backoff_mean), end_rate_(1.0 / cfg.tx_mean) {
    cfg.validate();
    state_.seed(initial);
    for (Vertex v = 0; v < g.size(); ++v) {
      if (state_.active(v)) on_.insert(v);
      else if (state_.free(v)) idle_.insert(v);
    }
  }

  /// Performs one transition. False when no transition is possible or the
  /// next one would fall past the horizon.
  bool step(double horizon) {
    const double starts = start_rate_ * static_cast<double>(idle_.size());
    const double ends = end_rate_ * static_cast<double>(on_.size());
    const double total = starts + ends;
    if (total <= 0.0) return false;
    const double t = time_ + rng_.exponential(total);
    if (t > horizon) {
      time_ = horizon;
      return false;
    }
    time_ = t;
    const auto& g = state_.graph();
    if (rng_.uniform() * total < starts) {
      const Vertex v = idle_.pick(rng_);
      idle_.erase(v);
      state_.activate(v);
      on_.insert(v);
      for (Vertex w : g.neighbors(v)) idle_.erase(w);
    } else {
      const Vertex v = on_.pick(rng_);
      on_.erase(v);
      state_.deactivate(v);
      idle_.insert(v);
      for (Vertex w : g.neighbors(v))
        if (w != v && state_.free(w)) idle_.insert(w);
    }
    ++transitions_;
    return true;
  }

  bool maximal() const { return idle_.size() == 0; }
  std::size_t active_count() const { return state_.count(); }
  double time() const { return time_; }
  std::uint64_t transitions() const { return transitions_; }
  std::vector<Vertex> active_set() const { return state_.members(); }
  bool active(Vertex v) const { return state_.active(v); }

 private:
  detail::ActivityState state_;
  detail::VertexPool idle_;
  detail::VertexPool on_;
  Rng rng_;
  double start_rate_;
  double end_rate_;
  double time_ = 0.0;
  std::uint64_t transitions_ = 0;
};

namespace detail {

inline void run_csma_into(CsmaChain& chain, const GlauberConfig& cfg, Phase phase, double time_offset,
                          ActivityTrajectory& tr) {
  LogGrid grid(cfg.points_per_decade);
  auto record = [&] {
    tr.samples.push_back({phase, chain.transitions(), time_offset + chain.time(), chain.active_count()});
    grid.advance(chain.transitions());
  };
  auto note_maximal = [&] {
    if (!tr.first_maximal && chain.maximal())
      tr.first_maximal = ActivitySample{phase, chain.transitions(), time_offset + chain.time(), chain.active_count()};
  };
  record();
  note_maximal();
  while (chain.transitions() < cfg.max_transitions && chain.step(cfg.horizon)) {
    note_maximal();
    if (grid.due(chain.transitions())) record();
  }
  if (tr.samples.back().index != chain.transitions() || tr.samples.back().phase != phase) record();
  tr.transitions = chain.transitions();
  tr.final_time = time_offset + chain.time();
  tr.final_set = chain.active_set();
}

}  // namespace detail

inline ActivityTrajectory run_csma(const MultiGraph& g, const GlauberConfig& cfg, const std::vector<Vertex>& initial,
                                   std::uint64_t seed) {
  CsmaChain chain(g, cfg, initial, seed);
  ActivityTrajectory tr;
  detail::run_csma_into(chain, cfg, Phase::csma, 0.0, tr);
  return tr;
}

enum class Dynamics { csma, glauber };

/// Sequential exploration to a maximal independent set, then CSMA (or the
/// discrete Glauber chain) started from it. Sequential samples count
/// activations; the second phase restarts its transition count at zero.
inline ActivityTrajectory run_combined(const MultiGraph& g, const Policy& policy, const GlauberConfig& cfg,
                                       std::uint64_t seed, Dynamics dynamics = Dynamics::csma) {
  const Rng root(seed);
  ExploreOptions opts;
  opts.record_log = true;
  const auto seq = run_exploration(g, policy, root.split(1).seed(), opts);
  ActivityTrajectory tr;
  LogGrid grid(cfg.points_per_decade);
  tr.samples.push_back({Phase::sequential, 0, 0.0, 0});
  grid.advance(0);
  for (std::size_t k = 1; k <= seq.activation_log.size(); ++k) {
    if (grid.due(k) || k == seq.activation_log.size()) {
      tr.samples.push_back({Phase::sequential, k, seq.activation_log[k - 1].time, k});
      grid.advance(k);
    }
  }
  const double offset = seq.final_time;
  if (dynamics == Dynamics::csma) {
    CsmaChain chain(g, cfg, seq.active, root.split(2).seed());
    detail::run_csma_into(chain, cfg, Phase::csma, offset, tr);
  } else {
    auto second = run_glauber(g, cfg, seq.active, root.split(2).seed());
    for (auto s : second.samples) tr.samples.push_back(s);
    tr.transitions = second.transitions;
    tr.final_time = second.final_time;
    tr.final_set = std::move(second.final_set);
  }
  return tr;
}

/// Exact hard-core measure beta^{|A|}/Z over all independent sets; n <= 20.
/// Keys are vertex bit masks.
inline std::map<std::uint32_t, double> stationary_oracle(const MultiGraph& g, double beta) {
  if (g.size() > 20) throw InputError("stationary_oracle supports at most 20 vertices");
  if (!(beta > 0.0)) throw InputError("beta must be > 0");
  const auto n = static_cast<std::uint32_t>(g.size());
  std::vector<std::uint32_t> nbr(n, 0);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex w : g.neighbors(v))
      if (w != v) nbr[v] |= 1u << w;
  std::map<std::uint32_t, double> out;
  double z = 0.0;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    bool ok = true;
    for (std::uint32_t c = m; c && ok; c &= c - 1) ok = (nbr[std::countr_zero(c)] & m) == 0;
    if (!ok) continue;
    const double w = std::pow(beta, std::popcount(m));
    out[m] = w;
    z += w;
  }
  for (auto& [m, w] : out) w /= z;
  return out;
}

}  // namespace seqmis
