#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>

#include "seqmis/glauber.hpp"

using namespace seqmis;

namespace {

MultiGraph path3() {
  MultiGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  return g;
}

MultiGraph k2() {
  MultiGraph g(2);
  g.add_edge(0, 1);
  return g;
}

}  // namespace

TEST(Oracle, SmallGraphs) {
  const auto single = stationary_oracle(MultiGraph(1), 3.0);
  EXPECT_NEAR(single.at(0), 0.25, 1e-15);
  EXPECT_NEAR(single.at(1), 0.75, 1e-15);
  const auto pair = stationary_oracle(k2(), 1.0);
  ASSERT_EQ(pair.size(), 3u);
  for (auto& [m, p] : pair) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  const auto p3 = stationary_oracle(path3(), 1.0);
  ASSERT_EQ(p3.size(), 5u);
  for (auto& [m, p] : p3) EXPECT_NEAR(p, 0.2, 1e-15);
  const auto weighted = stationary_oracle(path3(), 2.0);
  EXPECT_NEAR(weighted.at(0b101), 4.0 / 11.0, 1e-15);
  EXPECT_THROW(stationary_oracle(MultiGraph(21), 1.0), InputError);
}

TEST(Glauber, EdgelessSaturatesForLargeBeta) {
  GlauberConfig cfg;
  cfg.beta = 1e6;
  cfg.steps = 20000;
  EXPECT_EQ(run_glauber(MultiGraph(50), cfg, {}, 1).final_set.size(), 50u);
}

TEST(Glauber, TwoStateChain) {
  const double beta = 2.5;
  const MultiGraph g(1);
  GlauberChain chain(g, beta, {}, 3);
  const int steps = 400000;
  int on = 0;
  for (int s = 0; s < steps; ++s) {
    chain.step();
    on += chain.active(0);
  }
  // Steps are i.i.d. here: the state after each step is on with probability beta/(1+beta).
  const double p = beta / (1 + beta);
  EXPECT_NEAR(static_cast<double>(on) / steps, p, 4.0 * std::sqrt(p * (1 - p) / steps));
}

TEST(Glauber, PathFrequenciesMatchStationaryWeights) {
  const auto g = path3();
  const auto exact = stationary_oracle(g, 1.0);
  GlauberChain chain(g, 1.0, {}, 11);
  const int steps = 1'000'000;
  std::map<std::uint32_t, double> freq;
  for (int s = 0; s < steps; ++s) {
    chain.step();
    freq[static_cast<std::uint32_t>(chain.mask())] += 1.0 / steps;
  }
  ASSERT_EQ(freq.size(), exact.size());
  for (auto& [m, p] : exact) EXPECT_NEAR(freq[m], p, 0.02 * p) << "configuration " << m;
}

TEST(Glauber, DetailedBalanceOnTransitionFlows) {
  // Reversibility makes the flows x -> y and y -> x equal in expectation, so
  // conditioned on their sum each direction is Binomial(sum, 1/2).
  MultiGraph c5(5);
  for (Vertex v = 0; v < 5; ++v) c5.add_edge(v, (v + 1) % 5);
  const auto er = gen_erdos_renyi(8, 2.5, 12);
  for (const MultiGraph* g : std::vector<const MultiGraph*>{&c5, &er}) {
    for (double beta : {1.0, 3.0}) {
      GlauberChain chain(*g, beta, {}, 17);
      std::map<std::pair<std::uint64_t, std::uint64_t>, double> flow;
      std::uint64_t prev = chain.mask();
      for (int s = 0; s < 1'000'000; ++s) {
        chain.step();
        const auto cur = chain.mask();
        if (cur != prev) flow[{prev, cur}] += 1.0;
        prev = cur;
      }
      double chi2 = 0.0;
      int pairs = 0;
      for (const auto& [key, forward] : flow) {
        if (key.first > key.second) continue;
        const double backward = flow.count({key.second, key.first}) ? flow.at({key.second, key.first}) : 0.0;
        chi2 += (forward - backward) * (forward - backward) / (forward + backward);
        ++pairs;
      }
      for (const auto& [key, backward] : flow)
        if (key.first > key.second && !flow.count({key.second, key.first})) {
          chi2 += backward;
          ++pairs;
        }
      const boost::math::chi_squared dist(pairs);
      EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 1e-3) << g->size() << " beta " << beta;
    }
  }
}

TEST(Glauber, RejectsDependentStart) {
  const auto g = k2();
  EXPECT_THROW(GlauberChain(g, 1.0, {0, 1}, 1), InputError);
  GlauberConfig cfg;
  EXPECT_THROW(run_csma(g, cfg, {0, 1}, 1), InputError);
  cfg.beta = 0.0;
  EXPECT_THROW(run_glauber(g, cfg, {}, 1), InputError);
}

TEST(Glauber, SeededPathReachesOuterPair) {
  const auto g = path3();
  GlauberChain chain(g, 100.0, {1}, 2);
  bool reached = false;
  for (int s = 0; s < 200000 && !reached; ++s) {
    chain.step();
    reached = chain.mask() == 0b101;
  }
  EXPECT_TRUE(reached);
}

TEST(Csma, AtMostOneActiveOnEdge) {
  GlauberConfig cfg;
  cfg.backoff_mean = 1.0;
  cfg.tx_mean = 1.0;
  const auto g = k2();
  CsmaChain chain(g, cfg, {}, 4);
  for (int s = 0; s < 100000; ++s) {
    ASSERT_TRUE(chain.step(cfg.horizon));
    ASSERT_LE(chain.active_count(), 1u);
  }
}

TEST(Csma, IsolatedVertexDutyCycle) {
  GlauberConfig cfg;
  cfg.backoff_mean = 1.0;
  cfg.tx_mean = 3.0;
  const MultiGraph g(1);
  CsmaChain chain(g, cfg, {}, 8);
  double on_time = 0.0, last = 0.0;
  for (int s = 0; s < 200000; ++s) {
    const bool was_on = chain.active(0);
    chain.step(cfg.horizon);
    if (was_on) on_time += chain.time() - last;
    last = chain.time();
  }
  // 100000 renewal cycles: the duty-cycle estimate has sd around 0.0015.
  EXPECT_NEAR(on_time / chain.time(), 0.75, 0.006);
}

TEST(Csma, TinyBackoffConcentratesOnMaximalSets) {
  GlauberConfig cfg;
  cfg.horizon = 5000.0;
  cfg.max_transitions = std::numeric_limits<std::uint64_t>::max();
  int maximal = 0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    const auto g = gen_erdos_renyi(10 + r % 40, 2.5, 70 + r);
    const auto tr = run_csma(g, cfg, {}, 900 + r);
    maximal += verify_independent(g, tr.final_set).maximal;
  }
  EXPECT_GE(maximal, static_cast<int>(0.99 * runs));
}

TEST(Glauber, LargeBetaConcentratesOnMaximalSets) {
  GlauberConfig cfg;
  cfg.beta = 1e7;
  cfg.steps = 50000;
  int maximal = 0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    const auto g = gen_erdos_renyi(10 + r % 40, 2.5, 170 + r);
    maximal += verify_independent(g, run_glauber(g, cfg, {}, 300 + r).final_set).maximal;
  }
  EXPECT_GE(maximal, static_cast<int>(0.99 * runs));
}

TEST(Combined, EdgelessGraphIsSaturatedBySequentialPhase) {
  GlauberConfig cfg;
  cfg.max_transitions = 100;
  const auto tr = run_combined(MultiGraph(20), Policy::uniform(), cfg, 1);
  ASSERT_FALSE(tr.samples.empty());
  bool first = true;
  for (const auto& s : tr.samples) {
    if (s.phase != Phase::csma) continue;
    // Transmissions still end and restart, so later samples may dip briefly.
    if (first) {
      EXPECT_EQ(s.active, 20u);
    }
    EXPECT_LE(s.active, 20u);
    first = false;
  }
  EXPECT_FALSE(first);
}

TEST(Combined, SequentialSamplesPrecedeCsma) {
  GlauberConfig cfg;
  cfg.max_transitions = 1000;
  const auto g = gen_erdos_renyi(500, 2.0, 3);
  const auto tr = run_combined(g, Policy::min_degree(), cfg, 4);
  bool in_csma = false;
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    if (tr.samples[i].phase == Phase::csma) {
      in_csma = true;
    } else {
      EXPECT_FALSE(in_csma);
    }
    if (i > 0) {
      EXPECT_LE(tr.samples[i - 1].time, tr.samples[i].time);
    }
  }
  EXPECT_TRUE(in_csma);
  ASSERT_TRUE(tr.first_maximal.has_value());
  EXPECT_EQ(tr.first_maximal->index, 0u);
}

TEST(Combined, SeededStartDominatesEmptyStart) {
  GlauberConfig cfg;
  cfg.max_transitions = 100000;
  int dominating = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto g = gen_erdos_renyi(1000, 10.0, 40 + s);
    const auto seeded = run_combined(g, Policy::dynamic_rate(RateFunction::power(-15.0)), cfg, 10 + s);
    const auto empty = run_csma(g, cfg, {}, 20 + s);
    std::map<std::uint64_t, std::size_t> from_empty;
    for (const auto& x : empty.samples) from_empty[x.index] = x.active;
    bool ok = true;
    for (const auto& x : seeded.samples)
      if (x.phase == Phase::csma && from_empty.count(x.index)) ok = ok && x.active >= from_empty[x.index];
    dominating += ok;
  }
  EXPECT_GE(dominating, 4);
}
