#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <functional>
#include <map>
#include <sstream>

#include "seqmis/graph.hpp"

using namespace seqmis;

namespace {

/// Shape of a multigraph on 3 vertices with all degrees 2: (loops, distinct neighbours).
std::string shape(const MultiGraph& g) {
  int loops = 0;
  for (Vertex v = 0; v < g.size(); ++v) loops += static_cast<int>(g.self_loops(v));
  if (loops == 0) return "triangle";
  if (loops == 1) return "loop+double";
  return "three_loops";
}

/// Exact class counts over all perfect matchings of the half-edges.
std::map<std::string, int> enumerate_pairings(const std::vector<Vertex>& stubs) {
  std::map<std::string, int> counts;
  std::vector<int> used(stubs.size(), 0);
  std::vector<std::pair<Vertex, Vertex>> edges;
  std::function<void()> rec = [&] {
    std::size_t i = 0;
    while (i < stubs.size() && used[i]) ++i;
    if (i == stubs.size()) {
      MultiGraph g(3);
      for (auto [u, v] : edges) g.add_edge(u, v);
      ++counts[shape(g)];
      return;
    }
    used[i] = 1;
    for (std::size_t j = i + 1; j < stubs.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      edges.emplace_back(stubs[i], stubs[j]);
      rec();
      edges.pop_back();
      used[j] = 0;
    }
    used[i] = 0;
  };
  rec();
  return counts;
}

}  // namespace

TEST(ConfigurationModel, ForcedPairings) {
  DegreeSequence one{{1, 1}, {}};
  const auto g = gen_configuration_model(one, 1);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0], std::make_pair(Vertex{0}, Vertex{1}));

  DegreeSequence loop{{2}, {}};
  const auto h = gen_configuration_model(loop, 1);
  EXPECT_EQ(h.edge_count(), 1u);
  EXPECT_EQ(h.self_loops(0), 1u);
  EXPECT_EQ(h.degree(0), 2u);
}

TEST(ConfigurationModel, OddSumRejected) {
  DegreeSequence odd{{1, 2}, {}};
  EXPECT_THROW(gen_configuration_model(odd, 1), InputError);
}

TEST(ConfigurationModel, TriangleFrequencyMatchesPairingEnumeration) {
  const auto exact = enumerate_pairings({0, 0, 1, 1, 2, 2});
  int total = 0;
  for (auto& [k, c] : exact) total += c;
  ASSERT_EQ(total, 15);
  const int runs = 30000;
  std::map<std::string, int> seen;
  DegreeSequence seq{{2, 2, 2}, {}};
  for (int s = 0; s < runs; ++s) ++seen[shape(gen_configuration_model(seq, 1000 + s))];
  double chi2 = 0.0;
  for (auto& [k, c] : exact) {
    const double e = runs * static_cast<double>(c) / total;
    chi2 += (seen[k] - e) * (seen[k] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(exact.size() - 1));
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 1e-3);
}

TEST(ConfigurationModel, HalfEdgeConservationAndDegreeFidelity) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto seq = sample_degree_sequence(DegreeDistribution::poisson(3.0 + s % 4), 500 + 37 * s, s);
    const auto g = gen_configuration_model(seq, s + 99);
    EXPECT_EQ(2 * g.edge_count(), seq.total());
    EXPECT_EQ(degree_sequence(g).degrees, seq.degrees);
  }
}

TEST(ConfigurationModel, Deterministic) {
  const auto seq = sample_degree_sequence(DegreeDistribution::poisson(2.0), 2000, 4);
  EXPECT_TRUE(gen_configuration_model(seq, 8) == gen_configuration_model(seq, 8));
  EXPECT_FALSE(gen_configuration_model(seq, 8) == gen_configuration_model(seq, 9));
}

TEST(ErdosRenyi, TrivialCases) {
  EXPECT_EQ(gen_erdos_renyi(50, 0.0, 1).edge_count(), 0u);
  EXPECT_EQ(gen_erdos_renyi(2, 2.0, 1).edge_count(), 1u);
  EXPECT_THROW(gen_erdos_renyi(3, 4.0, 1), InputError);
}

TEST(ErdosRenyi, MeanDegreeConcentrates) {
  const std::size_t n = 10000;
  const auto g = gen_erdos_renyi(n, 2.0, 17);
  // Edge count is Binomial(n(n-1)/2, 2/n).
  const double pairs = n * (n - 1) / 2.0, p = 2.0 / n;
  const double sd_mean = 2.0 * std::sqrt(pairs * p * (1 - p)) / n;
  EXPECT_LT(std::abs(g.mean_degree() - 2.0 * (n - 1) / n), 3.0 * sd_mean);
}

TEST(ErdosRenyi, DegreesAreBinomial) {
  const std::size_t n = 20000;
  const double lambda = 3.0;
  const auto g = gen_erdos_renyi(n, lambda, 5);
  const auto mu = empirical_degree_measure(g, false);
  const boost::math::binomial_distribution<double> bin(static_cast<double>(n - 1), lambda / n);
  // Pool degrees >= 9 into one cell so every cell expects > 5.
  const int top = 9;
  double chi2 = 0.0;
  double tail_expected = 1.0;
  double tail_seen = 0.0;
  for (int k = 0; k < top; ++k) {
    const double e = n * boost::math::pdf(bin, k);
    tail_expected -= boost::math::pdf(bin, k);
    chi2 += (mu[k] - e) * (mu[k] - e) / e;
  }
  for (std::size_t k = top; k <= mu.k_max(); ++k) tail_seen += mu[k];
  const double e = n * tail_expected;
  chi2 += (tail_seen - e) * (tail_seen - e) / e;
  const boost::math::chi_squared dist(top);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 1e-3);
}

TEST(EmpiricalMeasure, Examples) {
  const auto empty = empirical_degree_measure(MultiGraph(5), false);
  EXPECT_EQ(empty.k_max(), 0u);
  EXPECT_EQ(empty[0], 5.0);

  MultiGraph tri(3);
  tri.add_edge(0, 1);
  tri.add_edge(1, 2);
  tri.add_edge(2, 0);
  const auto t = empirical_degree_measure(tri, false);
  EXPECT_EQ(t[2], 3.0);
  EXPECT_EQ(t.total(), 3.0);
}

TEST(EdgeList, RoundTrip) {
  const auto g = gen_configuration_model(sample_degree_sequence(DegreeDistribution::poisson(2.0), 300, 1), 2);
  std::stringstream io;
  write_edge_list(g, io);
  const auto h = read_edge_list(io, g.size());
  EXPECT_EQ(degree_sequence(h).degrees, degree_sequence(g).degrees);
  EXPECT_EQ(h.edge_count(), g.edge_count());
}

TEST(EdgeList, Errors) {
  std::stringstream bad("0 1\nx y\n");
  EXPECT_THROW(read_edge_list(bad), InputError);
  std::stringstream beyond("0 7\n");
  EXPECT_THROW(read_edge_list(beyond, 3), InputError);
  MultiGraph g(2);
  EXPECT_THROW(g.add_edge(0, 5), InputError);
}
