#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "seqmis/errors.hpp"
#include "seqmis/rng.hpp"

namespace seqmis {

/// One degree per vertex. The sum must be even for a pairing to exist.
struct DegreeSequence {
  std::vector<std::uint32_t> degrees;
  /// Vertex whose degree was bumped by one to make the sum even, if any.
  std::optional<std::uint32_t> parity_fix;

  std::size_t size() const { return degrees.size(); }

  std::uint64_t total() const {
    return std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
  }

  bool even() const { return total() % 2 == 0; }

  std::uint32_t max_degree() const {
    return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
  }
};

/// Finite-support mass vector over degrees 0..k_max.
///
/// Either a probability vector (normalized) or raw counts / scaled counts.
/// Constructors that truncate an infinite law renormalize and record the
/// discarded tail in `tail_mass`.
class DegreeDistribution {
 public:
  DegreeDistribution() = default;

  DegreeDistribution(std::vector<double> mass, bool normalized, double tail_mass = 0.0)
      : mass_(std::move(mass)), normalized_(normalized), tail_mass_(tail_mass) {
    for (double m : mass_) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("degree mass must be finite and >= 0");
    }
    trim();
    if (normalized_ && std::abs(total() - 1.0) > 1e-12) {
      throw InputError("normalized degree distribution does not sum to 1");
    }
  }

  static DegreeDistribution point(std::uint32_t d) {
    std::vector<double> m(d + 1, 0.0);
    m[d] = 1.0;
    return {std::move(m), true};
  }

  static DegreeDistribution regular(std::uint32_t d) { return point(d); }

  /// Poisson(mean) truncated at k_max (default: far enough that the tail is below 1e-15).
  static DegreeDistribution poisson(double mean, std::optional<std::uint32_t> k_max = std::nullopt) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw InputError("poisson mean must be >= 0");
    const std::uint32_t kmax =
        k_max ? *k_max : static_cast<std::uint32_t>(std::ceil(mean + 12.0 * std::sqrt(mean) + 15.0));
    std::vector<double> m(kmax + 1);
    double total = 0.0;
    for (std::uint32_t k = 0; k <= kmax; ++k) {
      m[k] = mean == 0.0 ? (k == 0 ? 1.0 : 0.0)
                         : std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
      total += m[k];
    }
    return renormalized(std::move(m), std::max(0.0, 1.0 - total));
  }

  /// p_k proportional to k^{-exponent} on [k_min, k_max].
  static DegreeDistribution power_law(double exponent, std::uint32_t k_min = 1,
                                      std::uint32_t k_max = 1000) {
    if (!(exponent > 1.0)) throw InputError("power-law exponent must be > 1");
    if (k_min == 0 || k_min > k_max) throw InputError("power-law support must satisfy 1 <= kmin <= kmax");
    std::vector<double> m(k_max + 1, 0.0);
    double kept = 0.0;
    for (std::uint32_t k = k_min; k <= k_max; ++k) {
      m[k] = std::pow(static_cast<double>(k), -exponent);
      kept += m[k];
    }
    // Tail beyond k_max relative to the untruncated law, by the integral bound.
    const double tail = std::pow(k_max + 0.5, 1.0 - exponent) / (exponent - 1.0);
    const double tail_fraction = tail / (kept + tail);
    return renormalized(std::move(m), tail_fraction);
  }

  /// Reads lines `k mass`. Blank lines and lines starting with '#' are skipped.
  static DegreeDistribution from_file(const std::string& path, bool normalize = true) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open distribution file: " + path);
    std::vector<double> m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      long long k;
      double w;
      std::string rest;
      if (!(ss >> k >> w) || (ss >> rest) || k < 0 || !(w >= 0.0)) {
        throw InputError(path + ":" + std::to_string(lineno) + ": expected `k mass`");
      }
      if (static_cast<std::size_t>(k) >= m.size()) m.resize(k + 1, 0.0);
      m[k] += w;
    }
    if (m.empty()) throw InputError("empty distribution file: " + path);
    if (!normalize) return {std::move(m), false};
    return renormalized(std::move(m), 0.0);
  }

  /// Histogram of a degree sequence; divided by n when normalized.
  static DegreeDistribution from_sequence(const DegreeSequence& seq, bool normalized) {
    std::vector<double> m(seq.max_degree() + 1, 0.0);
    for (auto d : seq.degrees) m[d] += 1.0;
    if (normalized) {
      if (seq.size() == 0) throw InputError("empty degree sequence");
      return renormalized(std::move(m), 0.0);
    }
    return {std::move(m), false};
  }

  std::uint32_t k_max() const { return mass_.empty() ? 0 : static_cast<std::uint32_t>(mass_.size() - 1); }
  bool normalized() const { return normalized_; }
  double tail_mass() const { return tail_mass_; }
  const std::vector<double>& masses() const { return mass_; }
  double operator[](std::size_t k) const { return k < mass_.size() ? mass_[k] : 0.0; }
  bool empty() const { return total() <= 0.0; }

  double total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

  double moment(int order) const {
    double s = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) s += std::pow(static_cast<double>(k), order) * mass_[k];
    return s;
  }

  double mean() const { return moment(1) / total(); }

  /// Same support, masses rescaled to sum to one.
  DegreeDistribution normalized_copy() const {
    if (total() <= 0.0) throw InputError("cannot normalize a zero-mass distribution");
    return renormalized(mass_, tail_mass_);
  }

  /// Copy padded (or checked) to exactly k_max + 1 entries.
  std::vector<double> padded(std::uint32_t k_max) const {
    if (k_max < this->k_max()) throw InputError("k_max below the distribution's support");
    std::vector<double> m(mass_);
    m.resize(k_max + 1, 0.0);
    return m;
  }

 private:
  static DegreeDistribution renormalized(std::vector<double> m, double tail) {
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    if (total <= 0.0) throw InputError("distribution has empty support");
    for (auto& x : m) x /= total;
    // Remove residual rounding so the invariant holds to 1e-12.
    const double s = std::accumulate(m.begin(), m.end(), 0.0);
    auto it = std::max_element(m.begin(), m.end());
    *it += 1.0 - s;
    DegreeDistribution d;
    d.mass_ = std::move(m);
    d.normalized_ = true;
    d.tail_mass_ = tail;
    d.trim();
    return d;
  }

  void trim() {
    while (mass_.size() > 1 && mass_.back() == 0.0) mass_.pop_back();
  }

  std::vector<double> mass_;
  bool normalized_ = false;
  double tail_mass_ = 0.0;
};

/// Parses `poisson:<mean>`, `regular:<d>`, `powerlaw:<a>[:kmin]`, `file:<path>`.
inline DegreeDistribution parse_distribution(const std::string& literal,
                                             std::optional<std::uint32_t> k_max = std::nullopt) {
  const auto colon = literal.find(':');
  if (colon == std::string::npos) throw InputError("bad distribution literal: " + literal);
  const std::string kind = literal.substr(0, colon);
  const std::string rest = literal.substr(colon + 1);
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InputError("bad number in distribution literal: " + literal);
    }
    if (used != s.size() || !std::isfinite(v)) throw InputError("bad number in distribution literal: " + literal);
    return v;
  };
  if (kind == "poisson") return DegreeDistribution::poisson(number(rest), k_max);
  if (kind == "regular") {
    const double d = number(rest);
    if (d < 0 || d != std::floor(d)) throw InputError("regular degree must be a non-negative integer");
    return DegreeDistribution::regular(static_cast<std::uint32_t>(d));
  }
  if (kind == "powerlaw") {
    const auto c2 = rest.find(':');
    const double a = number(rest.substr(0, c2));
    std::uint32_t kmin = 1;
    if (c2 != std::string::npos) {
      const double v = number(rest.substr(c2 + 1));
      if (v < 1 || v != std::floor(v)) throw InputError("powerlaw kmin must be a positive integer");
      kmin = static_cast<std::uint32_t>(v);
    }
    return DegreeDistribution::power_law(a, kmin, k_max.value_or(1000));
  }
  if (kind == "file") return DegreeDistribution::from_file(rest);
  throw InputError("unknown distribution kind: " + kind);
}

/// n i.i.d. draws; an odd total is fixed by bumping one uniformly chosen vertex.
inline DegreeSequence sample_degree_sequence(const DegreeDistribution& dist, std::size_t n,
                                             std::uint64_t seed) {
  if (!dist.normalized()) throw InputError("sample_degree_sequence needs a normalized distribution");
  if (dist.empty()) throw InputError("distribution has empty support");
  if (n == 0) throw InputError("n must be >= 1");
  Rng rng(seed);
  std::discrete_distribution<std::uint32_t> draw(dist.masses().begin(), dist.masses().end());
  DegreeSequence seq;
  seq.degrees.resize(n);
  for (auto& d : seq.degrees) d = draw(rng.engine());
  if (!seq.even()) {
    const auto v = static_cast<std::uint32_t>(rng.below(n));
    seq.degrees[v] += 1;
    seq.parity_fix = v;
  }
  return seq;
}

/// Reads one non-negative integer per line.
inline DegreeSequence load_degree_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open degree-sequence file: " + path);
  DegreeSequence seq;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long d;
    std::string rest;
    if (!(ss >> d) || (ss >> rest) || d < 0) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected a non-negative integer");
    }
    seq.degrees.push_back(static_cast<std::uint32_t>(d));
  }
  return seq;
}

}  // namespace seqmis
