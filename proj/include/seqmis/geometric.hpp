#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqmis/errors.hpp"
#include "seqmis/graph.hpp"
#include "seqmis/rng.hpp"

namespace seqmis {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Site {
  std::string id;
  Point p;
};

/// Interference model: i and j are linked iff X_ij * d(i,j)^{-a} > T, with X_ij
/// log-normal of mean 1 and variance `fading_variance`, one draw per pair.
struct GeometricModel {
  double pathloss_exponent = 2.0;
  double threshold = 1.0;
  double fading_variance = 0.0;

  void validate() const {
    if (!(pathloss_exponent > 0.0)) throw InputError("path-loss exponent must be > 0");
    if (!(threshold > 0.0)) throw InputError("threshold must be > 0");
    if (!(fading_variance >= 0.0)) throw InputError("fading variance must be >= 0");
  }
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Parameters (mu, s) of ln X for a log-normal X with E[X] = 1 and Var[X] = theta.
inline std::pair<double, double> lognormal_unit_mean(double theta) {
  const double s2 = std::log1p(theta);
  return {-0.5 * s2, std::sqrt(s2)};
}

/// P(X > T d^a) for the unit-mean log-normal fading.
inline double link_probability(const GeometricModel& m, double d) {
  const double need = m.threshold * std::pow(d, m.pathloss_exponent);
  if (m.fading_variance == 0.0) return need < 1.0 ? 1.0 : 0.0;
  const auto [mu, s] = lognormal_unit_mean(m.fading_variance);
  return 0.5 * std::erfc((std::log(need) - mu) / (s * std::numbers::sqrt2));
}

inline MultiGraph gen_geometric(const GeometricModel& model, const std::vector<Point>& pts,
                                std::uint64_t seed) {
  model.validate();
  const std::size_t n = pts.size();
  MultiGraph g(n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto [mu, s] = lognormal_unit_mean(model.fading_variance);
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = i + 1; j < n; ++j) {
      const double d = distance(pts[i], pts[j]);
      if (d == 0.0) throw InputError("coincident points " + std::to_string(i) + " and " + std::to_string(j));
      double x = 1.0;
      if (model.fading_variance > 0.0) x = std::exp(mu + s * normal(rng.engine()));
      if (x * std::pow(d, -model.pathloss_exponent) > model.threshold) g.add_edge(i, j);
    }
  }
  return g;
}

/// Homogeneous Poisson point process on a disc centred at the origin, with
/// intensity chosen so the expected count is `mean_count`.
inline std::vector<Point> poisson_disc(double mean_count, double radius, std::uint64_t seed) {
  if (!(mean_count >= 0.0) || !(radius > 0.0)) throw InputError("poisson_disc needs mean >= 0, radius > 0");
  Rng rng(seed);
  const auto count = std::poisson_distribution<std::size_t>(mean_count)(rng.engine());
  std::vector<Point> pts(count);
  for (auto& p : pts) {
    const double r = radius * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    p = {r * std::cos(phi), r * std::sin(phi)};
  }
  return pts;
}

struct Calibration {
  double threshold = 0.0;
  double mean_degree = 0.0;
  /// Equivalent no-fading range T^{-1/a}.
  double range = 0.0;
};

/// Threshold T whose fading-free graph on `pts` has mean degree closest to the
/// target. The mean degree only changes at the pairwise values d^{-a}, so the
/// search runs over the sorted pair distances; the returned T sits halfway
/// (in log scale) between the last included and first excluded pair.
inline Calibration calibrate_threshold(double pathloss_exponent, const std::vector<Point>& pts,
                                       double target_mean_degree) {
  if (!(target_mean_degree > 0.0)) throw InputError("target mean degree must be > 0");
  if (!(pathloss_exponent > 0.0)) throw InputError("path-loss exponent must be > 0");
  const std::size_t n = pts.size();
  if (n < 2) throw InputError("calibration needs at least two points");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = distance(pts[i], pts[j]);
      if (dij == 0.0) throw InputError("coincident points " + std::to_string(i) + " and " + std::to_string(j));
      d.push_back(dij);
    }
  std::sort(d.begin(), d.end());
  const double wanted_edges = target_mean_degree * static_cast<double>(n) / 2.0;
  auto edges = static_cast<std::size_t>(std::llround(wanted_edges));
  edges = std::clamp<std::size_t>(edges, 1, d.size());
  const double a = pathloss_exponent;
  const double inner = std::pow(d[edges - 1], -a);
  double t;
  if (edges == d.size()) {
    t = 0.5 * inner;
  } else {
    const double outer = std::pow(d[edges], -a);
    t = std::sqrt(inner * outer);
    if (!(t < inner && t >= outer)) t = outer;  // ties between distances
  }
  Calibration c;
  c.threshold = t;
  std::size_t linked = 0;
  for (double x : d) linked += std::pow(x, -a) > t ? 1 : 0;
  c.mean_degree = 2.0 * static_cast<double>(linked) / static_cast<double>(n);
  c.range = std::pow(t, -1.0 / a);
  return c;
}

/// Reads a CSV with header `id,x,y`.
inline std::vector<Site> load_positions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open positions file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": missing header");
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
  };
  if (strip(line) != "id,x,y") throw InputError(path + ": header must be `id,x,y`");
  std::vector<Site> sites;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(strip(cell));
    const std::string where = path + ":" + std::to_string(lineno);
    if (cols.size() != 3 || cols[0].empty()) throw InputError(where + ": malformed row");
    auto parse = [&](const std::string& s) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw InputError(where + ": bad coordinate `" + s + "`");
      }
      if (used != s.size()) throw InputError(where + ": bad coordinate `" + s + "`");
      if (!std::isfinite(v)) throw InputError(where + ": non-finite coordinate");
      return v;
    };
    Site site{cols[0], {parse(cols[1]), parse(cols[2])}};
    if (!seen.insert(site.id).second) throw InputError(where + ": duplicate id " + site.id);
    sites.push_back(std::move(site));
  }
  return sites;
}

inline std::vector<Point> points_of(const std::vector<Site>& sites) {
  std::vector<Point> pts;
  pts.reserve(sites.size());
  for (const auto& s : sites) pts.push_back(s.p);
  return pts;
}

}  // namespace seqmis
