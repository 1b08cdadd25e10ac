#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "seqmis/degree.hpp"
#include "seqmis/errors.hpp"
#include "seqmis/hydro.hpp"
#include "seqmis/rate.hpp"

namespace seqmis {

/// Half-L1 distance between two normalized distributions, degree 0 included.
inline double total_variation(const DegreeDistribution& p, const DegreeDistribution& q) {
  if (!p.normalized() || !q.normalized()) throw InputError("total_variation needs normalized distributions");
  const std::size_t n = std::max(p.masses().size(), q.masses().size());
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::abs(p[k] - q[k]);
  return std::min(1.0, 0.5 * acc);
}

struct FairnessPoint {
  double L = 0.0;
  double sigma = 0.0;
  double unfairness = 0.0;
  double mean_active_degree = 0.0;
  DegreeDistribution q;
};

/// Static exploration with clocks lambda(i) = (i+1)^{+L}: large L favours
/// high degrees, negative L low ones.
inline FairnessPoint fairness_point(const DegreeDistribution& mu0, double L, const HydroConfig& cfg = {}) {
  const auto sol = solve_static(mu0, RateFunction::power(L), cfg);
  FairnessPoint pt;
  pt.L = L;
  pt.sigma = sol.sigma;
  pt.q = sol.q;
  pt.unfairness = total_variation(mu0, sol.q);
  pt.mean_active_degree = sol.q.mean();
  return pt;
}

struct FairnessArgmin {
  double L_star = 0.0;
  double unfairness_min = 0.0;
  double sigma_star = 0.0;
  /// sigma(L*) / sigma(0).
  double sigma_ratio_vs_L0 = 0.0;
  /// False when the grid minimum sits at either end of the grid.
  bool interior = false;
};

struct FairnessSweep {
  std::vector<FairnessPoint> points;
  FairnessArgmin argmin;
};

/// L from lo to hi (inclusive) in steps of `step`.
inline std::vector<double> l_grid(double lo = -2.0, double hi = 5.0, double step = 0.1) {
  if (!(step > 0.0) || hi < lo) throw InputError("bad L grid");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

/// One fairness point per grid value, then golden-section refinement of the
/// unfairness minimum between the grid neighbours of the best grid point.
inline FairnessSweep sweep_fairness(const DegreeDistribution& mu0, const std::vector<double>& grid,
                                    const HydroConfig& cfg = {}, unsigned workers = 1) {
  if (grid.empty()) throw InputError("empty L grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("L grid must be sorted");
  FairnessSweep out;
  out.points.resize(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out.points[i] = fairness_point(mu0, grid[i], cfg);
      } catch (...) {
        std::lock_guard<std::mutex> g(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const auto best = std::min_element(out.points.begin(), out.points.end(),
                                     [](const auto& a, const auto& b) { return a.unfairness < b.unfairness; });
  const auto i = static_cast<std::size_t>(best - out.points.begin());
  auto& am = out.argmin;
  am.interior = i > 0 && i + 1 < grid.size();
  FairnessPoint star = *best;
  if (am.interior) {
    double a = grid[i - 1], b = grid[i + 1];
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    auto f1 = fairness_point(mu0, x1, cfg), f2 = fairness_point(mu0, x2, cfg);
    while (b - a > 1e-4) {
      if (f1.unfairness < f2.unfairness) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - r * (b - a);
        f1 = fairness_point(mu0, x1, cfg);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + r * (b - a);
        f2 = fairness_point(mu0, x2, cfg);
      }
    }
    const auto& cand = f1.unfairness < f2.unfairness ? f1 : f2;
    if (cand.unfairness < star.unfairness) star = cand;
  }
  am.L_star = star.L;
  am.unfairness_min = star.unfairness;
  am.sigma_star = star.sigma;
  const double sigma0 = fairness_point(mu0, 0.0, cfg).sigma;
  am.sigma_ratio_vs_L0 = star.sigma / sigma0;
  return out;
}

}  // namespace seqmis
