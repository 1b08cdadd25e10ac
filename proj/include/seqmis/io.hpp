#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqmis/explore.hpp"
#include "seqmis/fairness.hpp"
#include "seqmis/glauber.hpp"
#include "seqmis/hydro.hpp"

namespace seqmis::io {

using json = nlohmann::ordered_json;

/// Shortest decimal text that reads back to the same double.
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json exploration_json(const ExplorationResult& r, const Policy& policy, std::uint64_t seed, double runtime_ms,
                             bool with_log) {
  json j;
  j["n"] = r.n;
  j["policy"] = policy.name();
  j["seed"] = seed;
  j["is_size"] = r.active.size();
  j["jamming"] = r.jamming;
  j["degree_hist_active"] = r.active_degree_hist;
  if (with_log) {
    json log = json::array();
    for (const auto& a : r.activation_log) log.push_back({a.time, a.vertex, a.degree});
    j["activation_log"] = std::move(log);
  }
  j["runtime_ms"] = runtime_ms;
  return j;
}

inline void write_trajectory_csv(std::ostream& out, const ActivityTrajectory& tr, bool header = true) {
  if (header) out << "phase,transition_index,time,active_count\n";
  for (const auto& s : tr.samples)
    out << phase_name(s.phase) << ',' << s.index << ',' << num(s.time) << ',' << s.active << '\n';
}

inline void write_measure_csv(std::ostream& out, const MeasureTrajectory& tr) {
  const std::size_t width = tr.mu.empty() ? 0 : tr.mu.front().size();
  out << "t,c";
  for (std::size_t k = 0; k < width; ++k) out << ",mu_" << k;
  out << '\n';
  for (std::size_t r = 0; r < tr.time.size(); ++r) {
    out << num(tr.time[r]) << ',' << num(tr.jamming[r]);
    for (double x : tr.mu[r]) out << ',' << num(x);
    out << '\n';
  }
}

inline json stats_json(const SolverStats& s) {
  return {{"accepted_steps", s.accepted},
          {"rejected_steps", s.rejected},
          {"rhs_evals", s.rhs_evals},
          {"max_mass_increase", s.max_mass_increase},
          {"min_component", s.min_component}};
}

inline json hydro_json(const MeasureTrajectory& tr) {
  json q = json::array();
  if (tr.sigma > 0.0)
    for (double a : tr.activations_by_degree) q.push_back(a / tr.sigma);
  return {{"sigma", tr.sigma},         {"sigma_residual_bound", tr.residual_bound},
          {"q", q},                    {"tail_mass", tr.tail_mass},
          {"lower_estimate", tr.lower_estimate}, {"solver_stats", stats_json(tr.stats)}};
}

inline json hydro_json(const StaticSolution& s) {
  return {{"sigma", s.sigma},
          {"sigma_residual_bound", s.residual_bound},
          {"q", s.q.masses()},
          {"tail_mass", s.tail_mass},
          {"lower_estimate", s.lower_estimate},
          {"solver_stats", stats_json(s.stats)}};
}

inline json optimality_json(const OptimalityReport& r) {
  json j = {{"verdict", verdict_name(r.verdict)},
            {"phase1_end", r.phase1_end},
            {"phase1_jamming", r.phase1_jamming},
            {"exhausted", r.exhausted},
            {"remaining_mass", r.remaining_mass},
            {"leakage", r.leakage},
            {"subcrit_ratio", r.subcrit_ratio},
            {"moment_condition", r.moment_condition},
            {"tail_second_moment_share", r.tail_second_moment_share},
            {"sigma", r.sigma}};
  if (r.mc) {
    json mc = {{"n", r.mc->n}, {"seed", r.mc->seed}, {"jamming", r.mc->jamming}};
    if (r.mc->first_high_degree) {
      const auto& h = *r.mc->first_high_degree;
      mc["first_high_degree"] = {{"step", h.step},
                                 {"degree", h.degree},
                                 {"remaining_fraction", h.remaining_fraction},
                                 {"subcrit_ratio", h.subcrit_ratio}};
    } else {
      mc["first_high_degree"] = nullptr;
    }
    j["mc"] = std::move(mc);
  }
  return j;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<FairnessPoint>& pts) {
  out << "L,sigma,unfairness,mean_active_degree\n";
  for (const auto& p : pts)
    out << num(p.L) << ',' << num(p.sigma) << ',' << num(p.unfairness) << ',' << num(p.mean_active_degree) << '\n';
}

inline json argmin_json(const FairnessArgmin& a) {
  return {{"L_star", a.L_star},
          {"sigma_ratio_vs_L0", a.sigma_ratio_vs_L0},
          {"unfairness_min", a.unfairness_min},
          {"interior", a.interior}};
}

}  // namespace seqmis::io
