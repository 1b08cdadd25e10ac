#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqmis/degree.hpp"
#include "seqmis/errors.hpp"
#include "seqmis/explore.hpp"
#include "seqmis/ode.hpp"
#include "seqmis/rate.hpp"

namespace seqmis {

struct HydroConfig {
  /// Truncation degree; defaults to the initial distribution's support.
  std::optional<std::uint32_t> k_max;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  /// Integration stops once the unexplored mass falls below this.
  double mass_eps = 1e-10;
  /// Guard on the physical clock time.
  double t_max = 1e250;
  std::size_t max_steps = 20'000'000;
  /// Exponent of the degree-greedy approximation lambda(k) = (k+1)^{-L}.
  double L = 15.0;
  /// Trajectory points kept per unit of jamming integral (plus the end point).
  std::size_t record_density = 500;
};

struct SolverStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  /// Largest increase of the total mass over one accepted step.
  double max_mass_increase = 0.0;
  /// Smallest state component seen at an accepted step.
  double min_component = 0.0;
};

/// Solution of one of the measure-valued systems.
struct MeasureTrajectory {
  /// Physical clock time of each record.
  std::vector<double> time;
  /// Accumulated jamming integral c(t).
  std::vector<double> jamming;
  /// mu_t(0..k_max) at each record.
  std::vector<std::vector<double>> mu;
  double sigma = 0.0;
  /// sigma lies in [sigma, sigma + residual_bound].
  double residual_bound = 0.0;
  /// Mass of mu_0 beyond the truncation recorded by its constructor.
  double tail_mass = 0.0;
  /// Integral of the selection probability per degree (total activations by
  /// degree at selection for the dynamic system, by initial degree for the
  /// static one).
  std::vector<double> activations_by_degree;
  /// True when t_max stopped the solve before the mass ran out.
  bool lower_estimate = false;
  SolverStats stats;
};

struct AlphaBeta {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// alpha(i) = mu(i)/sum mu, beta(i) = i mu(i)/sum j mu(j).
inline AlphaBeta alpha_beta_measures(const DegreeDistribution& mu) {
  const auto& m = mu.masses();
  const double total = mu.total();
  const double first = mu.moment(1);
  if (!(total > 0.0)) throw InputError("alpha measure needs positive total mass");
  if (!(first > 0.0)) throw InputError("beta measure needs a positive first moment");
  AlphaBeta ab{std::vector<double>(m.size()), std::vector<double>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) {
    ab.alpha[i] = m[i] / total;
    ab.beta[i] = static_cast<double>(i) * m[i] / first;
  }
  return ab;
}

/// gamma(i) = lambda(i) u(i) / sum_j lambda(j) u(j), computed with a shifted
/// log so extreme exponents do not underflow. Negative entries count as zero.
/// Returns the log of the normalizer (log of the total activation rate).
inline double selection_probabilities(std::span<const double> u, std::span<const double> log_rate,
                                      std::span<double> gamma) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] > 0.0) top = std::max(top, log_rate[i]);
  if (top == -std::numeric_limits<double>::infinity()) {
    std::fill(gamma.begin(), gamma.end(), 0.0);
    return top;
  }
  double w = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    gamma[i] = u[i] > 0.0 ? std::exp(log_rate[i] - top) * u[i] : 0.0;
    w += gamma[i];
  }
  for (auto& g : gamma) g /= w;
  return top + std::log(w);
}

/// Accepted-step view passed to observers of the dynamic solve.
struct DynamicStep {
  double jamming;  // c = activations so far
  double time;     // physical clock
  std::span<const double> mu;
  std::span<const double> gamma;
  std::span<const double> activations_by_degree;
};

using DynamicObserver = std::function<bool(const DynamicStep&)>;

namespace detail {

inline std::uint32_t resolve_kmax(const DegreeDistribution& mu0, const HydroConfig& cfg) {
  const std::uint32_t k = cfg.k_max.value_or(mu0.k_max());
  if (k < mu0.k_max()) throw InputError("k_max is below the support of the initial distribution");
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || !(cfg.mass_eps > 0.0))
    throw InputError("solver tolerances must be > 0");
  return k;
}

inline void require_normalized(const DegreeDistribution& mu0) {
  if (!mu0.normalized()) throw InputError("initial degree distribution must be normalized");
}

}  // namespace detail

namespace detail {

/// Right-hand side of the dynamic system in jamming-integral time and its
/// Jacobian. Quadratures: [physical time, activations by degree].
class DynamicField {
 public:
  explicit DynamicField(std::vector<double> log_rate)
      : log_rate_(std::move(log_rate)), n_(log_rate_.size()), w_(n_), gamma_(n_), beta_(n_ + 1, 0.0) {}

  std::size_t size() const { return n_; }
  std::span<const double> gamma() const { return gamma_; }
  std::size_t evals = 0;

  /// Updates gamma (and the cached rate weights) for the state u.
  /// Returns the log of the total activation rate.
  double select(std::span<const double> u) {
    top_ = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i)
      if (u[i] > 0.0) top_ = std::max(top_, log_rate_[i]);
    total_ = 0.0;
    if (top_ > -std::numeric_limits<double>::infinity()) {
      for (std::size_t i = 0; i < n_; ++i) {
        w_[i] = std::exp(log_rate_[i] - top_);
        gamma_[i] = w_[i] * u[i];
        total_ += gamma_[i];
      }
    }
    if (!(total_ > 0.0)) {
      std::fill(gamma_.begin(), gamma_.end(), 0.0);
      std::fill(w_.begin(), w_.end(), 0.0);
      total_ = 0.0;
      return -std::numeric_limits<double>::infinity();
    }
    for (auto& g : gamma_) g /= total_;
    return top_ + std::log(total_);
  }

  void operator()(std::span<const double> u, std::span<double> du, std::span<double> dq) {
    ++evals;
    const double log_total = select(u);
    if (!std::isfinite(log_total)) {
      std::fill(du.begin(), du.end(), 0.0);
      std::fill(dq.begin(), dq.end(), 0.0);
      return;
    }
    // A state inside the negative tolerance band must not carry real selection
    // weight; otherwise the stage is unusable and the step gets rejected.
    if (*std::min_element(gamma_.begin(), gamma_.end()) < -1e-9) {
      std::fill(du.begin(), du.end(), std::numeric_limits<double>::quiet_NaN());
      std::fill(dq.begin(), dq.end(), 0.0);
      return;
    }
    moments(u);
    for (std::size_t i = 0; i < n_; ++i) {
      du[i] = -gamma_[i];
      if (m1_ > 0.0) du[i] -= k_ * (beta_[i + 1] + (beta_[i] - beta_[i + 1]) * s_);
    }
    dq[0] = std::exp(-log_total);
    for (std::size_t i = 0; i < n_; ++i) dq[1 + i] = gamma_[i];
  }

  /// Linearizes at u. The Jacobian of the measure part is an upper
  /// bidiagonal matrix plus three rank-one terms:
  ///   J = -diag(d) - superdiag(e) + gamma w'/W + H (K i/M1 - dK)' - (beta_i - beta_{i+1}) K dS'
  /// with H_i = beta_{i+1} + (beta_i - beta_{i+1}) S, dK_j = w_j (j - K)/W and
  /// dS_j = j (j - S)/M1.
  void linearize(std::span<const double> u) {
    lin_ok_ = std::isfinite(select(u));
    if (!lin_ok_) return;
    moments(u);
    dt_ = std::exp(-(top_ + std::log(total_)));
    diag_.assign(n_, 0.0);
    super_.assign(n_, 0.0);
    for (auto& v : lu_) v.assign(n_, 0.0);
    for (auto& v : lv_) v.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = static_cast<double>(i);
      wn_[i] = w_[i] / total_;
      diag_[i] = wn_[i];
      lu_[0][i] = gamma_[i];
      lv_[0][i] = wn_[i];
      if (m1_ > 0.0) {
        diag_[i] += k_ * s_ * d / m1_;
        if (i + 1 < n_) super_[i] = k_ * (1.0 - s_) * (d + 1.0) / m1_;
        lu_[1][i] = beta_[i + 1] + (beta_[i] - beta_[i + 1]) * s_;
        lv_[1][i] = k_ * d / m1_ - wn_[i] * (d - k_);
        lu_[2][i] = beta_[i] - beta_[i + 1];
        lv_[2][i] = -k_ * d * (d - s_) / m1_;
      }
    }
  }

  /// Prepares solves with shift*I - J (Woodbury on the bidiagonal part).
  bool factor(double shift) {
    if (!lin_ok_) return false;
    shift_ = shift;
    for (std::size_t r = 0; r < 3; ++r) {
      z_[r] = lu_[r];
      back_substitute(z_[r]);
    }
    // Capacitance C = I - V' Z, inverted explicitly (3 x 3).
    double c[3][3];
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t k = 0; k < 3; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n_; ++i) dot += lv_[r][i] * z_[k][i];
        c[r][k] = (r == k ? 1.0 : 0.0) - dot;
      }
    const double det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) -
                       c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0]) +
                       c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    if (!std::isfinite(det) || det == 0.0) return false;
    cinv_[0][0] = (c[1][1] * c[2][2] - c[1][2] * c[2][1]) / det;
    cinv_[0][1] = (c[0][2] * c[2][1] - c[0][1] * c[2][2]) / det;
    cinv_[0][2] = (c[0][1] * c[1][2] - c[0][2] * c[1][1]) / det;
    cinv_[1][0] = (c[1][2] * c[2][0] - c[1][0] * c[2][2]) / det;
    cinv_[1][1] = (c[0][0] * c[2][2] - c[0][2] * c[2][0]) / det;
    cinv_[1][2] = (c[0][2] * c[1][0] - c[0][0] * c[1][2]) / det;
    cinv_[2][0] = (c[1][0] * c[2][1] - c[1][1] * c[2][0]) / det;
    cinv_[2][1] = (c[0][1] * c[2][0] - c[0][0] * c[2][1]) / det;
    cinv_[2][2] = (c[0][0] * c[1][1] - c[0][1] * c[1][0]) / det;
    return true;
  }

  void solve(std::span<double> x) {
    back_substitute(x);
    double v[3], t[3];
    for (std::size_t r = 0; r < 3; ++r) {
      v[r] = 0.0;
      for (std::size_t i = 0; i < n_; ++i) v[r] += lv_[r][i] * x[i];
    }
    for (std::size_t r = 0; r < 3; ++r) t[r] = cinv_[r][0] * v[0] + cinv_[r][1] * v[1] + cinv_[r][2] * v[2];
    for (std::size_t i = 0; i < n_; ++i) x[i] += z_[0][i] * t[0] + z_[1][i] * t[1] + z_[2][i] * t[2];
  }

  void quadrature_jvp(std::span<const double> x, std::span<double> out) const {
    if (!lin_ok_) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    double wx = 0.0;
    for (std::size_t i = 0; i < n_; ++i) wx += wn_[i] * x[i];
    out[0] = -dt_ * wx;
    for (std::size_t i = 0; i < n_; ++i) out[1 + i] = wn_[i] * x[i] - gamma_[i] * wx;
  }

  void rhs(std::span<const double> u, std::span<double> du, std::span<double> dq) { (*this)(u, du, dq); }

 private:
  void moments(std::span<const double> u) {
    m1_ = 0.0;
    double m2 = 0.0;
    k_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double x = u[i], d = static_cast<double>(i);
      m1_ += d * x;
      m2 += d * d * x;
      k_ += d * gamma_[i];
    }
    s_ = m1_ > 0.0 ? m2 / m1_ : 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      beta_[i] = m1_ > 0.0 ? static_cast<double>(i) * u[i] / m1_ : 0.0;
    beta_[n_] = 0.0;
  }

  std::vector<double> log_rate_;
  std::size_t n_;
  // x <- (shift I + diag + superdiag)^{-1} x
  void back_substitute(std::span<double> x) const {
    for (std::size_t i = n_; i-- > 0;) {
      const double next = i + 1 < n_ ? super_[i] * x[i + 1] : 0.0;
      x[i] = (x[i] - next) / (shift_ + diag_[i]);
    }
  }

  std::vector<double> w_, gamma_, beta_;
  double top_ = 0.0, total_ = 0.0, m1_ = 0.0, s_ = 0.0, k_ = 0.0;
  bool lin_ok_ = false;
  double dt_ = 0.0, shift_ = 0.0;
  std::vector<double> wn_ = std::vector<double>(n_), diag_, super_;
  std::array<std::vector<double>, 3> lu_, lv_, z_;
  double cinv_[3][3] = {};
};

}  // namespace detail

/// Dynamic degree-aware system: vertices activate at rate lambda(current degree),
/// neighbours of the activated vertex are blocked and their remaining
/// half-edges paired uniformly.
///
/// The system is integrated in the jamming integral c itself as independent
/// variable (dc = Lambda dt, Lambda the total activation rate). The
/// right-hand side then depends on the rates only through gamma, the
/// physical clock is carried as dt/dc = 1/Lambda, and sigma is the value of
/// c when the mass runs out. Strongly separated rates make the system stiff,
/// so a linearly implicit scheme is used.
inline MeasureTrajectory solve_dynamic_system(const DegreeDistribution& mu0, const RateFunction& rate,
                                              const HydroConfig& cfg = {}, const DynamicObserver& observe = {}) {
  detail::require_normalized(mu0);
  const std::uint32_t K = detail::resolve_kmax(mu0, cfg);
  const std::size_t nk = K + 1;
  std::vector<double> log_rate(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    log_rate[k] = rate.log_rate(k);
    if (!std::isfinite(log_rate[k])) throw InputError("rate must be positive and finite up to k_max");
  }
  detail::DynamicField field(std::move(log_rate));

  MeasureTrajectory out;
  out.tail_mass = mu0.tail_mass();
  std::vector<double> u = mu0.padded(K);
  std::vector<double> q(nk + 1, 0.0);  // [time, activations by degree]
  auto mass_of = [](std::span<const double> s) { return std::accumulate(s.begin(), s.end(), 0.0); };

  double c = 0.0;
  double last_record = -1.0;
  auto record = [&](bool force) {
    if (!force && c - last_record < 1.0 / static_cast<double>(cfg.record_density)) return;
    out.time.push_back(q[0]);
    out.jamming.push_back(c);
    out.mu.push_back(u);
    last_record = c;
  };
  auto notify = [&]() {
    if (!observe) return true;
    field.select(u);
    return observe(DynamicStep{c, q[0], u, field.gamma(), std::span<const double>(q).subspan(1)});
  };
  auto finish = [&](double mass) {
    // Unexplored isolated vertices are certain to be activated.
    const double isolated = std::max(u[0], 0.0);
    c += isolated;
    q[1] += isolated;
    out.sigma = c;
    out.residual_bound = std::max(mass - isolated, 0.0);
    out.activations_by_degree.assign(q.begin() + 1, q.end());
    out.stats.rhs_evals = field.evals;
    return out;
  };

  double mass = mass_of(u);
  record(true);
  double edges = 0.0;
  for (std::size_t k = 1; k < nk; ++k) edges += static_cast<double>(k) * u[k];
  if (!notify() || mass < cfg.mass_eps || edges == 0.0) return finish(mass);

  ode::Rosenbrock4 stepper(nk, nk + 1);
  std::vector<double> u_new, q_new, err_u, err_q, err(2 * nk);
  std::vector<double> both_old(2 * nk), both_new(2 * nk);
  // d(mass)/dc <= -1, so the remaining mass bounds any useful step.
  double h = std::min(1e-3, mass);
  bool fresh_jacobian = false;
  bool finished = false;
  while (!finished) {
    if (out.stats.accepted + out.stats.rejected >= cfg.max_steps)
      throw NumericalError("dynamic system: step budget exhausted at c=" + std::to_string(c) +
                           ", remaining mass " + std::to_string(mass));
    if (!(h > 1e-300) || !std::isfinite(h))
      throw NumericalError("dynamic system: step size underflow at c=" + std::to_string(c) +
                           ", remaining mass " + std::to_string(mass));
    if (!fresh_jacobian) {
      field.linearize(u);
      fresh_jacobian = true;
    }
    if (!stepper.attempt(field, u, q, h, u_new, q_new, err_u, err_q)) {
      ++out.stats.rejected;
      h *= 0.25;
      continue;
    }
    // Error control on the measure and the activation integrals, not on the clock.
    std::copy(err_u.begin(), err_u.end(), err.begin());
    std::copy(err_q.begin() + 1, err_q.end(), err.begin() + nk);
    std::copy(u.begin(), u.end(), both_old.begin());
    std::copy(q.begin() + 1, q.end(), both_old.begin() + nk);
    std::copy(u_new.begin(), u_new.end(), both_new.begin());
    std::copy(q_new.begin() + 1, q_new.end(), both_new.begin() + nk);
    const double e = ode::error_norm(err, both_old, both_new, 2 * nk, cfg.rel_tol, cfg.abs_tol);
    double min_u = 0.0;
    for (double x : u_new) min_u = std::min(min_u, x);
    const bool negative = min_u < -cfg.abs_tol;
    const double mass_new = mass_of(u_new);
    if (!(e <= 1.0) || negative || !std::isfinite(q_new[0])) {
      ++out.stats.rejected;
      h *= e > 1.0 && std::isfinite(e) ? ode::Rosenbrock4::step_factor(e) : 0.5;
      continue;
    }
    if (mass_new < 0.1 * cfg.mass_eps) {
      // Overshot the end of the exploration: aim at half the threshold.
      ++out.stats.rejected;
      h *= std::clamp((mass - 0.5 * cfg.mass_eps) / (mass - mass_new), 0.1, 0.99);
      continue;
    }
    ++out.stats.accepted;
    fresh_jacobian = false;
    out.stats.max_mass_increase = std::max(out.stats.max_mass_increase, mass_new - mass);
    out.stats.min_component = std::min(out.stats.min_component, min_u);
    c += h;
    u.swap(u_new);
    q.swap(q_new);
    mass = mass_of(u);
    finished = mass < cfg.mass_eps;
    if (q[0] > cfg.t_max) {
      out.lower_estimate = true;
      finished = true;
    }
    record(finished);
    if (!notify()) finished = true;
    h *= ode::Rosenbrock4::step_factor(e);
    h = std::min(h, std::max(mass, cfg.mass_eps));
  }
  return finish(mass);
}

/// Greedy (uniform) exploration: the dynamic system with unit rates.
inline MeasureTrajectory solve_greedy_system(const DegreeDistribution& mu0, const HydroConfig& cfg = {}) {
  return solve_dynamic_system(mu0, RateFunction::constant(1.0), cfg);
}

/// Result of the static degree-aware limit.
struct StaticSolution {
  std::vector<double> time;
  std::vector<double> tau;
  /// Accumulated sigma integral at each record.
  std::vector<double> jamming;
  double sigma = 0.0;
  double residual_bound = 0.0;
  double tail_mass = 0.0;
  /// Degree composition of the independent set by initial degree; sums to one.
  DegreeDistribution q;
  /// Unnormalized per-degree activation integrals.
  std::vector<double> activations_by_degree;
  bool lower_estimate = false;
  SolverStats stats;
};

/// mu_t(k) = mu_0(k) exp(-lambda(k) t - k tau(t)) for initial degree k.
inline std::vector<double> static_measure_at(const DegreeDistribution& mu0, const RateFunction& rate, double t,
                                             double tau) {
  std::vector<double> m(mu0.k_max() + 1);
  for (std::size_t k = 0; k < m.size(); ++k)
    m[k] = mu0[k] > 0.0 ? mu0[k] * std::exp(-rate(k) * t - static_cast<double>(k) * tau) : 0.0;
  return m;
}

/// Static degree-aware limit: clocks depend on the initial degree only, and
/// the whole dynamics reduces to the scalar time change tau(t).
inline StaticSolution solve_static(const DegreeDistribution& mu0, const RateFunction& rate,
                                   const HydroConfig& cfg = {}) {
  detail::require_normalized(mu0);
  const std::uint32_t K = detail::resolve_kmax(mu0, cfg);
  const std::size_t nk = K + 1;
  const auto p = mu0.padded(K);
  StaticSolution out;
  out.tail_mass = mu0.tail_mass();
  const double m = mu0.moment(1);
  out.activations_by_degree.assign(nk, 0.0);
  // Isolated vertices are never blocked: all of them end up active.
  out.activations_by_degree[0] = p[0];
  if (!(m > 0.0)) {
    out.sigma = p[0];
    out.q = DegreeDistribution::point(0);
    out.time = {0.0};
    out.tau = {0.0};
    out.jamming = {out.sigma};
    return out;
  }
  std::vector<double> lam(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    lam[k] = rate(k);
    if (!(lam[k] > 0.0) || !std::isfinite(lam[k])) throw InputError("static rates must be positive and finite");
  }
  // A common factor on all clocks only rescales time, so integrate with the
  // fastest clock on the support normalized to one.
  double lam_max = 0.0;
  for (std::size_t k = 1; k < nk; ++k)
    if (p[k] > 0.0) lam_max = std::max(lam_max, lam[k]);
  for (auto& l : lam) l /= lam_max;
  // State: tau, I_1..I_K (activation integrals by initial degree).
  const std::size_t dim = nk;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    ++out.stats.rhs_evals;
    const double tau = y[0];
    double dtau = 0.0;
    for (std::size_t k = 1; k < nk; ++k) {
      if (p[k] == 0.0) {
        dy[k] = 0.0;
        continue;
      }
      const double kd = static_cast<double>(k);
      const double alive = p[k] * std::exp(-lam[k] * t - kd * tau);
      dy[k] = lam[k] * alive;
      dtau += kd * lam[k] * p[k] * std::exp(-lam[k] * t - (kd - 2.0) * tau);
    }
    dy[0] = dtau / m;
  };
  auto remaining = [&](double t, double tau) {
    double r = 0.0;
    for (std::size_t k = 1; k < nk; ++k)
      if (p[k] > 0.0) r += p[k] * std::exp(-lam[k] * t - static_cast<double>(k) * tau);
    return r;
  };
  std::vector<double> y(dim, 0.0), dydt(dim), y_new, dydt_new, err;
  double t = 0.0;
  auto record = [&] {
    out.time.push_back(t / lam_max);
    out.tau.push_back(y[0]);
    out.jamming.push_back(p[0] + std::accumulate(y.begin() + 1, y.end(), 0.0));
  };
  record();
  rhs(t, y, dydt);
  ode::DormandPrince stepper(dim);
  double h = ode::initial_step(rhs, t, y, dydt, dim, cfg.rel_tol, cfg.abs_tol);
  double left = remaining(t, y[0]);
  while (left >= cfg.mass_eps) {
    if (t / lam_max > cfg.t_max) {
      out.lower_estimate = true;
      break;
    }
    if (out.stats.accepted + out.stats.rejected >= cfg.max_steps)
      throw NumericalError("static system: step budget exhausted at t=" + std::to_string(t / lam_max));
    if (!(h > 0.0) || t + h == t)
      throw NumericalError("static system: step size underflow at t=" + std::to_string(t / lam_max));
    stepper.attempt(rhs, t, y, dydt, h, y_new, dydt_new, err);
    bool finite = true;
    for (double v : y_new) finite = finite && std::isfinite(v);
    if (!finite) {
      ++out.stats.rejected;
      h *= 0.25;
      if (h < 1e-300) throw NumericalError("static system: tau diverged at t=" + std::to_string(t / lam_max));
      continue;
    }
    const double e = ode::error_norm(err, y, y_new, dim, cfg.rel_tol, cfg.abs_tol);
    if (e > 1.0) {
      ++out.stats.rejected;
      h *= ode::step_factor(e);
      continue;
    }
    ++out.stats.accepted;
    t += h;
    y.swap(y_new);
    dydt.swap(dydt_new);
    const double left_new = remaining(t, y[0]);
    out.stats.max_mass_increase = std::max(out.stats.max_mass_increase, left_new - left);
    left = left_new;
    record();
    h *= ode::step_factor(e);
  }
  for (std::size_t k = 1; k < nk; ++k) out.activations_by_degree[k] = y[k];
  out.sigma = std::accumulate(out.activations_by_degree.begin(), out.activations_by_degree.end(), 0.0);
  out.residual_bound = left;
  std::vector<double> q(out.activations_by_degree);
  for (auto& x : q) x /= out.sigma;
  out.q = DegreeDistribution(std::move(q), false);
  out.q = out.q.normalized_copy();
  return out;
}

namespace detail {

/// Adaptive Simpson quadrature.
template <class F>
double simpson(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-14) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

struct JansonResult {
  double sigma = 0.0;
  /// Root of the half-edge clock equation; +inf when the cumulative integral never reaches one.
  double tau_inf = 0.0;
};

/// Closed-form greedy jamming constant on the configuration model:
/// tau_inf solves m * int_0^tau e^{-2h} / D(h) dh = 1 with
/// D(h) = sum i mu(i) e^{-ih}, and
/// sigma = m * int_0^tau_inf e^{-2h} A(h) / D(h) dh, A(h) = sum mu(i) e^{-ih}.
inline JansonResult janson_jamming(const DegreeDistribution& mu0) {
  detail::require_normalized(mu0);
  const auto& p = mu0.masses();
  const double m = mu0.moment(1);
  if (!(m > 0.0)) throw InputError("janson_jamming needs a positive mean degree");
  auto sums = [&](double h, double& a, double& d) {
    a = 0.0;
    d = 0.0;
    // Factor out e^{-k0 h} with k0 the smallest positive degree for stability.
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == 0.0) continue;
      const double w = p[i] * std::exp(-static_cast<double>(i) * h);
      a += w;
      d += static_cast<double>(i) * w;
    }
  };
  auto clock_integrand = [&](double h) {
    double a, d;
    sums(h, a, d);
    return m * std::exp(-2.0 * h) / d;
  };
  auto sigma_integrand = [&](double h) {
    double a, d;
    sums(h, a, d);
    return m * std::exp(-2.0 * h) * a / d;
  };
  const double p1 = p.size() > 1 ? p[1] : 0.0;
  // Bound on the clock integral beyond h, valid since D(h) >= p1 e^{-h}.
  auto tail_bound = [&](double h) { return p1 > 0.0 ? m * std::exp(-h) / p1 : std::numeric_limits<double>::infinity(); };

  JansonResult r;
  double h = 0.0, cum = 0.0;
  const double dh = 0.05;
  while (true) {
    const double seg = detail::integrate(clock_integrand, h, h + dh);
    if (cum + seg >= 1.0) {
      double lo = h, hi = h + dh;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cum + detail::integrate(clock_integrand, h, mid) >= 1.0) hi = mid;
        else lo = mid;
      }
      r.tau_inf = 0.5 * (lo + hi);
      break;
    }
    cum += seg;
    h += dh;
    if (cum + tail_bound(h) < 1.0 - 1e-9) {
      r.tau_inf = std::numeric_limits<double>::infinity();
      break;
    }
    if (h > 1e4) throw NumericalError("janson_jamming: clock integral failed to converge");
  }
  if (std::isfinite(r.tau_inf)) {
    double s = 0.0;
    for (double a = 0.0; a < r.tau_inf; a += dh) s += detail::integrate(sigma_integrand, a, std::min(a + dh, r.tau_inf));
    r.sigma = s;
  } else {
    // Integrate until the remaining integrand, bounded by m e^{-h} A(h)/p1, is negligible.
    double s = 0.0;
    double a = 0.0;
    while (true) {
      s += detail::integrate(sigma_integrand, a, a + dh);
      a += dh;
      double av, dv;
      sums(a, av, dv);
      if (m * std::exp(-a) * av / p1 < 1e-14) break;
      if (a > 1e4) throw NumericalError("janson_jamming: sigma integral failed to converge");
    }
    r.sigma = s;
  }
  return r;
}

/// log(1+lambda)/lambda, the greedy limit on sparse Erdos–Renyi graphs.
inline double er_greedy_jamming(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be > 0");
  if (lambda < 1e-8) return 1.0 - lambda / 2.0 + lambda * lambda / 3.0;
  return std::log1p(lambda) / lambda;
}

/// 1/2 [1 - (d-1)^{-2/(d-1)}], the regular-graph lower bound in its printed form.
inline double wormald_regular_bound(int d) {
  if (d < 2) throw InputError("wormald_regular_bound needs d >= 2");
  const double dm1 = d - 1.0;
  return 0.5 * (1.0 - std::pow(dm1, -2.0 / dm1));
}

/// 1/2 [1 - (d-1)^{-2/(d-2)}], the greedy jamming constant on random d-regular
/// graphs; d = 2 is the limit (1 - e^{-2})/2.
inline double regular_greedy_jamming(int d) {
  if (d < 1) throw InputError("regular_greedy_jamming needs d >= 1");
  if (d == 1) return 0.5;
  if (d == 2) return 0.5 * (1.0 - std::exp(-2.0));
  const double dm1 = d - 1.0;
  return 0.5 * (1.0 - std::pow(dm1, -2.0 / (d - 2.0)));
}

struct AlphaUpperBound {
  double fraction = 0.0;
  /// Set outside lambda > 3, where the bound is not claimed.
  bool advisory = false;
};

/// Independence-number bound for ER(n, lambda/n) as a fraction of n:
/// 2 log(lambda) / (n |log(1 - lambda/n)|).
inline AlphaUpperBound er_alpha_upper_bound(double n, double lambda) {
  if (!(lambda > 0.0) || !(lambda < n)) throw InputError("er_alpha_upper_bound needs 0 < lambda < n");
  AlphaUpperBound b;
  b.fraction = 2.0 * std::log(lambda) / (n * std::abs(std::log1p(-lambda / n)));
  b.advisory = !(lambda > 3.0);
  return b;
}

/// sum i(i-1) mu(i) / sum i mu(i); zero when there are no edges.
inline double subcriticality_ratio(std::span<const double> mu) {
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = std::max(mu[i], 0.0);
    first += static_cast<double>(i) * x;
    second += static_cast<double>(i) * (static_cast<double>(i) - 1.0) * x;
  }
  return first > 0.0 ? second / first : 0.0;
}

inline double subcriticality_ratio(const DegreeDistribution& mu) { return subcriticality_ratio(mu.masses()); }

enum class Verdict { optimal, not_established };

inline const char* verdict_name(Verdict v) { return v == Verdict::optimal ? "optimal" : "not_established"; }

struct OptimalityConfig {
  HydroConfig hydro;
  /// Largest selection mass on degrees >= 2 tolerated during phase 1. With
  /// lambda(k) = (k+1)^{-L} the baseline leakage is about (2/3)^L times the
  /// ratio of degree->=2 to degree-1 mass, so the default suits L = 15.
  double leakage_tol = 0.015;
  /// Phase 1 is over once mu({0,1}) / mu(>=2) falls below this.
  double relative_mass = 0.1;
  /// Remaining mass below which the graph counts as exhausted.
  double negligible_mass = 1e-6;
  /// Largest share of the second moment that may sit beyond k_max; above it
  /// the moment assumptions behind the limit are not met.
  double moment_tail_tol = 0.05;
  /// Monte Carlo confirmation on a configuration model of this size (0 skips it).
  std::size_t mc_n = 100'000;
  std::uint64_t mc_seed = 1;
};

struct McConfirmation {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double jamming = 0.0;
  /// Empty when every selection had degree <= 1.
  std::optional<HighDegreeSelection> first_high_degree;
};

struct OptimalityReport {
  /// Physical time and jamming integral at the end of phase 1.
  double phase1_end = 0.0;
  double phase1_jamming = 0.0;
  /// True when phase 1 lasted until the graph was exhausted.
  bool exhausted = false;
  double remaining_mass = 0.0;
  double leakage = 0.0;
  /// Zero when the graph is exhausted.
  double subcrit_ratio = 0.0;
  double tail_second_moment_share = 0.0;
  bool moment_condition = true;
  Verdict verdict = Verdict::not_established;
  double sigma = 0.0;
  std::optional<McConfirmation> mc;
};

/// Lower bound on the share of the second moment lost to truncation:
/// k_max^2 * tail / (m2 + k_max^2 * tail).
inline double tail_second_moment_share(const DegreeDistribution& mu0) {
  const double k = static_cast<double>(mu0.k_max());
  const double lost = k * k * mu0.tail_mass();
  const double kept = mu0.moment(2);
  return lost > 0.0 ? lost / (kept + lost) : 0.0;
}

/// Decides whether degree-greedy exploration is asymptotically optimal:
/// phase 1 must select (almost) only degrees 0 and 1, and what is left when
/// degree-0/1 vertices run out must be subcritical.
inline OptimalityReport check_degree_greedy_optimality(const DegreeDistribution& mu0,
                                                       const OptimalityConfig& cfg = {}) {
  detail::require_normalized(mu0);
  OptimalityReport rep;
  rep.tail_second_moment_share = tail_second_moment_share(mu0);
  rep.moment_condition = rep.tail_second_moment_share <= cfg.moment_tail_tol;

  std::vector<double> mu_t;
  bool ended = false;
  auto watch = [&](const DynamicStep& st) {
    double low = 0.0, high = 0.0, leak = 0.0;
    for (std::size_t i = 0; i < st.mu.size(); ++i) {
      (i < 2 ? low : high) += st.mu[i];
      if (i >= 2) leak += st.gamma[i];
    }
    rep.phase1_end = st.time;
    rep.phase1_jamming = st.jamming;
    rep.remaining_mass = low + high;
    mu_t.assign(st.mu.begin(), st.mu.end());
    if (low + high < cfg.negligible_mass) {
      rep.exhausted = true;
      return false;
    }
    rep.leakage = std::max(rep.leakage, leak);
    if (leak > cfg.leakage_tol && low < cfg.relative_mass * high) {
      ended = true;
      return false;
    }
    return true;
  };
  const auto traj = solve_dynamic_system(mu0, RateFunction::power(-cfg.hydro.L), cfg.hydro, watch);
  if (!ended && !rep.exhausted) rep.exhausted = true;  // mass ran out between observations
  rep.sigma = traj.sigma;
  rep.subcrit_ratio = rep.exhausted ? 0.0 : subcriticality_ratio(mu_t);
  rep.verdict = rep.moment_condition && rep.leakage <= cfg.leakage_tol && rep.subcrit_ratio < 1.0
                    ? Verdict::optimal
                    : Verdict::not_established;

  if (cfg.mc_n > 0) {
    McConfirmation mc;
    mc.n = cfg.mc_n;
    mc.seed = cfg.mc_seed;
    const auto seq = sample_degree_sequence(mu0, cfg.mc_n, cfg.mc_seed);
    ExploreOptions opts;
    opts.record_log = false;
    const auto run = run_lazy_cm_exploration(seq, Policy::min_degree(), Rng(cfg.mc_seed).split(1).seed(), opts);
    mc.jamming = run.jamming;
    mc.first_high_degree = run.first_high_degree;
    rep.mc = mc;
  }
  return rep;
}

}  // namespace seqmis
