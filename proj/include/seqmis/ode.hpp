#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace seqmis::ode {

/// Dormand–Prince 5(4) embedded pair with FSAL. The caller owns the step loop
/// so it can impose positivity, event and stopping logic between attempts.
class DormandPrince {
 public:
  explicit DormandPrince(std::size_t dim) : k_(7, std::vector<double>(dim)), tmp_(dim) {}

  /// Attempts a step of size h from (t, y) with derivative dydt = f(t, y).
  /// Writes the 5th-order solution, its derivative, and the error estimate.
  template <class F>
  void attempt(F& f, double t, std::span<const double> y, std::span<const double> dydt, double h,
               std::vector<double>& y_out, std::vector<double>& dydt_out, std::vector<double>& err) {
    const std::size_t n = y.size();
    std::copy(dydt.begin(), dydt.end(), k_[0].begin());
    auto stage = [&](int s, std::initializer_list<double> coeffs, double c) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        int j = 0;
        for (double a : coeffs) acc += a * k_[j++][i];
        tmp_[i] = y[i] + h * acc;
      }
      f(t + c * h, std::span<const double>(tmp_), std::span<double>(k_[s]));
    };
    stage(1, {1.0 / 5}, 1.0 / 5);
    stage(2, {3.0 / 40, 9.0 / 40}, 3.0 / 10);
    stage(3, {44.0 / 45, -56.0 / 15, 32.0 / 9}, 4.0 / 5);
    stage(4, {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729}, 8.0 / 9);
    stage(5, {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}, 1.0);
    y_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_out[i] = y[i] + h * (35.0 / 384 * k_[0][i] + 500.0 / 1113 * k_[2][i] + 125.0 / 192 * k_[3][i] -
                             2187.0 / 6784 * k_[4][i] + 11.0 / 84 * k_[5][i]);
    }
    dydt_out.resize(n);
    f(t + h, std::span<const double>(y_out), std::span<double>(dydt_out));
    std::copy(dydt_out.begin(), dydt_out.end(), k_[6].begin());
    err.resize(n);
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                    e7 * k_[6][i]);
    }
  }

 private:
  std::vector<std::vector<double>> k_;
  std::vector<double> tmp_;
};

/// Max-norm of err scaled by abs_tol + rel_tol * max(|y0|, |y1|) over the
/// first `controlled` components.
inline double error_norm(std::span<const double> err, std::span<const double> y0, std::span<const double> y1,
                         std::size_t controlled, double rel_tol, double abs_tol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < controlled; ++i) {
    const double scale = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

/// Step-size factor for a 5th-order pair with the usual safety margins.
inline double step_factor(double err_norm) {
  if (err_norm == 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
}

/// Starting step from the local scale of the solution and its derivative.
template <class F>
double initial_step(F& f, double t, std::span<const double> y, std::span<const double> dydt,
                    std::size_t controlled, double rel_tol, double abs_tol) {
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < controlled; ++i) {
    const double sc = abs_tol + rel_tol * std::abs(y[i]);
    d0 = std::max(d0, std::abs(y[i]) / sc);
    d1 = std::max(d1, std::abs(dydt[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  std::vector<double> y1(y.size()), f1(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y1[i] = y[i] + h0 * dydt[i];
  f(t + h0, std::span<const double>(y1), std::span<double>(f1));
  double d2 = 0.0;
  for (std::size_t i = 0; i < controlled; ++i) {
    const double sc = abs_tol + rel_tol * std::abs(y[i]);
    d2 = std::max(d2, std::abs(f1[i] - dydt[i]) / sc / h0);
  }
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min(100.0 * h0, h1);
}


/// Kaps–Rentrop type Rosenbrock method of order 4 with an embedded order-3
/// estimate (Shampine's coefficients) for autonomous stiff systems.
///
/// The state splits into a stiff part y and quadratures q whose derivatives
/// depend on y only. The system supplies the linear algebra:
///   rhs(y, dy, dq)       derivatives;
///   factor(s)            prepares solves with s*I - J at the last linearization;
///   solve(x)             x <- (s*I - J)^{-1} x in place;
///   quadrature_jvp(x, o) o <- (d dq / d y) x.
/// The caller decides when to re-linearize.
class Rosenbrock4 {
 public:
  Rosenbrock4(std::size_t n, std::size_t m) : n_(n), m_(m) {
    for (auto& g : gy_) g.resize(n);
    for (auto& g : gq_) g.resize(m);
    fy_.resize(n);
    fq_.resize(m);
    ty_.resize(n);
    jq_.resize(m);
  }

  /// One attempt of size h. y_out/q_out receive the 4th-order solution and
  /// err_y/err_q the embedded error estimate. Returns false if the result is
  /// not finite.
  template <class S>
  bool attempt(S& sys, std::span<const double> y, std::span<const double> q, double h, std::vector<double>& y_out,
               std::vector<double>& q_out, std::vector<double>& err_y, std::vector<double>& err_q) {
    constexpr double gam = 0.5;
    constexpr double a21 = 2.0, a31 = 48.0 / 25, a32 = 6.0 / 25;
    constexpr double c21 = -8.0, c31 = 372.0 / 25, c32 = 12.0 / 5;
    constexpr double c41 = -112.0 / 125, c42 = -54.0 / 125, c43 = -2.0 / 5;
    constexpr double b1 = 19.0 / 9, b2 = 1.0 / 2, b3 = 25.0 / 108, b4 = 125.0 / 108;
    constexpr double e1 = 17.0 / 54, e2 = 7.0 / 36, e3 = 0.0, e4 = 125.0 / 108;
    const double gh = gam * h;
    if (!sys.factor(1.0 / gh)) return false;

    auto solve = [&](int s) {
      sys.solve(std::span<double>(gy_[s]));
      if (m_ == 0) return;
      sys.quadrature_jvp(std::span<const double>(gy_[s]), std::span<double>(jq_));
      for (std::size_t i = 0; i < m_; ++i) gq_[s][i] = gh * (gq_[s][i] + jq_[i]);
    };
    auto eval_at = [&](std::initializer_list<std::pair<int, double>> terms) {
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = y[i];
        for (auto [s, c] : terms) acc += c * gy_[s][i];
        ty_[i] = acc;
      }
      sys.rhs(std::span<const double>(ty_), std::span<double>(fy_), std::span<double>(fq_));
    };
    auto set_stage = [&](int s, std::initializer_list<std::pair<int, double>> terms) {
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = fy_[i];
        for (auto [j, c] : terms) acc += c * gy_[j][i] / h;
        gy_[s][i] = acc;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        double acc = fq_[i];
        for (auto [j, c] : terms) acc += c * gq_[j][i] / h;
        gq_[s][i] = acc;
      }
      solve(s);
    };

    eval_at({});
    set_stage(0, {});
    eval_at({{0, a21}});
    set_stage(1, {{0, c21}});
    eval_at({{0, a31}, {1, a32}});
    set_stage(2, {{0, c31}, {1, c32}});
    set_stage(3, {{0, c41}, {1, c42}, {2, c43}});

    y_out.resize(n_);
    err_y.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      y_out[i] = y[i] + b1 * gy_[0][i] + b2 * gy_[1][i] + b3 * gy_[2][i] + b4 * gy_[3][i];
      err_y[i] = e1 * gy_[0][i] + e2 * gy_[1][i] + e3 * gy_[2][i] + e4 * gy_[3][i];
    }
    q_out.resize(m_);
    err_q.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      q_out[i] = q[i] + b1 * gq_[0][i] + b2 * gq_[1][i] + b3 * gq_[2][i] + b4 * gq_[3][i];
      err_q[i] = e1 * gq_[0][i] + e2 * gq_[1][i] + e3 * gq_[2][i] + e4 * gq_[3][i];
    }
    for (double v : y_out)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Step-size factor for the embedded third-order estimate.
  static double step_factor(double err_norm) {
    if (err_norm == 0.0) return 4.0;
    return std::clamp(0.9 * std::pow(err_norm, err_norm > 1.0 ? -1.0 / 3.0 : -0.25), 0.2, 4.0);
  }

 private:
  std::size_t n_, m_;
  std::array<std::vector<double>, 4> gy_, gq_;
  std::vector<double> fy_, fq_, ty_, jq_;
};

}  // namespace seqmis::ode
