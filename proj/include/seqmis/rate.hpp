#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "seqmis/errors.hpp"

namespace seqmis {

/// Activation clock rate as a function of degree.
///
/// `power(L)` is lambda(k) = (k+1)^L with a signed exponent: negative L favours
/// low degrees (degree-greedy approximation), positive L favours high degrees
/// (fairness sweeps). Rates are evaluated in log space so |L| up to ~40 does
/// not underflow in the ratios that matter.
class RateFunction {
 public:
  enum class Kind { constant, power, table };

  static RateFunction constant(double c = 1.0) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("constant rate must be finite and > 0");
    RateFunction r;
    r.kind_ = Kind::constant;
    r.log_scale_ = std::log(c);
    return r;
  }

  static RateFunction power(double exponent, double scale = 1.0) {
    if (!std::isfinite(exponent)) throw InputError("rate exponent must be finite");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("rate scale must be finite and > 0");
    RateFunction r;
    r.kind_ = Kind::power;
    r.exponent_ = exponent;
    r.log_scale_ = std::log(scale);
    return r;
  }

  static RateFunction table(std::vector<double> rates) {
    RateFunction r;
    r.kind_ = Kind::table;
    for (double x : rates) {
      if (!(x > 0.0) || !std::isfinite(x)) throw InputError("table rates must be finite and > 0");
      r.log_table_.push_back(std::log(x));
    }
    if (r.log_table_.empty()) throw InputError("empty rate table");
    return r;
  }

  Kind kind() const { return kind_; }
  double exponent() const { return exponent_; }

  double log_rate(std::size_t k) const {
    switch (kind_) {
      case Kind::constant:
        return log_scale_;
      case Kind::power:
        return log_scale_ + exponent_ * std::log(static_cast<double>(k) + 1.0);
      case Kind::table:
        if (k >= log_table_.size()) throw InputError("rate table has no entry for degree " + std::to_string(k));
        return log_table_[k];
    }
    return 0.0;
  }

  double operator()(std::size_t k) const { return std::exp(log_rate(k)); }

  /// Same law with every rate multiplied by kappa.
  RateFunction scaled(double kappa) const {
    if (!(kappa > 0.0)) throw InputError("rate scale factor must be > 0");
    RateFunction r = *this;
    r.log_scale_ += std::log(kappa);
    for (auto& x : r.log_table_) x += std::log(kappa);
    return r;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::constant:
        return "constant";
      case Kind::power:
        return "power:" + std::to_string(exponent_);
      case Kind::table:
        return "table";
    }
    return "?";
  }

 private:
  Kind kind_ = Kind::constant;
  double exponent_ = 0.0;
  double log_scale_ = 0.0;
  std::vector<double> log_table_;
};

}  // namespace seqmis
