#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"

namespace fgmrisk {

struct ExpTerm {
  double coeff;  // value of this term at the anchor
  double rate;
};

/// f(x) = sum_i c_i * exp(z_i * (x - anchor)).
///
/// Coefficients are stored at the anchor so that steep terms stay O(1) where
/// they matter; a constant is a rate-0 term. Terms with equal rates are merged.
class ExpSum {
 public:
  ExpSum() = default;

  explicit ExpSum(double anchor, std::vector<ExpTerm> terms = {}) : anchor_(anchor) {
    if (!std::isfinite(anchor)) throw ParameterError("anchor must be finite", "anchor");
    for (const auto& t : terms) add_term(t.coeff, t.rate);
  }

  static ExpSum constant(double c, double anchor = 0.0) { return ExpSum(anchor, {{c, 0.0}}); }

  double anchor() const noexcept { return anchor_; }
  std::span<const ExpTerm> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  void add_term(double coeff, double rate) {
    if (!std::isfinite(rate)) throw ParameterError("rate must be finite", "rate");
    if (!std::isfinite(coeff)) throw ParameterError("coefficient must be finite", "coeff");
    for (auto& t : terms_) {
      if (t.rate == rate) {
        t.coeff += coeff;
        return;
      }
    }
    terms_.push_back({coeff, rate});
  }

  double operator()(double x) const noexcept { return derivative(x, 0); }

  /// k-th derivative at x.
  double derivative(double x, int order) const noexcept {
    const double s = x - anchor_;
    double acc = 0.0;
    for (const auto& t : terms_) {
      if (t.coeff == 0.0) continue;
      double f = t.coeff;
      for (int k = 0; k < order; ++k) f *= t.rate;
      if (f == 0.0) continue;
      acc += f * std::exp(t.rate * s);
    }
    return acc;
  }

  /// Sum of coefficients, i.e. the exact value at the anchor.
  double value_at_anchor() const noexcept {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.coeff;
    return acc;
  }

  ExpSum derivative(int order) const {
    ExpSum out(anchor_);
    for (const auto& t : terms_) {
      double f = t.coeff;
      for (int k = 0; k < order; ++k) f *= t.rate;
      if (f != 0.0) out.add_term(f, t.rate);
    }
    return out;
  }

  /// Same function, coefficients restated at a new anchor.
  ExpSum reanchored(double new_anchor) const {
    ExpSum out(new_anchor);
    for (const auto& t : terms_) out.add_term(t.coeff * std::exp(t.rate * (new_anchor - anchor_)), t.rate);
    return out;
  }

  /// Coefficient of e^{z x} in the anchor-0 ("global") parameterization.
  double global_coeff(std::size_t i) const { return terms_.at(i).coeff * std::exp(-terms_.at(i).rate * anchor_); }

  /// Coefficient of the term with the given rate (0 if absent).
  double coeff_for_rate(double rate, double tol = 0.0) const noexcept {
    for (const auto& t : terms_)
      if (std::abs(t.rate - rate) <= tol) return t.coeff;
    return 0.0;
  }

  ExpSum& operator+=(const ExpSum& rhs) {
    if (terms_.empty() && anchor_ != rhs.anchor_) anchor_ = rhs.anchor_;
    for (const auto& t : rhs.terms_) add_term(t.coeff * std::exp(t.rate * (anchor_ - rhs.anchor_)), t.rate);
    return *this;
  }

  ExpSum& operator*=(double s) {
    for (auto& t : terms_) t.coeff *= s;
    return *this;
  }

  friend ExpSum operator+(ExpSum a, const ExpSum& b) { return a += b; }
  friend ExpSum operator-(ExpSum a, const ExpSum& b) { return a += b * -1.0; }
  friend ExpSum operator*(ExpSum a, double s) { return a *= s; }
  friend ExpSum operator*(double s, ExpSum a) { return a *= s; }

 private:
  double anchor_ = 0.0;
  std::vector<ExpTerm> terms_;
};

namespace detail {

/// Integral of exp(s*u) over [lo, hi]; hi may be +inf when s < 0.
/// Uses expm1 so that s -> 0 degrades gracefully to (hi - lo).
inline double integrate_exp(double s, double lo, double hi) {
  if (hi == lo) return 0.0;
  if (std::isinf(hi)) {
    if (!(s < 0.0)) throw NumericalError("divergent exponential integral on an infinite range");
    return -std::exp(s * lo) / s;
  }
  const double w = hi - lo;
  if (std::abs(s * w) < 1e-300) return w;
  const double base = std::exp(s * lo);
  if (std::abs(s) * w < 1e-8) return base * w * (1.0 + 0.5 * s * w);
  return base * std::expm1(s * w) / s;
}

/// (e^{s w} - 1)/s with the removable singularity at s = 0 handled.
inline double expm1_over(double s, double w) {
  if (std::abs(s * w) < 1e-10) return w * (1.0 + 0.5 * s * w);
  return std::expm1(s * w) / s;
}

/// Integral of f(u) e^{s (u - ref)} over [lo, hi], hi may be +inf.
/// Exponents are combined before exponentiating, so steep terms anchored far
/// from `lo` do not overflow.
inline double weighted_integral(const ExpSum& f, double s, double ref, double lo, double hi) {
  if (hi < lo) throw ParameterError("empty integration range", "hi");
  double acc = 0.0;
  for (const auto& t : f.terms()) {
    if (t.coeff == 0.0) continue;
    const double r = t.rate + s;
    const double log_base = t.rate * (lo - f.anchor()) + s * (lo - ref);
    if (std::isinf(hi)) {
      if (!(r < 0.0)) throw NumericalError("divergent exponential integral on an infinite range");
      acc += t.coeff * std::exp(log_base) / -r;
    } else {
      acc += t.coeff * std::exp(log_base) * expm1_over(r, hi - lo);
    }
  }
  return acc;
}

}  // namespace detail
}  // namespace fgmrisk
