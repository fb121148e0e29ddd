#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "error.hpp"
#include "expsum.hpp"

namespace fgmrisk {

/// Dependence parameter of the Farlie-Gumbel-Morgenstern copula, in [-1, 1].
class FgmParam {
 public:
  constexpr FgmParam() = default;
  explicit FgmParam(double theta, const char* field = "theta") : theta_(theta) {
    if (!(theta >= -1.0 && theta <= 1.0))
      throw ParameterError("FGM parameter must lie in [-1, 1], got " + std::to_string(theta), field);
  }
  constexpr double value() const noexcept { return theta_; }
  constexpr bool independent() const noexcept { return theta_ == 0.0; }

 private:
  double theta_ = 0.0;
};

/// What the simulator and the grid solver need from a size distribution.
/// `kernel(y)` is h(y) = f(y) (1 - 2 F(y)), the FGM correction to the density.
template <class M>
concept Marginal = requires(const M& m, double y) {
  { m.mean() } -> std::convertible_to<double>;
  { m.density(y) } -> std::convertible_to<double>;
  { m.cdf(y) } -> std::convertible_to<double>;
  { m.quantile(y) } -> std::convertible_to<double>;
  { m.kernel(y) } -> std::convertible_to<double>;
};

/// Marginals whose f and h are finite sums of exponentials; enables closed-form
/// convolution integrals in the residual checks and the grid solver.
template <class M>
concept ExpSumMarginal = Marginal<M> && requires(const M& m) {
  { m.density_expsum() } -> std::convertible_to<ExpSum>;
  { m.kernel_expsum() } -> std::convertible_to<ExpSum>;
};

class ExponentialMarginal {
 public:
  ExponentialMarginal() = default;
  explicit ExponentialMarginal(double mean, const char* field = "mean") : mean_(mean) {
    if (!(mean > 0.0) || !std::isfinite(mean))
      throw ParameterError("mean must be positive and finite", field);
  }

  double mean() const noexcept { return mean_; }
  double density(double y) const noexcept { return y < 0.0 ? 0.0 : std::exp(-y / mean_) / mean_; }
  double cdf(double y) const noexcept { return y <= 0.0 ? 0.0 : -std::expm1(-y / mean_); }
  double survival(double y) const noexcept { return y <= 0.0 ? 1.0 : std::exp(-y / mean_); }
  double quantile(double u) const noexcept { return -mean_ * std::log1p(-u); }
  double kernel(double y) const noexcept {
    if (y < 0.0) return 0.0;
    const double e = std::exp(-y / mean_);
    return (2.0 * e * e - e) / mean_;
  }

  ExpSum density_expsum() const { return ExpSum(0.0, {{1.0 / mean_, -1.0 / mean_}}); }
  ExpSum kernel_expsum() const { return ExpSum(0.0, {{2.0 / mean_, -2.0 / mean_}, {-1.0 / mean_, -1.0 / mean_}}); }

 private:
  double mean_ = 1.0;
};

static_assert(ExpSumMarginal<ExponentialMarginal>);

namespace detail {
inline void require_unit(double u, const char* field) {
  if (!(u >= 0.0 && u <= 1.0)) throw ParameterError("must lie in [0, 1]", field);
}
}  // namespace detail

inline double fgm_cdf(double u1, double u2, FgmParam theta) {
  detail::require_unit(u1, "u1");
  detail::require_unit(u2, "u2");
  return u1 * u2 + theta.value() * u1 * u2 * (1.0 - u1) * (1.0 - u2);
}

inline double fgm_density(double u1, double u2, FgmParam theta) {
  detail::require_unit(u1, "u1");
  detail::require_unit(u2, "u2");
  return 1.0 + theta.value() * (1.0 - 2.0 * u1) * (1.0 - 2.0 * u2);
}

/// P(U2 <= u2 | U1 = u1) = u2 + theta u2 (1 - u2)(1 - 2 u1).
inline double conditional_cdf(double u1, double u2, FgmParam theta) {
  detail::require_unit(u1, "u1");
  detail::require_unit(u2, "u2");
  return u2 + theta.value() * u2 * (1.0 - u2) * (1.0 - 2.0 * u1);
}

/// Inverse of conditional_cdf in u2.
///
/// Solves a u2^2 - (1 + a) u2 + v = 0 with a = theta (1 - 2 u1), taking the root
/// in [0, 1] in the cancellation-free form 2v / ((1 + a) + sqrt((1 + a)^2 - 4 a v)).
namespace detail {
inline double conditional_quantile_unchecked(double u1, double v, double theta) noexcept {
  const double a = theta * (1.0 - 2.0 * u1);
  if (std::abs(a) < 1e-12) return v;
  if (v <= 0.0) return 0.0;  // a = -1 would give 0 / 0
  const double b = 1.0 + a;
  const double disc = std::max(0.0, b * b - 4.0 * a * v);
  return std::clamp(2.0 * v / (b + std::sqrt(disc)), 0.0, 1.0);
}
}  // namespace detail

inline double conditional_quantile(double u1, double v, FgmParam theta) {
  detail::require_unit(u1, "u1");
  detail::require_unit(v, "v");
  return detail::conditional_quantile_unchecked(u1, v, theta.value());
}

struct DependentPair {
  double time;
  double amount;
};

/// Uniform in [0, 1) with 53 random bits, identical across standard libraries.
template <class Engine>
double uniform01(Engine& rng) {
  static_assert(Engine::max() - Engine::min() >= 0xFFFFFFFFFFFFFFFFull - 1);
  return static_cast<double>((rng() - Engine::min()) >> 11) * 0x1.0p-53;
}

/// Joint draw of (inter-arrival time, jump size) with FGM dependence.
///
/// The time is exponential with the given rate, U1 = F_T(t); the size is
/// drawn from the copula conditional given U1. Since 1 - 2 F_T(t) = 2e^{-rate t} - 1,
/// the conditional density is f(y) + theta h(y)(2e^{-rate t} - 1).
template <Marginal M, class Engine>
DependentPair sample_dependent_pair(double rate, const M& marginal, FgmParam theta, Engine& rng) {
  const double u1 = uniform01(rng);
  const double v = uniform01(rng);
  const double t = -std::log1p(-u1) / rate;
  return {t, marginal.quantile(detail::conditional_quantile_unchecked(u1, v, theta.value()))};
}

/// Size drawn from the copula conditional given U1 = u1 (the time's rank).
template <Marginal M, class Engine>
double sample_conditional_size(double u1, const M& marginal, FgmParam theta, Engine& rng) {
  return marginal.quantile(detail::conditional_quantile_unchecked(u1, uniform01(rng), theta.value()));
}

// Rank-correlation estimators used by the copula diagnostics.

namespace detail {

/// Average ranks (1-based); ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::uint64_t tie_pairs(const std::vector<double>& sorted) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const std::uint64_t m = j - i + 1;
    total += m * (m - 1) / 2;
    i = j + 1;
  }
  return total;
}

/// Merge sort on `v`, returning the number of inversions (strictly decreasing pairs).
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace detail

/// Spearman's rho: Pearson correlation of average ranks.
inline double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ParameterError("need two equal-length samples of size >= 2", "samples");
  const auto rx = detail::average_ranks(xs);
  const auto ry = detail::average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double a = rx[i] - mean, b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
inline double kendall_tau(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ParameterError("need two equal-length samples of size >= 2", "samples");
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });
  std::vector<double> sx(n), sy(n);
  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = xs[idx[i]];
    sy[i] = ys[idx[i]];
  }
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tie_pairs(sx);
  std::uint64_t n3 = 0;  // pairs tied in both
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sx[j + 1] == sx[i] && sy[j + 1] == sy[i]) ++j;
    const std::uint64_t m = j - i + 1;
    n3 += m * (m - 1) / 2;
    i = j + 1;
  }
  std::vector<double> buf(n);
  const std::uint64_t swaps = detail::count_inversions(sy, buf, 0, n);
  const std::uint64_t n2 = detail::tie_pairs(sy);  // sy is now sorted
  const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return num / den;
}

}  // namespace fgmrisk
