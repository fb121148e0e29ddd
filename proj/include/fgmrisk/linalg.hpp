#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "error.hpp"

namespace fgmrisk {

template <std::size_t N>
using Matrix = std::array<std::array<double, N>, N>;
template <std::size_t N>
using Vector = std::array<double, N>;

template <std::size_t N>
struct LinearSolution {
  Vector<N> x{};
  double determinant = 0.0;
  double condition = 0.0;         // 1-norm condition number ||A|| ||A^-1||
  double scaled_condition = 0.0;  // same after row and column equilibration
};

namespace detail {

template <std::size_t N>
struct LuFactors {
  Matrix<N> lu;
  std::array<std::size_t, N> perm;
  double det;
};

template <std::size_t N>
LuFactors<N> lu_factor(Matrix<N> a) {
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0) || !std::isfinite(scale)) throw NumericalError("matrix is zero or not finite");
  std::array<std::size_t, N> perm{};
  for (std::size_t i = 0; i < N; ++i) perm[i] = i;
  double det = 1.0;
  for (std::size_t k = 0; k < N; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < N; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    if (std::abs(a[p][k]) < 1e-13 * scale) throw NumericalError("singular linear system", HUGE_VAL);
    if (p != k) {
      std::swap(a[p], a[k]);
      std::swap(perm[p], perm[k]);
      det = -det;
    }
    det *= a[k][k];
    for (std::size_t i = k + 1; i < N; ++i) {
      const double f = a[i][k] / a[k][k];
      a[i][k] = f;
      for (std::size_t j = k + 1; j < N; ++j) a[i][j] -= f * a[k][j];
    }
  }
  return {a, perm, det};
}

template <std::size_t N>
Vector<N> lu_solve(const LuFactors<N>& f, const Vector<N>& rhs) {
  Vector<N> y{};
  for (std::size_t i = 0; i < N; ++i) {
    double s = rhs[f.perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu[i][j] * y[j];
    y[i] = s;
  }
  for (std::size_t i = N; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < N; ++j) s -= f.lu[i][j] * y[j];
    y[i] = s / f.lu[i][i];
  }
  return y;
}

template <std::size_t N>
double norm1(const Matrix<N>& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += std::abs(a[i][j]);
    best = std::max(best, s);
  }
  return best;
}

template <std::size_t N>
Matrix<N> inverse(const LuFactors<N>& f) {
  Matrix<N> inv{};
  for (std::size_t j = 0; j < N; ++j) {
    Vector<N> e{};
    e[j] = 1.0;
    const auto col = lu_solve(f, e);
    for (std::size_t i = 0; i < N; ++i) inv[i][j] = col[i];
  }
  return inv;
}

/// Condition number after scaling every row, then every column, to unit max norm.
template <std::size_t N>
double equilibrated_condition(Matrix<N> a) {
  for (auto& row : a) {
    double m = 0.0;
    for (double v : row) m = std::max(m, std::abs(v));
    if (m > 0.0)
      for (double& v : row) v /= m;
  }
  for (std::size_t j = 0; j < N; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a[i][j]));
    if (m > 0.0)
      for (std::size_t i = 0; i < N; ++i) a[i][j] /= m;
  }
  try {
    return norm1(a) * norm1(inverse(lu_factor(a)));
  } catch (const NumericalError&) {
    return HUGE_VAL;
  }
}

}  // namespace detail

/// Gaussian elimination with partial pivoting for tiny dense systems.
/// Throws NumericalError when a pivot falls below 1e-13 times the largest entry.
template <std::size_t N>
LinearSolution<N> solve_linear_system(const Matrix<N>& a, const Vector<N>& rhs) {
  static_assert(N >= 1 && N <= 4);
  const auto f = detail::lu_factor(a);
  LinearSolution<N> out;
  out.x = detail::lu_solve(f, rhs);
  out.determinant = f.det;
  // The inverse is cheap at this size, so the condition number is exact.
  const auto inv = detail::inverse(f);
  out.condition = detail::norm1(a) * detail::norm1(inv);
  out.scaled_condition = detail::equilibrated_condition(a);
  return out;
}

/// A x - b, componentwise.
template <std::size_t N>
Vector<N> residual(const Matrix<N>& a, const Vector<N>& x, const Vector<N>& rhs) {
  Vector<N> r{};
  for (std::size_t i = 0; i < N; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < N; ++j) s += static_cast<long double>(a[i][j]) * x[j];
    r[i] = static_cast<double>(s - rhs[i]);
  }
  return r;
}

struct CubicRoots {
  std::vector<double> real;  // ascending
  int complex_pairs = 0;
};

/// Horner evaluation of c3 z^3 + c2 z^2 + c1 z + c0.
inline double cubic_eval(double c3, double c2, double c1, double c0, double z) {
  return ((c3 * z + c2) * z + c1) * z + c0;
}

/// Real roots of c3 z^3 + c2 z^2 + c1 z + c0, by the trigonometric method
/// (three real roots) or Cardano (one), each polished by Newton.
inline std::vector<double> solve_cubic_real(double c3, double c2, double c1, double c0,
                                            int* complex_pairs = nullptr) {
  if (c3 == 0.0) throw ParameterError("leading coefficient must be non-zero", "c3");
  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  const double shift = a / 3.0;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  const double mag = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
  std::vector<double> roots;
  int pairs = 0;
  if (p == 0.0 && q == 0.0) {
    roots = {-shift, -shift, -shift};
  } else if (disc > 1e-14 * mag * mag * mag) {
    const double sq = std::sqrt(disc);
    const double t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
    roots = {t - shift};
    pairs = 1;
  } else {
    const double r = std::sqrt(std::max(0.0, -p / 3.0));
    double arg = r > 0.0 ? (3.0 * q) / (2.0 * p * r) : 0.0;
    arg = std::clamp(arg, -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(2.0 * r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift);
  }
  for (double& z : roots) {
    for (int it = 0; it < 3; ++it) {
      const double f = cubic_eval(c3, c2, c1, c0, z);
      const double df = (3.0 * c3 * z + 2.0 * c2) * z + c1;
      if (df == 0.0 || f == 0.0) break;
      const double step = f / df;
      const double next = z - step;
      if (std::abs(cubic_eval(c3, c2, c1, c0, next)) >= std::abs(f)) break;
      z = next;
    }
  }
  std::sort(roots.begin(), roots.end());
  if (complex_pairs) *complex_pairs = pairs;
  return roots;
}

/// |p(z)| divided by the scale sum |c_k| |z|^k, the usual relative residual.
inline double cubic_relative_residual(double c3, double c2, double c1, double c0, double z) {
  const double az = std::abs(z);
  const double scale = ((std::abs(c3) * az + std::abs(c2)) * az + std::abs(c1)) * az + std::abs(c0);
  return scale > 0.0 ? std::abs(cubic_eval(c3, c2, c1, c0, z)) / scale : 0.0;
}

/// Same for a quadratic a z^2 + b z + c.
inline double quadratic_relative_residual(double a, double b, double c, double z) {
  const double az = std::abs(z);
  const double scale = (std::abs(a) * az + std::abs(b)) * az + std::abs(c);
  return scale > 0.0 ? std::abs((a * z + b) * z + c) / scale : 0.0;
}

}  // namespace fgmrisk
