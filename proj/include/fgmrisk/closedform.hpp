#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"
#include "expsum.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace fgmrisk {

struct SolverDiagnostics {
  std::string branch;
  std::map<std::string, double> values;  // discriminants, roots, determinant, condition, residuals
  std::vector<std::string> warnings;

  double at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ParameterError("no diagnostic named " + key, "key");
    return it->second;
  }
};

/// A closed form valid on [0, inf).
struct ExpSolution {
  ExpSum fn;
  SolverDiagnostics diagnostics;

  double operator()(double x) const { return fn(x); }
  double derivative(double x, int order) const { return fn.derivative(x, order); }
};

/// inner on [0, b], outer on [b, inf), outer anchored at b.
struct PiecewiseSolution {
  double b = 0.0;
  ExpSum inner;
  ExpSum outer;
  SolverDiagnostics diagnostics;

  double operator()(double x) const { return x <= b ? inner(x) : outer(x); }
  double derivative(double x, int order) const {
    return x < b ? inner.derivative(x, order) : outer.derivative(x, order);
  }
  double continuity_gap() const { return inner(b) - outer.value_at_anchor(); }
};

/// Two published constants disagree with the integral equations they are
/// derived from. `model_consistent` uses the forms re-derived from those
/// equations; `as_printed` reproduces the published tables.
///
/// Claim dependence: the theta term of the middle quadratic coefficient is
///   -lambda lambda_bar mu mu_bar theta (printed with a plus sign).
/// Dividends: the last boundary row has right-hand side -lambda d / delta
///   (printed as -d (1 + lambda / delta)).
enum class Variant { model_consistent, as_printed };

inline const char* to_string(Variant v) { return v == Variant::model_consistent ? "model_consistent" : "as_printed"; }

inline constexpr double kConditionWarning = 1e10;

namespace detail {

inline void require_exponential_params(const ModelParams& p) {
  p.validate();
}

inline void require_net_profit(const ModelParams& p, const ThresholdStrategy& s) {
  const auto np = net_profit_check(p, s);
  if (!np.holds)
    throw ParameterError("net profit condition fails (margin " + std::to_string(np.margin) + ")",
                         s.pays_dividends() ? "d" : "lambda_bar");
}

inline void require_independent(const ModelParams& p) {
  if (!p.theta.independent()) throw UnsupportedRegimeError("closed form requires theta = 0", "theta");
  if (!p.theta_bar.independent()) throw UnsupportedRegimeError("closed form requires theta_bar = 0", "theta_bar");
}

template <std::size_t N>
double relative_residual(const Matrix<N>& a, const Vector<N>& x, const Vector<N>& rhs) {
  const auto r = residual(a, x, rhs);
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double scale = std::abs(rhs[i]);
    for (std::size_t j = 0; j < N; ++j) scale = std::max(scale, std::abs(a[i][j] * x[j]));
    if (scale > 0.0) worst = std::max(worst, std::abs(r[i]) / scale);
  }
  return worst;
}

template <std::size_t N>
void record_solve(SolverDiagnostics& diag, const LinearSolution<N>& sol, const Matrix<N>& a, const Vector<N>& rhs) {
  diag.values["determinant"] = sol.determinant;
  diag.values["condition"] = sol.condition;
  diag.values["scaled_condition"] = sol.scaled_condition;
  diag.values["system_residual"] = relative_residual(a, sol.x, rhs);
  if (sol.scaled_condition > kConditionWarning)
    diag.warnings.push_back("linear system condition estimate " + std::to_string(sol.scaled_condition) +
                            " exceeds 1e10");
}

}  // namespace detail

/// Ruin probability without dependence and without dividends.
///
/// psi0(x) = lambda (mu + mu_bar) / (mu_bar (lambda + lambda_bar))
///           * exp(-(lambda_bar mu_bar - lambda mu) x / (mu mu_bar (lambda + lambda_bar))).
inline ExpSolution psi_independent_no_dividends(const ModelParams& p) {
  detail::require_independent(p);
  detail::require_net_profit(p, ThresholdStrategy::none());
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar();
  const double c = l * (mu + mb) / (mb * (l + lb));
  const double z = -(lb * mb - l * mu) / (mu * mb * (l + lb));
  ExpSolution out{ExpSum(0.0, {{c, z}}), {}};
  out.diagnostics.branch = "independent";
  out.diagnostics.values["z"] = z;
  out.diagnostics.values["coefficient"] = c;
  return out;
}

/// Constants of the no-dividend, claim-dependent case (theta_bar = 0):
/// the quadratic a z^2 + b z + c whose roots z2 >= z3 drive psi.
struct ClaimDependenceConstants {
  double a, b, c;  // quadratic coefficients
  double d1;       // discriminant
  double z2, z3;
  double branch_quantity;  // equals c; sign selects the one- or two-term solution
};

inline ClaimDependenceConstants claim_dependence_constants(const ModelParams& p,
                                                           Variant variant = Variant::model_consistent) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), th = p.theta.value();
  const double sign = variant == Variant::model_consistent ? -1.0 : 1.0;
  ClaimDependenceConstants k{};
  k.a = mu * mu * mb * (l + lb) * (2 * l + lb);
  k.b = mu * mb * (2 * l + 3 * lb) * (2 * l + lb) - l * mu * mu * (2 * l + lb) + sign * l * lb * mu * mb * th;
  k.c = 2 * (lb * mb - l * mu) * (2 * l + lb) + l * lb * mu * th;
  k.d1 = k.b * k.b - 4 * k.a * k.c;
  if (!(k.d1 >= 0.0)) throw NumericalError("negative discriminant for the claim-dependence quadratic");
  const double sq = std::sqrt(k.d1);
  // Stable pair: one root from the textbook form, the other from Vieta.
  const double qq = -0.5 * (k.b + std::copysign(sq, k.b));
  double r1 = qq / k.a;
  double r2 = qq != 0.0 ? k.c / qq : 0.0;
  k.z2 = std::max(r1, r2);
  k.z3 = std::min(r1, r2);
  k.branch_quantity = k.c;
  return k;
}

/// Ruin probability without dividends when only claims depend on their
/// inter-arrival times (theta_bar = 0; theta = 0 reduces to psi0).
inline ExpSolution psi_theta_no_dividends(const ModelParams& p, Variant variant = Variant::model_consistent) {
  if (!p.theta_bar.independent())
    throw UnsupportedRegimeError("closed form requires theta_bar = 0", "theta_bar");
  detail::require_net_profit(p, ThresholdStrategy::none());
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), th = p.theta.value();
  const auto k = claim_dependence_constants(p, variant);
  const double kappa = l * lb * th / (2 * l + lb);

  auto eq66 = [&](double z) { return l + lb - lb / (1 - mb * z); };
  auto eq67 = [&](double z) { return mu * (l + lb) * z - (lb + lb * mu / mb) * mb * z / (1 - mb * z) - kappa; };

  ExpSolution out;
  auto& diag = out.diagnostics;
  diag.values["D1"] = k.d1;
  diag.values["z2"] = k.z2;
  diag.values["z3"] = k.z3;
  diag.values["branch_quantity"] = k.branch_quantity;
  diag.values["root_residual_z2"] = quadratic_relative_residual(k.a, k.b, k.c, k.z2);
  diag.values["root_residual_z3"] = quadratic_relative_residual(k.a, k.b, k.c, k.z3);

  const double scale = std::abs(2 * (lb * mb - l * mu) * (2 * l + lb)) + std::abs(l * lb * mu * th);
  const std::string suffix = variant == Variant::as_printed ? "_as_printed" : "";
  // c / (2 (2 lambda + lambda_bar)) is the mean drift per unit time once claim
  // sizes are tied to the gap since the last event, lambda_bar mu_bar - lambda E[Y]
  // with E[Y] = mu (1 - theta lambda_bar / (2 (2 lambda + lambda_bar))). When it is
  // not positive ruin is certain; the printed one-term formula does not
  // satisfy the integral equation there.
  if (k.branch_quantity <= 1e-12 * scale && variant == Variant::model_consistent) {
    diag.branch = "certain_ruin";
    out.fn = ExpSum(0.0, {{1.0, 0.0}});
    out.diagnostics.warnings.push_back("mean drift with dependent claim sizes is not positive; ruin is certain");
    return out;
  }
  if (k.branch_quantity <= 1e-12 * scale) {
    diag.branch = "single_term" + suffix;
    const double c3 = l * (1 - mb * k.z3) / (l * (1 - mb * k.z3) - l * mu * k.z3);
    out.fn = ExpSum(0.0, {{c3, k.z3}});
    diag.values["C3"] = c3;
    return out;
  }
  diag.branch = "two_term" + suffix;
  const Matrix<2> a{{{eq66(k.z2), eq66(k.z3)}, {eq67(k.z2), eq67(k.z3)}}};
  const Vector<2> rhs{l, -kappa};
  const double delta1 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  diag.values["Delta1"] = delta1;
  LinearSolution<2> sol;
  try {
    sol = solve_linear_system(a, rhs);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("Delta1 vanishes: ") + e.what(), e.condition());
  }
  detail::record_solve(diag, sol, a, rhs);
  diag.values["C2"] = sol.x[0];
  diag.values["C3"] = sol.x[1];
  out.fn = ExpSum(0.0, {{sol.x[0], k.z2}, {sol.x[1], k.z3}});
  return out;
}

/// Residuals of the two boundary relations at x = 0 used to fix the
/// no-dividend constants (integral form at 0 and its derivative form at 0).
struct BoundaryResiduals {
  double at_zero;
  double derivative_at_zero;
};

inline BoundaryResiduals claim_dependence_boundary_residuals(const ModelParams& p, const ExpSum& psi) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), th = p.theta.value();
  const double kappa = l * lb * th / (2 * l + lb);
  const double tail = detail::weighted_integral(psi, -1.0 / mb, 0.0, 0.0, HUGE_VAL);
  const double psi0 = psi(0.0), dpsi0 = psi.derivative(0.0, 1);
  const double r1 = (l + lb) * psi0 - (lb / mb * tail + l);
  const double lhs2 = mu * (l + lb) * dpsi0 + lb * psi0;
  const double rhs2 = lb / mb * (1 + mu / mb) * tail + (kappa - lb * mu / mb) * psi0 - kappa;
  const double s1 = std::max({std::abs((l + lb) * psi0), std::abs(l), 1e-300});
  const double s2 = std::max({std::abs(lhs2), std::abs(rhs2), 1e-300});
  return {r1 / s1, (lhs2 - rhs2) / s2};
}

/// Roots of the characteristic quadratic of the premium-dependent
/// (theta = 0, theta_bar != 0) third-order equation after removing z = 0.
/// Exposed for diagnostics only; no constants are determined.
struct PremiumDependenceRoots {
  double a, b, c;
  double disc;
  std::vector<double> roots;
};

inline PremiumDependenceRoots premium_dependence_roots(const ModelParams& p) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), tb = p.theta_bar.value();
  PremiumDependenceRoots r{};
  r.a = mu * mb * mb * (l + lb) * (l + 2 * lb);
  r.b = -mu * mb * (3 * l + 2 * lb) * (l + 2 * lb) + lb * mb * mb * (l + 2 * lb) + l * lb * mu * mb * tb;
  r.c = 2 * (l * mu - lb * mb) * (l + 2 * lb) + l * lb * mb * tb;
  r.disc = r.b * r.b - 4 * r.a * r.c;
  if (r.disc >= 0.0) {
    const double sq = std::sqrt(r.disc);
    const double qq = -0.5 * (r.b + std::copysign(sq, r.b));
    r.roots = {qq / r.a, qq != 0.0 ? r.c / qq : 0.0};
    std::sort(r.roots.begin(), r.roots.end());
  }
  return r;
}

/// Constants of the independent threshold model for the ruin probability.
struct ThresholdRuinConstants {
  double d2, z5, z7, z8;
  double qa, qb, qc;  // d mu mu_bar z^2 + qb z + qc for the outer piece
};

inline ThresholdRuinConstants threshold_ruin_constants(const ModelParams& p, const ThresholdStrategy& s) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), d = s.d();
  ThresholdRuinConstants k{};
  k.qa = d * mu * mb;
  k.qb = d * mb - d * mu + mu * mb * (l + lb);
  k.qc = lb * mb - l * mu - d;
  k.d2 = k.qb * k.qb - 4 * k.qa * k.qc;
  if (!(k.d2 > 0.0)) throw NumericalError("discriminant of the outer ruin equation is not positive");
  k.z5 = (l * mu - lb * mb) / (mu * mb * (l + lb));
  const double sq = std::sqrt(k.d2);
  const double qq = -0.5 * (k.qb + std::copysign(sq, k.qb));
  const double r1 = qq / k.qa, r2 = k.qc / qq;
  k.z7 = std::max(r1, r2);
  k.z8 = std::min(r1, r2);
  return k;
}

namespace detail {

struct ThresholdRuinSystem {
  ThresholdRuinConstants k;
  Matrix<4> a{};  // boundary equations as stated, first row divided by e^{b / mu_bar}
  Vector<4> rhs{};
  Matrix<4> solve_a{};  // equivalent system used for the solve
  Vector<4> solve_rhs{};
};

/// Unknowns (C4, C5, K7, K8) with K = C e^{z b}.
///
/// The first two rows agree up to O(e^{-b / mu_bar}), so solving them as stated
/// loses about log10(e^{b / mu_bar}) digits. The solve uses
/// e^{b / mu_bar} (row0 - mu / (mu + mu_bar) row1) instead, where the leading
/// parts cancel exactly.
inline ThresholdRuinSystem threshold_ruin_system(const ModelParams& p, const ThresholdStrategy& s) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), d = s.d(), b = s.b();
  ThresholdRuinSystem sys{};
  sys.k = threshold_ruin_constants(p, s);
  const auto& k = sys.k;
  const double em = std::exp(-b / mb);
  const double eu = std::exp(-b / mu);
  const double e5 = std::exp(k.z5 * b);
  auto outer_coupling = [&](double z) { return lb / (mb * z - 1); };
  auto outer_ode = [&](double z) { return l + lb + d * z + lb / (mb * z - 1); };
  sys.a[0] = {l + lb * em, (l + lb) / (mu + mb) * (mb + mu * std::exp((k.z5 - 1 / mb) * b)),
              outer_coupling(k.z7) * em, outer_coupling(k.z8) * em};
  sys.rhs[0] = l;
  sys.a[1] = {l * (1 + mb / mu), mb * (l + lb) / mu, 0.0, 0.0};
  sys.rhs[1] = l * (1 + mb / mu);
  sys.a[2] = {1.0, e5, -1.0, -1.0};
  sys.rhs[2] = 0.0;
  sys.a[3] = {l * (eu - 1), mb * (l + lb) / (mu + mb) * (eu - e5), outer_ode(k.z7), outer_ode(k.z8)};
  sys.rhs[3] = l * eu;
  sys.solve_a = sys.a;
  sys.solve_rhs = sys.rhs;
  sys.solve_a[0] = {lb, (l + lb) * mu / (mu + mb) * e5, outer_coupling(k.z7), outer_coupling(k.z8)};
  sys.solve_rhs[0] = 0.0;
  return sys;
}

}  // namespace detail

/// Ruin probability under the threshold strategy without dependence.
inline PiecewiseSolution psi_threshold_independent(const ModelParams& p, const ThresholdStrategy& s) {
  detail::require_independent(p);
  if (!s.pays_dividends()) throw ParameterError("threshold strategy required", "strategy");
  detail::require_net_profit(p, s);
  const auto sys = detail::threshold_ruin_system(p, s);
  const auto& k = sys.k;
  const auto sol = solve_linear_system(sys.solve_a, sys.solve_rhs);
  const double b = s.b();

  PiecewiseSolution out;
  out.b = b;
  out.inner = ExpSum(0.0, {{sol.x[0], 0.0}, {sol.x[1], k.z5}});
  out.outer = ExpSum(b, {{sol.x[2], k.z7}, {sol.x[3], k.z8}});
  auto& diag = out.diagnostics;
  diag.branch = "threshold";
  diag.values["D2"] = k.d2;
  diag.values["z5"] = k.z5;
  diag.values["z7"] = k.z7;
  diag.values["z8"] = k.z8;
  diag.values["C4"] = sol.x[0];
  diag.values["C5"] = sol.x[1];
  diag.values["K7"] = sol.x[2];
  diag.values["K8"] = sol.x[3];
  diag.values["C7"] = out.outer.global_coeff(0);
  diag.values["C8"] = out.outer.global_coeff(1);
  diag.values["root_residual_z7"] = quadratic_relative_residual(k.qa, k.qb, k.qc, k.z7);
  diag.values["root_residual_z8"] = quadratic_relative_residual(k.qa, k.qb, k.qc, k.z8);
  if (!(k.z7 < 0.0 && k.z8 < 0.0)) diag.warnings.push_back("outer roots are not both negative");
  detail::record_solve(diag, sol, sys.a, sys.rhs);
  diag.values["solve_residual"] = detail::relative_residual(sys.solve_a, sol.x, sys.solve_rhs);
  diag.values["continuity_gap"] = out.continuity_gap();
  return out;
}

/// Constants of the independent threshold model for the dividend value.
struct ThresholdDividendConstants {
  double d3, z9, z10;
  double ia, ib, ic;      // inner quadratic coefficients
  double c3, c2, c1, c0;  // outer cubic coefficients
  double d4;
  std::vector<double> cubic_roots;
  double z11 = 0.0, z12 = 0.0;
};

inline ThresholdDividendConstants threshold_dividend_constants(const ModelParams& p, const ThresholdStrategy& s,
                                                               double delta) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), d = s.d();
  ThresholdDividendConstants k{};
  const double L = l + lb + delta;
  const double pp = mb * (lb + delta) - mu * (l + delta);
  k.ia = mu * mb * L;
  k.ib = pp;
  k.ic = -delta;
  k.d3 = pp * pp + 4 * delta * mu * mb * L;
  if (!(k.d3 > 0.0)) throw NumericalError("discriminant of the inner dividend equation is not positive");
  const double sq = std::sqrt(k.d3);
  const double qq = -0.5 * (pp + std::copysign(sq, pp));
  const double r1 = qq / k.ia, r2 = k.ic / qq;
  k.z9 = std::max(r1, r2);
  k.z10 = std::min(r1, r2);

  k.c3 = d * mu * mb;
  k.c2 = d * (mb - mu) + mu * mb * L;
  k.c1 = mb * (lb + delta) - mu * (l + delta) - d;
  k.c0 = -delta;
  k.d4 = -18 * delta * d * mu * mb * k.c2 * k.c1 + 4 * delta * k.c2 * k.c2 * k.c2 + k.c2 * k.c2 * k.c1 * k.c1 -
         4 * d * mu * mb * k.c1 * k.c1 * k.c1 - 27 * (delta * d * mu * mb) * (delta * d * mu * mb);
  return k;
}

namespace detail {

struct ThresholdDividendSystem {
  ThresholdDividendConstants k;
  Matrix<4> a{};  // boundary equations as stated, first row divided by e^{b / mu_bar}
  Vector<4> rhs{};
  Matrix<4> solve_a{};
  Vector<4> solve_rhs{};
};

/// Unknowns (C9, C10, K11, K12) with K = C e^{z b}.
///
/// As for the ruin system, the solve replaces the first row by
/// e^{b / mu_bar} (row0 - mu / (mu + mu_bar) row1). For z a root of the inner
/// quadratic, L + lambda_bar / (mu_bar z - 1) equals mu / (mu + mu_bar) times the
/// second-row entry, so only the e^{z b} parts survive.
inline ThresholdDividendSystem threshold_dividend_system(const ModelParams& p, const ThresholdStrategy& s,
                                                         double delta, Variant variant) {
  const double l = p.lambda, lb = p.lambda_bar, mu = p.mu(), mb = p.mu_bar(), d = s.d(), b = s.b();
  ThresholdDividendSystem sys{};
  sys.k = threshold_dividend_constants(p, s, delta);
  auto& k = sys.k;
  if (!(k.d4 > 0.0))
    throw UnsupportedRegimeError("cubic discriminant D4 = " + std::to_string(k.d4) + " is not positive", "d");
  k.cubic_roots = solve_cubic_real(k.c3, k.c2, k.c1, k.c0);
  std::vector<double> neg;
  for (double z : k.cubic_roots)
    if (z < 0.0) neg.push_back(z);
  if (neg.size() != 2)
    throw NumericalError("outer dividend cubic has " + std::to_string(neg.size()) + " negative roots, expected 2");
  k.z11 = neg[1];
  k.z12 = neg[0];

  const double L = l + lb + delta;
  const double em = std::exp(-b / mb);
  const double eu = std::exp(-b / mu);
  auto inner_row0 = [&](double z) { return L - lb / (mb * z - 1) * std::expm1((z - 1 / mb) * b); };
  auto inner_row1 = [&](double z) { return l + delta + l * mb / mu - mb * z * L; };
  auto inner_row3 = [&](double z) { return l / (mu * z + 1) * (eu - std::exp(z * b)); };
  auto outer_ode = [&](double z) { return L + d * z + lb / (mb * z - 1); };
  sys.a[0] = {inner_row0(k.z9), inner_row0(k.z10), lb / (mb * k.z11 - 1) * em, lb / (mb * k.z12 - 1) * em};
  sys.rhs[0] = d * lb / delta * em;
  sys.a[1] = {inner_row1(k.z9), inner_row1(k.z10), 0.0, 0.0};
  sys.rhs[1] = 0.0;
  sys.a[2] = {std::exp(k.z9 * b), std::exp(k.z10 * b), -1.0, -1.0};
  sys.rhs[2] = d / delta;
  sys.a[3] = {inner_row3(k.z9), inner_row3(k.z10), outer_ode(k.z11), outer_ode(k.z12)};
  sys.rhs[3] = variant == Variant::model_consistent ? -l * d / delta : -d * (1 + l / delta);
  sys.solve_a = sys.a;
  sys.solve_rhs = sys.rhs;
  sys.solve_a[0] = {std::exp(k.z9 * b) / (1 - mb * k.z9), std::exp(k.z10 * b) / (1 - mb * k.z10),
                    1 / (mb * k.z11 - 1), 1 / (mb * k.z12 - 1)};
  sys.solve_rhs[0] = d / delta;
  return sys;
}

}  // namespace detail

/// Expected discounted dividends under the threshold strategy without dependence.
inline PiecewiseSolution dividends_threshold_independent(const ModelParams& p, const ThresholdStrategy& s,
                                                         double delta,
                                                         Variant variant = Variant::model_consistent) {
  detail::require_independent(p);
  if (!s.pays_dividends()) throw ParameterError("threshold strategy required", "strategy");
  detail::require(delta > 0.0 && std::isfinite(delta), "delta", "must be positive");
  detail::require_net_profit(p, s);
  const auto sys = detail::threshold_dividend_system(p, s, delta, variant);
  const auto& k = sys.k;
  const auto sol = solve_linear_system(sys.solve_a, sys.solve_rhs);
  const double b = s.b(), d = s.d();

  PiecewiseSolution out;
  out.b = b;
  out.inner = ExpSum(0.0, {{sol.x[0], k.z9}, {sol.x[1], k.z10}});
  out.outer = ExpSum(b, {{sol.x[2], k.z11}, {sol.x[3], k.z12}, {d / delta, 0.0}});
  auto& diag = out.diagnostics;
  diag.branch = variant == Variant::model_consistent ? "threshold" : "threshold_as_printed";
  diag.values["D3"] = k.d3;
  diag.values["D4"] = k.d4;
  diag.values["z9"] = k.z9;
  diag.values["z10"] = k.z10;
  diag.values["z11"] = k.z11;
  diag.values["z12"] = k.z12;
  diag.values["C9"] = sol.x[0];
  diag.values["C10"] = sol.x[1];
  diag.values["K11"] = sol.x[2];
  diag.values["K12"] = sol.x[3];
  diag.values["C11"] = out.outer.global_coeff(0);
  diag.values["C12"] = out.outer.global_coeff(1);
  diag.values["root_residual_z9"] = quadratic_relative_residual(k.ia, k.ib, k.ic, k.z9);
  diag.values["root_residual_z10"] = quadratic_relative_residual(k.ia, k.ib, k.ic, k.z10);
  for (std::size_t i = 0; i < k.cubic_roots.size(); ++i)
    diag.values["root_residual_cubic_" + std::to_string(i)] =
        cubic_relative_residual(k.c3, k.c2, k.c1, k.c0, k.cubic_roots[i]);
  detail::record_solve(diag, sol, sys.a, sys.rhs);
  diag.values["solve_residual"] = detail::relative_residual(sys.solve_a, sol.x, sys.solve_rhs);
  diag.values["continuity_gap"] = out.continuity_gap();
  return out;
}

}  // namespace fgmrisk
