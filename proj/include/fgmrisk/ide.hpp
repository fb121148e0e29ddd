#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "closedform.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "expsum.hpp"
#include "model.hpp"

namespace fgmrisk {

enum class TailRule { zero, exponential };
enum class Quadrature { trapezoid, gauss };

inline const char* to_string(TailRule t) { return t == TailRule::zero ? "zero" : "exponential"; }
inline const char* to_string(Quadrature q) { return q == Quadrature::trapezoid ? "trapezoid" : "gauss"; }

/// Piecewise-linear function on [0, x_max] with a tail rule beyond.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(std::vector<double> xs, std::vector<double> values, TailRule tail = TailRule::exponential)
      : xs_(std::move(xs)), values_(std::move(values)) {
    detail::require(xs_.size() == values_.size(), "values", "length must match the abscissae");
    detail::require(xs_.size() >= 2, "xs", "need at least two nodes");
    detail::require(xs_.front() == 0.0, "xs", "grid must start at 0");
    for (std::size_t i = 1; i < xs_.size(); ++i)
      detail::require(xs_[i] > xs_[i - 1], "xs", "abscissae must be strictly increasing");
    set_tail(tail);
  }

  std::span<const double> xs() const noexcept { return xs_; }
  std::span<const double> values() const noexcept { return values_; }
  double x_max() const noexcept { return xs_.back(); }
  /// Tail actually in use; an exponential request falls back to zero when
  /// the last two nodes do not decay.
  TailRule tail() const noexcept { return tail_; }
  double tail_rate() const noexcept { return kappa_; }

  void set_tail(TailRule tail) {
    tail_ = TailRule::zero;
    kappa_ = 0.0;
    if (tail != TailRule::exponential) return;
    const std::size_t n = xs_.size() - 1;
    const double a = values_[n - 1], b = values_[n];
    if (a > 0.0 && b > 0.0 && a > b) {
      kappa_ = std::log(a / b) / (xs_[n] - xs_[n - 1]);
      tail_ = TailRule::exponential;
    }
  }

  double operator()(double x) const {
    detail::require(x >= 0.0, "x", "must be non-negative");
    if (x >= x_max()) return tail_value(x);
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double w = (x - xs_[j]) / (xs_[j + 1] - xs_[j]);
    return values_[j] + w * (values_[j + 1] - values_[j]);
  }

  /// Integral of m(u) g(u) over [lo, hi]; hi may be +inf.
  /// Cellwise Gauss-Legendre on the grid, adaptive quadrature on the tail.
  template <class G>
  double integrate(G&& g, double lo, double hi) const {
    detail::require(lo >= 0.0 && hi >= lo, "range", "need 0 <= lo <= hi");
    double acc = 0.0;
    const double top = std::min(hi, x_max());
    if (top > lo) {
      std::size_t j = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), lo) - xs_.begin()) - 1;
      for (; j + 1 < xs_.size() && xs_[j] < top; ++j) {
        const double a = std::max(lo, xs_[j]), b = std::min(top, xs_[j + 1]);
        if (b <= a) continue;
        const double x0 = xs_[j], h = xs_[j + 1] - xs_[j], v0 = values_[j], v1 = values_[j + 1];
        acc += boost::math::quadrature::gauss<double, 7>::integrate(
            [&](double u) { return (v0 + (u - x0) / h * (v1 - v0)) * g(u); }, a, b);
      }
    }
    if (hi > x_max() && tail_ == TailRule::exponential) {
      const double a = std::max(lo, x_max());
      acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double u) { return tail_value(u) * g(u); }, a, hi, 15, 1e-12);
    }
    return acc;
  }

  // Solver metadata, filled by solve_gs_no_dividends.
  Quadrature quadrature = Quadrature::gauss;
  double reciprocal_condition = 0.0;
  std::vector<std::string> warnings;

 private:
  double tail_value(double x) const noexcept {
    if (x == x_max()) return values_.back();
    return tail_ == TailRule::exponential ? values_.back() * std::exp(-kappa_ * (x - x_max())) : 0.0;
  }

  std::vector<double> xs_, values_;
  TailRule tail_ = TailRule::zero;
  double kappa_ = 0.0;
};

struct GridSpec {
  double x_max = 150.0;
  std::size_t n = 3000;  // number of cells; n + 1 nodes
  Quadrature quadrature = Quadrature::gauss;
  TailRule tail = TailRule::exponential;
};

namespace detail {

inline double gk(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

/// Integral of w(x, t) k(x + t) over t in [0, inf).
template <class K>
double penalty_source(const PenaltySpec& w, double x, K&& k) {
  auto f = [&](double t) { return w(x, t) * k(x + t); };
  if (w.kind() == PenaltySpec::Kind::indicator_deficit_le) return gk(f, 0.0, w.level());
  return gk(f, 0.0, std::numeric_limits<double>::infinity());
}

/// Coefficients multiplying the h-kernel integrals in the first-jump equations.
struct DependenceWeights {
  double claim;    // lambda theta (lambda_bar + delta) / (2 lambda + lambda_bar + delta)
  double premium;  // lambda_bar theta_bar (lambda + delta) / (lambda + 2 lambda_bar + delta)
};

template <class P>
DependenceWeights dependence_weights(const P& p, double delta) {
  const double l = p.lambda, lb = p.lambda_bar;
  return {l * p.theta.value() * (lb + delta) / (2 * l + lb + delta),
          lb * p.theta_bar.value() * (l + delta) / (l + 2 * lb + delta)};
}

}  // namespace detail

/// Nystrom solution of the no-dividend Gerber-Shiu integral equation on a
/// uniform grid.
///
/// The unknown is treated as piecewise linear. With Quadrature::gauss the
/// kernel is integrated against each hat function (product integration);
/// with Quadrature::trapezoid the composite trapezoid rule is applied to the
/// whole integrand. Both are second order, but the trapezoid rule
/// overweights a kernel much narrower than the mesh (premium sizes with a
/// small mean) and can then lose the equation's probabilistic structure.
/// The premium integral beyond x_max uses an exponential tail whose rate
/// comes from a coarse pre-solve, since the last-two-node rule would make the
/// system nonlinear.
template <Marginal ClaimM, Marginal PremiumM>
GridFunction solve_gs_no_dividends(const BasicModelParams<ClaimM, PremiumM>& params, const PenaltySpec& penalty,
                                   double delta0, const GridSpec& spec = {}) {
  params.validate();
  detail::require(delta0 >= 0.0 && std::isfinite(delta0), "delta0", "must be non-negative");
  detail::require(spec.x_max > 0.0 && std::isfinite(spec.x_max), "x_max", "must be positive");
  detail::require(spec.n >= 4, "n", "need at least 4 cells");
  if (!net_profit_check(params).holds) throw ParameterError("net profit condition fails", "lambda_bar");

  const double l = params.lambda, lb = params.lambda_bar;
  const auto dw = detail::dependence_weights(params, delta0);
  auto claim_k = [&](double y) { return l * params.claim.density(y) + dw.claim * params.claim.kernel(y); };
  auto prem_k = [&](double t) { return lb * params.premium.density(t) + dw.premium * params.premium.kernel(t); };

  auto solve = [&](std::size_t n, double kappa, Quadrature quadrature) {
    const double h = spec.x_max / static_cast<double>(n);
    // conv_lo[q]: weight of m_{i-q} from the cell y in [(q-1)h, qh]; conv_hi[q]: weight of m_{i-q+1}.
    std::vector<double> conv_lo(n + 1, 0.0), conv_hi(n + 1, 0.0), fwd_lo(n + 1, 0.0), fwd_hi(n + 1, 0.0);
    using GL = boost::math::quadrature::gauss<double, 7>;
    for (std::size_t q = 1; q <= n; ++q) {
      const double a = (q - 1) * h, b = q * h;
      if (quadrature == Quadrature::gauss) {
        conv_lo[q] = GL::integrate([&](double y) { return claim_k(y) * (y - a) / h; }, a, b);
        conv_hi[q] = GL::integrate([&](double y) { return claim_k(y) * (b - y) / h; }, a, b);
      } else {
        conv_lo[q] = 0.5 * h * claim_k(b);
        conv_hi[q] = 0.5 * h * claim_k(a);
      }
    }
    for (std::size_t q = 0; q < n; ++q) {
      const double a = q * h, b = (q + 1) * h;
      if (quadrature == Quadrature::gauss) {
        fwd_lo[q] = GL::integrate([&](double t) { return prem_k(t) * (b - t) / h; }, a, b);
        fwd_hi[q] = GL::integrate([&](double t) { return prem_k(t) * (t - a) / h; }, a, b);
      } else {
        fwd_lo[q] = 0.5 * h * prem_k(a);
        fwd_hi[q] = 0.5 * h * prem_k(b);
      }
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = i * h;
      A(i, i) += l + lb + delta0;
      for (std::size_t q = 1; q <= i; ++q) {
        A(i, i - q) -= conv_lo[q];
        A(i, i - q + 1) -= conv_hi[q];
      }
      for (std::size_t q = 0; i + q < n; ++q) {
        A(i, i + q) -= fwd_lo[q];
        A(i, i + q + 1) -= fwd_hi[q];
      }
      if (kappa > 0.0) {
        const double gap = spec.x_max - x;
        A(i, n) -= detail::gk([&](double t) { return std::exp(-kappa * t) * prem_k(gap + t); }, 0.0,
                              std::numeric_limits<double>::infinity());
      }
      if (penalty.kind() == PenaltySpec::Kind::one) {
        const double surv_f = 1.0 - params.claim.cdf(x);
        rhs[i] = l * surv_f + dw.claim * detail::penalty_source(penalty, x, [&](double y) {
                   return params.claim.kernel(y);
                 });
      } else {
        rhs[i] = detail::penalty_source(penalty, x, claim_k);
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) throw NumericalError("grid system is singular", rcond > 0.0 ? 1.0 / rcond : HUGE_VAL);
    Eigen::VectorXd m = lu.solve(rhs);
    std::vector<double> xs(n + 1), vs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      xs[i] = i * h;
      vs[i] = m[i];
    }
    GridFunction out(std::move(xs), std::move(vs), spec.tail);
    out.quadrature = quadrature;
    out.reciprocal_condition = rcond;
    return out;
  };

  // Tail rate from the interior of a coarse zero-tail solve. Its last nodes
  // are distorted by the missing tail, and reading the rate off them
  // iteratively does not converge to the true decay.
  double kappa = 0.0;
  if (spec.tail == TailRule::exponential) {
    const auto coarse = solve(std::max<std::size_t>(64, spec.n / 8), 0.0, Quadrature::gauss);
    const double a = coarse(0.5 * spec.x_max), b = coarse(0.75 * spec.x_max);
    if (a > 0.0 && b > 0.0 && a > b) kappa = std::log(a / b) / (0.25 * spec.x_max);
  }
  GridFunction out = solve(spec.n, kappa, spec.quadrature);
  const double tail_weight = 1.0 - params.premium.cdf(spec.x_max);
  if (tail_weight > 1e-8)
    out.warnings.push_back("premium density has tail weight " + std::to_string(tail_weight) +
                           " beyond x_max; increase x_max");
  if (spec.tail == TailRule::exponential && out.tail() == TailRule::zero)
    out.warnings.push_back("last two nodes do not decay; zero tail used");
  return out;
}

// ---------------------------------------------------------------------------
// Residual verification

enum class Equation {
  eq9, eq10, eq25, eq26, eq27, eq28, eq29, eq30, eq42, eq43, eq44, eq47, eq48, eq49, eq50,
  eq68, eq69, eq70, eq71, eq86, eq87, eq88, eq89
};

inline constexpr Equation kAllEquations[] = {
    Equation::eq9,  Equation::eq10, Equation::eq25, Equation::eq26, Equation::eq27, Equation::eq28,
    Equation::eq29, Equation::eq30, Equation::eq42, Equation::eq43, Equation::eq44, Equation::eq47,
    Equation::eq48, Equation::eq49, Equation::eq50, Equation::eq68, Equation::eq69, Equation::eq70,
    Equation::eq71, Equation::eq86, Equation::eq87, Equation::eq88, Equation::eq89};

inline std::string to_string(Equation e) {
  static constexpr int ids[] = {9, 10, 25, 26, 27, 28, 29, 30, 42, 43, 44, 47, 48, 49, 50, 68, 69, 70, 71, 86, 87, 88, 89};
  return "eq" + std::to_string(ids[static_cast<int>(e)]);
}

inline Equation parse_equation(std::string_view s) {
  for (auto e : kAllEquations)
    if (to_string(e) == s) return e;
  throw ParameterError("unknown equation '" + std::string(s) + "'", "equation");
}

struct ResidualProbe {
  double x;
  double lhs;
  double rhs;
  double residual;  // lhs - rhs
  double scale;     // sum of magnitudes of all terms, for relative residuals
  std::map<std::string, double> intermediates;
};

struct ResidualReport {
  Equation equation{};
  std::vector<ResidualProbe> probes;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;

  void add(ResidualProbe p) {
    max_abs_residual = std::max(max_abs_residual, std::abs(p.residual));
    if (p.scale > 0.0) max_rel_residual = std::max(max_rel_residual, std::abs(p.residual) / p.scale);
    probes.push_back(std::move(p));
  }
};

/// A candidate solution m on [0, inf): analytic pieces or a grid function.
class Candidate {
 public:
  struct Piece {
    double lo, hi;
    ExpSum fn;
  };

  Candidate(const PiecewiseSolution& s)  // NOLINT(google-explicit-constructor)
      : pieces_{{0.0, s.b, s.inner}, {s.b, HUGE_VAL, s.outer}} {}
  Candidate(const ExpSolution& s) : pieces_{{0.0, HUGE_VAL, s.fn}} {}  // NOLINT
  Candidate(const ExpSum& f) : pieces_{{0.0, HUGE_VAL, f}} {}          // NOLINT
  Candidate(const GridFunction& g) : grid_(g) {}                       // NOLINT

  bool analytic() const noexcept { return !grid_.has_value(); }
  std::span<const Piece> pieces() const noexcept { return pieces_; }

  double operator()(double x, bool from_left = false) const {
    if (grid_) return (*grid_)(x);
    return piece_at(x, from_left).fn(x);
  }

  double derivative(double x, int order, bool from_left = false) const {
    if (grid_) throw UnsupportedRegimeError("derivatives need an analytic candidate", "candidate");
    return piece_at(x, from_left).fn.derivative(x, order);
  }

  /// Integral of m(u) g(u) over [lo, hi], hi may be +inf.
  double integrate(const std::function<double(double)>& g, double lo, double hi) const {
    if (hi <= lo) return 0.0;
    if (grid_) return grid_->integrate(g, lo, hi);
    double acc = 0.0;
    for (const auto& p : pieces_) {
      const double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
      if (b > a) acc += detail::gk([&](double u) { return p.fn(u) * g(u); }, a, b);
    }
    return acc;
  }

  /// Integral of m(u) e^{s (u - ref)} over [lo, hi]; exact for analytic pieces.
  double exp_weighted(double s, double ref, double lo, double hi) const {
    if (hi <= lo) return 0.0;
    if (grid_) return grid_->integrate([&](double u) { return std::exp(s * (u - ref)); }, lo, hi);
    double acc = 0.0;
    for (const auto& p : pieces_) {
      const double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
      if (b > a) acc += detail::weighted_integral(p.fn, s, ref, a, b);
    }
    return acc;
  }

 private:
  const Piece& piece_at(double x, bool from_left) const {
    for (const auto& p : pieces_) {
      if (from_left ? (x > p.lo || p.lo == 0.0) && x <= p.hi : x >= p.lo && x < p.hi) return p;
    }
    return pieces_.back();
  }

  std::vector<Piece> pieces_;
  std::optional<GridFunction> grid_;
};

namespace detail {

/// Running sum that also tracks the magnitude of what went into it.
struct Side {
  double sum = 0.0;
  double mag = 0.0;
  void add(double v) {
    sum += v;
    mag += std::abs(v);
  }
};

inline ResidualProbe make_probe(double x, const Side& lhs, const Side& rhs) {
  return {x, lhs.sum, rhs.sum, lhs.sum - rhs.sum, lhs.mag + rhs.mag, {}};
}

enum class Domain { inner, outer, whole };

inline Domain domain_of(Equation e) {
  switch (e) {
    case Equation::eq9:
    case Equation::eq29:
    case Equation::eq68:
    case Equation::eq70:
    case Equation::eq86:
    case Equation::eq88: return Domain::inner;
    case Equation::eq25:
    case Equation::eq47:
    case Equation::eq48:
    case Equation::eq49:
    case Equation::eq50: return Domain::whole;
    default: return Domain::outer;
  }
}

inline bool is_dividend_equation(Equation e) {
  switch (e) {
    case Equation::eq29:
    case Equation::eq30:
    case Equation::eq42:
    case Equation::eq43:
    case Equation::eq44:
    case Equation::eq86:
    case Equation::eq87:
    case Equation::eq88:
    case Equation::eq89: return true;
    default: return false;
  }
}

/// Checks the regime an equation is stated for.
template <class P>
void require_regime(Equation e, const P& p, const ThresholdStrategy& s) {
  const bool th0 = p.theta.independent(), tb0 = p.theta_bar.independent();
  auto need = [&](bool ok, const char* field, const char* what) {
    if (!ok) throw ParameterError(to_string(e) + " " + what, field);
  };
  switch (e) {
    case Equation::eq68:
    case Equation::eq69:
    case Equation::eq70:
    case Equation::eq71:
      need(s.pays_dividends(), "strategy", "requires a threshold strategy");
      need(th0 && tb0, "theta", "requires theta = theta_bar = 0");
      break;
    case Equation::eq26:
    case Equation::eq42:
    case Equation::eq86:
    case Equation::eq87:
    case Equation::eq88:
    case Equation::eq89: need(th0 && tb0, "theta", "requires theta = theta_bar = 0"); break;
    case Equation::eq27:
    case Equation::eq43:
    case Equation::eq49: need(tb0, "theta_bar", "requires theta_bar = 0"); break;
    case Equation::eq28:
    case Equation::eq44:
    case Equation::eq50: need(th0, "theta", "requires theta = 0"); break;
    default: break;
  }
  if (is_dividend_equation(e)) need(s.pays_dividends(), "strategy", "requires a threshold strategy");
  if (domain_of(e) == Domain::whole) need(!s.pays_dividends(), "strategy", "is for the model without dividends");
}

/// Threshold used by an equation: the dividend level, or for the model
/// without dividends +inf (inner equations) and 0 (outer equations, d = 0).
inline double equation_b(Equation e, const ThresholdStrategy& s) {
  if (s.pays_dividends()) return s.b();
  return domain_of(e) == Domain::outer ? 0.0 : HUGE_VAL;
}

inline void require_probe(Equation e, double x, double b) {
  const Domain d = domain_of(e);
  const double tol = 1e-12 * std::max(1.0, std::isfinite(b) ? b : 1.0);
  bool ok = x >= 0.0 && std::isfinite(x);
  if (d == Domain::inner) ok = ok && x <= b + tol;
  if (d == Domain::outer) ok = ok && x >= b - tol;
  if (!ok) throw ParameterError(to_string(e) + ": probe " + std::to_string(x) + " outside the equation's domain", "probes");
}

/// Kernel as an anchor-0 ExpSum, i.e. sum a_r e^{r y}.
inline std::vector<ExpTerm> global_terms(const ExpSum& k) {
  std::vector<ExpTerm> out;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k.terms()[i].coeff != 0.0) out.push_back({k.global_coeff(i), k.terms()[i].rate});
  return out;
}

inline void require_off_resonance(double z, double r) {
  if (std::abs(z - r) <= 1e-12 * std::max({1.0, std::abs(z), std::abs(r)}))
    throw NumericalError("candidate rate coincides with a kernel rate; the convolution is not an exponential sum");
}

/// int_0^x m(u) k(x - u) du as an exponential sum in x, valid for x >= A.
/// Requires the candidate's last piece to start at or below A.
inline ExpSum conv_expsum(const Candidate& c, const ExpSum& kernel, double A) {
  const auto ks = global_terms(kernel);
  const auto pieces = c.pieces();
  const auto& last = pieces.back();
  if (last.lo > A) throw ParameterError("candidate has a breakpoint beyond the equation threshold", "candidate");
  ExpSum out(A);
  for (const auto& k : ks) {
    // Pieces entirely below the last one: fixed limits.
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
      const auto& p = pieces[i];
      if (p.hi > p.lo) out.add_term(k.coeff * detail::weighted_integral(p.fn, -k.rate, A, p.lo, p.hi), k.rate);
    }
    // Last piece from lo to x.
    const ExpSum m = last.fn.reanchored(A);
    for (const auto& t : m.terms()) {
      require_off_resonance(t.rate, k.rate);
      const double g = t.coeff * k.coeff / (t.rate - k.rate);
      out.add_term(g, t.rate);
      out.add_term(-g * std::exp((t.rate - k.rate) * (last.lo - A)), k.rate);
    }
  }
  return out;
}

/// int_0^inf m(x + t) k(t) dt as an exponential sum in x, valid for x >= A.
inline ExpSum fwd_expsum(const Candidate& c, const ExpSum& kernel, double A) {
  const auto& last = c.pieces().back();
  if (last.lo > A) throw ParameterError("candidate has a breakpoint beyond the equation threshold", "candidate");
  ExpSum out(A);
  const ExpSum m = last.fn.reanchored(A);
  for (const auto& k : global_terms(kernel)) {
    for (const auto& t : m.terms()) {
      if (!(t.rate + k.rate < 0.0)) throw NumericalError("forward premium integral diverges");
      out.add_term(t.coeff * k.coeff / -(t.rate + k.rate), t.rate);
    }
  }
  return out;
}

/// int_0^inf w(x, t) k(x + t) dt as an exponential sum in x.
inline ExpSum source_expsum(const PenaltySpec& w, const ExpSum& kernel, double A) {
  ExpSum out(A);
  for (const auto& k : global_terms(kernel)) {
    const double r = k.rate;
    double j = 0.0;
    switch (w.kind()) {
      case PenaltySpec::Kind::one: j = -1.0 / r; break;
      case PenaltySpec::Kind::deficit: j = 1.0 / (r * r); break;
      case PenaltySpec::Kind::indicator_deficit_le: j = detail::expm1_over(r, w.level()); break;
      default:
        throw UnsupportedRegimeError("penalty " + w.name() + " has no exponential-sum source term", "penalty");
    }
    out.add_term(k.coeff * std::exp(r * A) * j, r);
  }
  return out;
}

}  // namespace detail

/// Default probe set {0, b/2, b, b+1, 2b, 5b} restricted to the equation's
/// domain; without dividends {0, 1, 2.5, 5, 10, 20}.
inline std::vector<double> default_probes(Equation e, const ThresholdStrategy& s) {
  const double b = detail::equation_b(e, s);
  std::vector<double> base;
  if (s.pays_dividends())
    base = {0.0, 0.5 * b, b, b + 1.0, 2.0 * b, 5.0 * b};
  else
    base = {0.0, 1.0, 2.5, 5.0, 10.0, 20.0};
  std::vector<double> out;
  const auto dom = detail::domain_of(e);
  for (double x : base) {
    if (dom == detail::Domain::inner && x > b) continue;
    if (dom == detail::Domain::outer && x < b) continue;
    out.push_back(x);
  }
  return out;
}

/// Residuals of the equations without derivatives of the unknown: the
/// first-jump integral equations (eq9, eq25, eq29, eq47, evaluated by adaptive
/// quadrature) and their exponential forms (eq48, eq68, eq69, eq86, eq87, whose
/// exponential-weighted integrals are exact for analytic candidates).
///
/// For eq9 / eq25 the penalty and discounts.delta0 apply; eq29, eq86 and eq87
/// use discounts.delta. eq69 and eq87 carry one first derivative and so need
/// an analytic candidate.
template <Marginal ClaimM, Marginal PremiumM>
ResidualReport residual_integral_inner(const Candidate& cand, const BasicModelParams<ClaimM, PremiumM>& params,
                                       const ThresholdStrategy& strategy, const PenaltySpec& penalty,
                                       const Discounts& discounts, Equation eq, std::span<const double> probes) {
  using detail::Side;
  detail::require_regime(eq, params, strategy);
  const double b = detail::equation_b(eq, strategy);
  const double d = strategy.d();
  const double l = params.lambda, lb = params.lambda_bar;
  const double inf = std::numeric_limits<double>::infinity();
  ResidualReport rep;
  rep.equation = eq;
  constexpr bool exponential =
      std::is_same_v<ClaimM, ExponentialMarginal> && std::is_same_v<PremiumM, ExponentialMarginal>;
  if (!exponential && eq != Equation::eq9 && eq != Equation::eq25 && eq != Equation::eq29)
    throw UnsupportedRegimeError(to_string(eq) + " requires exponential marginals", "claim");

  auto first_jump = [&](double x, bool dividends) {
    const double delta = dividends ? discounts.delta : (eq == Equation::eq47 ? 0.0 : discounts.delta0);
    const PenaltySpec w = eq == Equation::eq47 ? PenaltySpec::one() : penalty;
    const auto dw = detail::dependence_weights(params, delta);
    Side lhs, rhs;
    lhs.add((l + lb + delta) * cand(x, true));
    const double cf = cand.integrate([&](double u) { return params.claim.density(x - u); }, 0.0, x);
    const double ch = cand.integrate([&](double u) { return params.claim.kernel(x - u); }, 0.0, x);
    const double pf = cand.integrate([&](double u) { return params.premium.density(u - x); }, x, inf);
    const double ph = cand.integrate([&](double u) { return params.premium.kernel(u - x); }, x, inf);
    rhs.add(l * cf);
    rhs.add(dw.claim * ch);
    rhs.add(lb * pf);
    rhs.add(dw.premium * ph);
    double sf = 0.0, sh = 0.0;
    if (!dividends) {
      sf = detail::penalty_source(w, x, [&](double y) { return params.claim.density(y); });
      sh = detail::penalty_source(w, x, [&](double y) { return params.claim.kernel(y); });
      rhs.add(l * sf);
      rhs.add(dw.claim * sh);
    }
    auto p = detail::make_probe(x, lhs, rhs);
    p.intermediates = {{"claim_f", cf}, {"claim_h", ch}, {"premium_f", pf}, {"premium_h", ph},
                       {"source_f", sf}, {"source_h", sh}};
    return p;
  };

  for (double x : probes) {
    detail::require_probe(eq, x, b);
    switch (eq) {
      case Equation::eq9:
      case Equation::eq25:
      case Equation::eq47: rep.add(first_jump(x, false)); break;
      case Equation::eq29: rep.add(first_jump(x, true)); break;
      case Equation::eq48: {
        {
          const double mu = params.mu(), mb = params.mu_bar();
          const double i13 = cand.exp_weighted(1.0 / mu, x, 0.0, x) / mu;
          const double i14 = 2.0 * cand.exp_weighted(2.0 / mu, x, 0.0, x) / mu;
          const double i15 = cand.exp_weighted(-1.0 / mb, x, x, inf) / mb;
          const double i16 = 2.0 * cand.exp_weighted(-2.0 / mb, x, x, inf) / mb;
          const double c = l * lb * params.theta.value() / (2 * l + lb);
          const double cb = l * lb * params.theta_bar.value() / (l + 2 * lb);
          Side lhs, rhs;
          lhs.add((l + lb) * cand(x));
          rhs.add((l - c) * i13);
          rhs.add(c * i14);
          rhs.add((lb - cb) * i15);
          rhs.add(cb * i16);
          rhs.add((l - c) * std::exp(-x / mu));
          rhs.add(c * std::exp(-2.0 * x / mu));
          auto p = detail::make_probe(x, lhs, rhs);
          p.intermediates = {{"I13", i13}, {"I14", i14}, {"I15", i15}, {"I16", i16}};
          rep.add(std::move(p));
        }
        break;
      }
      case Equation::eq68:
      case Equation::eq69:
      case Equation::eq86:
      case Equation::eq87: {
        const double mu = params.mu(), mb = params.mu_bar();
        const bool v = eq == Equation::eq86 || eq == Equation::eq87;
        const bool outer = eq == Equation::eq69 || eq == Equation::eq87;
        const double delta = v ? discounts.delta : 0.0;
        const double claim_int = cand.exp_weighted(1.0 / mu, x, 0.0, x) / mu;
        const double prem_int = cand.exp_weighted(-1.0 / mb, x, x, inf) / mb;
        Side lhs, rhs;
        if (outer) lhs.add(d * cand.derivative(x, 1));
        lhs.add((l + lb + delta) * cand(x, !outer));
        rhs.add(l * claim_int);
        rhs.add(lb * prem_int);
        if (!v) rhs.add(l * std::exp(-x / mu));
        if (eq == Equation::eq87) rhs.add(d);
        auto p = detail::make_probe(x, lhs, rhs);
        p.intermediates = {{"claim_integral", claim_int}, {"premium_integral", prem_int}};
        rep.add(std::move(p));
        break;
      }
      default: throw ParameterError(to_string(eq) + " is not an integral-form equation", "equation");
    }
  }
  return rep;
}

/// Residuals of the differential forms: the outer equations with beta terms
/// (eq10, eq26-28, eq30, eq42-44) and the constant-coefficient ODEs (eq49,
/// eq50, eq70, eq71, eq88, eq89).
///
/// Derivatives of the unknown and of the beta functions are exact, which
/// needs an analytic candidate and exponential-sum marginals. Without
/// dividends the outer equations are taken with b = 0 and d = 0; then no
/// derivative appears and grid candidates are accepted too (beta terms by
/// quadrature). `variant` selects the sign of the theta term in eq49.
template <Marginal ClaimM, Marginal PremiumM>
ResidualReport residual_outer_ode(const Candidate& cand, const BasicModelParams<ClaimM, PremiumM>& params,
                                  const ThresholdStrategy& strategy, const PenaltySpec& penalty,
                                  const Discounts& discounts, Equation eq, std::span<const double> probes,
                                  Variant variant = Variant::model_consistent) {
  using detail::Side;
  detail::require_regime(eq, params, strategy);
  const double b = detail::equation_b(eq, strategy);
  const double d = strategy.d();
  const double l = params.lambda, lb = params.lambda_bar;
  const double th = params.theta.value(), tb = params.theta_bar.value();
  ResidualReport rep;
  rep.equation = eq;

  const bool beta_form = eq == Equation::eq10 || eq == Equation::eq26 || eq == Equation::eq27 ||
                         eq == Equation::eq28 || eq == Equation::eq30 || eq == Equation::eq42 ||
                         eq == Equation::eq43 || eq == Equation::eq44;
  if (!beta_form) {
    if (!cand.analytic()) throw UnsupportedRegimeError(to_string(eq) + " needs an analytic candidate", "candidate");
    if constexpr (!(std::is_same_v<ClaimM, ExponentialMarginal> && std::is_same_v<PremiumM, ExponentialMarginal>)) {
      throw UnsupportedRegimeError(to_string(eq) + " requires exponential marginals", "claim");
    } else {
      const double mu = params.mu(), mb = params.mu_bar(), dl = discounts.delta;
      // Coefficients of m''', m'', m', m and the constant right-hand side.
      double c3 = 0, c2 = 0, c1 = 0, c0 = 0, rhs_const = 0;
      bool left = false;
      switch (eq) {
        case Equation::eq49: {
          const auto k = claim_dependence_constants(params, variant);
          c3 = k.a;
          c2 = k.b;
          c1 = k.c;
          break;
        }
        case Equation::eq50: {
          c3 = mu * mb * mb * (l + lb) * (l + 2 * lb);
          c2 = -mu * mb * (3 * l + 2 * lb) * (l + 2 * lb) + lb * mb * mb * (l + 2 * lb) + l * lb * mu * mb * tb;
          c1 = 2 * (l * mu - lb * mb) * (l + 2 * lb) + l * lb * mb * tb;
          break;
        }
        case Equation::eq70:
          c2 = mu * mb * (l + lb);
          c1 = lb * mb - l * mu;
          left = true;
          break;
        case Equation::eq71:
          c3 = d * mu * mb;
          c2 = d * mb - d * mu + mu * mb * (l + lb);
          c1 = lb * mb - l * mu - d;
          break;
        case Equation::eq88:
          c2 = mu * mb * (l + lb + dl);
          c1 = mb * (lb + dl) - mu * (l + dl);
          c0 = -dl;
          left = true;
          break;
        case Equation::eq89:
          c3 = d * mu * mb;
          c2 = d * (mb - mu) + mu * mb * (l + lb + dl);
          c1 = mb * (lb + dl) - mu * (l + dl) - d;
          c0 = -dl;
          rhs_const = -d;
          break;
        default: throw ParameterError(to_string(eq) + " is not a differential-form equation", "equation");
      }
      for (double x : probes) {
        detail::require_probe(eq, x, b);
        Side lhs, rhs;
        if (c3 != 0) lhs.add(c3 * cand.derivative(x, 3, left));
        if (c2 != 0) lhs.add(c2 * cand.derivative(x, 2, left));
        if (c1 != 0) lhs.add(c1 * cand.derivative(x, 1, left));
        if (c0 != 0) lhs.add(c0 * cand(x, left));
        rhs.add(rhs_const);
        rep.add(detail::make_probe(x, lhs, rhs));
      }
    }
    return rep;
  }

  // Beta forms on [b, inf).
  const bool v = detail::is_dividend_equation(eq);
  const double dt = v ? discounts.delta : discounts.delta0;
  const double A1 = l + lb + dt;      // own rate
  const double A2 = 2 * l + lb + dt;  // claim-dependence factor
  const double A3 = l + 2 * lb + dt;  // premium-dependence factor
  if (d > 0.0 && !cand.analytic())
    throw UnsupportedRegimeError(to_string(eq) + " with dividends needs an analytic candidate", "candidate");

  // beta1/beta3 = claim part (+ source) + premium part; beta2/beta4 likewise with h only.
  std::function<double(double, int)> beta_main, beta_dep, fwd_h;
  bool exact = false;
  if constexpr (ExpSumMarginal<ClaimM> && ExpSumMarginal<PremiumM>) {
    if (cand.analytic()) {
      exact = true;
      const ExpSum f = params.claim.density_expsum(), h = params.claim.kernel_expsum();
      const ExpSum fb = params.premium.density_expsum(), hb = params.premium.kernel_expsum();
      const ExpSum claim_k = f * l + h * (l * th), prem_k = fb * lb + hb * (lb * tb);
      ExpSum main = detail::conv_expsum(cand, claim_k, b) + detail::fwd_expsum(cand, prem_k, b);
      ExpSum dep = detail::conv_expsum(cand, h, b) * (l * l * th) + detail::fwd_expsum(cand, hb, b) * (lb * lb * tb);
      if (!v) {
        main += detail::source_expsum(penalty, claim_k, b);
        if (th != 0.0) dep += detail::source_expsum(penalty, h, b) * (l * l * th);
      }
      ExpSum fh = detail::fwd_expsum(cand, hb, b);
      beta_main = [main](double x, int k) { return main.derivative(x, k); };
      beta_dep = [dep](double x, int k) { return dep.derivative(x, k); };
      fwd_h = [fh](double x, int) { return fh(x); };
    }
  }
  if (!exact) {
    const double inf = std::numeric_limits<double>::infinity();
    auto claim_k = [&params, l, th](double y) { return l * (params.claim.density(y) + th * params.claim.kernel(y)); };
    auto prem_k = [&params, lb, tb](double t) {
      return lb * (params.premium.density(t) + tb * params.premium.kernel(t));
    };
    beta_main = [=, &cand, &params, &penalty](double x, int k) {
      if (k != 0) throw UnsupportedRegimeError("beta derivatives need an analytic candidate", "candidate");
      double s = cand.integrate([&](double u) { return claim_k(x - u); }, 0.0, x) +
                 cand.integrate([&](double u) { return prem_k(u - x); }, x, inf);
      if (!v) s += detail::penalty_source(penalty, x, claim_k);
      return s;
    };
    beta_dep = [=, &cand, &params, &penalty](double x, int k) {
      if (k != 0) throw UnsupportedRegimeError("beta derivatives need an analytic candidate", "candidate");
      double s = 0.0;
      if (th != 0.0) {
        s += l * l * th * cand.integrate([&](double u) { return params.claim.kernel(x - u); }, 0.0, x);
        if (!v) s += l * l * th * detail::penalty_source(penalty, x, [&](double y) { return params.claim.kernel(y); });
      }
      if (tb != 0.0) s += lb * lb * tb * cand.integrate([&](double u) { return params.premium.kernel(u - x); }, x, inf);
      return s;
    };
    fwd_h = [&cand, &params, inf](double x, int) {
      return cand.integrate([&](double u) { return params.premium.kernel(u - x); }, x, inf);
    };
  }

  for (double x : probes) {
    detail::require_probe(eq, x, b);
    auto m = [&](int k) { return k == 0 ? cand(x) : cand.derivative(x, k); };
    auto dk = [&](int k) { return d == 0.0 ? 0.0 : m(k); };  // derivative terms vanish with d
    auto bm = [&](int k) { return k > 0 && d == 0.0 ? 0.0 : beta_main(x, k); };
    auto bd = [&](int k) { return k > 0 && d == 0.0 ? 0.0 : beta_dep(x, k); };
    const double forcing = v ? d : 0.0;
    Side lhs, rhs;
    switch (eq) {
      case Equation::eq26:
      case Equation::eq42:
        lhs.add(d * dk(1));
        lhs.add(A1 * m(0));
        rhs.add(bm(0));
        rhs.add(forcing);
        break;
      case Equation::eq27:
      case Equation::eq43:
      case Equation::eq28:
      case Equation::eq44: {
        const double k = (eq == Equation::eq27 || eq == Equation::eq43) ? A2 : A3;
        const double first = (eq == Equation::eq27 || eq == Equation::eq43) ? 3 * l + 2 * lb + 2 * dt
                                                                              : 2 * l + 3 * lb + 2 * dt;
        lhs.add(d * d * dk(2));
        lhs.add(first * d * dk(1));
        lhs.add(k * A1 * m(0));
        rhs.add(k * bm(0));
        rhs.add(d * bm(1));
        rhs.add(-2.0 * bd(0));
        rhs.add(k * forcing);
        break;
      }
      case Equation::eq10:
      case Equation::eq30: {
        lhs.add(d * d * d * dk(3));
        lhs.add((4 * l + 4 * lb + 3 * dt) * d * d * dk(2));
        lhs.add((A3 * (3 * l + 2 * lb + 2 * dt) + A2 * A1) * d * dk(1));
        lhs.add(A3 * A2 * A1 * m(0));
        rhs.add(A3 * A2 * bm(0));
        rhs.add((3 * l + 3 * lb + 2 * dt) * d * bm(1));
        rhs.add(d * d * bm(2));
        rhs.add(-2.0 * A3 * bd(0));
        rhs.add(-2.0 * d * bd(1));
        rhs.add(A3 * A2 * forcing);
        if (tb != 0.0) rhs.add(2.0 * lb * lb * tb * (lb - l) * fwd_h(x, 0));
        break;
      }
      default: break;
    }
    auto p = detail::make_probe(x, lhs, rhs);
    p.intermediates[v ? "beta3" : "beta1"] = beta_main(x, 0);
    p.intermediates[v ? "beta4" : "beta2"] = beta_dep(x, 0);
    rep.add(std::move(p));
  }
  return rep;
}

/// Dispatches to the integral or differential evaluator.
template <Marginal ClaimM, Marginal PremiumM>
ResidualReport residual(const Candidate& cand, const BasicModelParams<ClaimM, PremiumM>& params,
                        const ThresholdStrategy& strategy, const PenaltySpec& penalty, const Discounts& discounts,
                        Equation eq, std::span<const double> probes, Variant variant = Variant::model_consistent) {
  switch (eq) {
    case Equation::eq9:
    case Equation::eq25:
    case Equation::eq29:
    case Equation::eq47:
    case Equation::eq48:
    case Equation::eq68:
    case Equation::eq69:
    case Equation::eq86:
    case Equation::eq87: return residual_integral_inner(cand, params, strategy, penalty, discounts, eq, probes);
    default: return residual_outer_ode(cand, params, strategy, penalty, discounts, eq, probes, variant);
  }
}

}  // namespace fgmrisk
