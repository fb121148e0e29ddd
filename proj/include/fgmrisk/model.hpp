#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "copula.hpp"
#include "error.hpp"

namespace fgmrisk {

/// Claims arrive at rate lambda with sizes from `claim`; premiums arrive at
/// rate lambda_bar with sizes from `premium`. theta couples each claim size to
/// its inter-arrival time, theta_bar does the same for premiums.
template <Marginal ClaimM = ExponentialMarginal, Marginal PremiumM = ClaimM>
struct BasicModelParams {
  double lambda = 1.0;
  double lambda_bar = 1.0;
  ClaimM claim{};
  PremiumM premium{};
  FgmParam theta{};
  FgmParam theta_bar{};

  BasicModelParams() = default;
  BasicModelParams(double lambda_, double lambda_bar_, ClaimM claim_, PremiumM premium_, FgmParam theta_ = {},
                   FgmParam theta_bar_ = {})
      : lambda(lambda_), lambda_bar(lambda_bar_), claim(claim_), premium(premium_), theta(theta_),
        theta_bar(theta_bar_) {
    validate();
  }

  void validate() const {
    detail::require(lambda > 0.0 && std::isfinite(lambda), "lambda", "claim intensity must be positive");
    detail::require(lambda_bar > 0.0 && std::isfinite(lambda_bar), "lambda_bar",
                    "premium intensity must be positive");
    // FgmParam and the marginals validate themselves on construction.
  }

  double mu() const { return claim.mean(); }
  double mu_bar() const { return premium.mean(); }
  bool independent() const { return theta.independent() && theta_bar.independent(); }
};

using ModelParams = BasicModelParams<>;

/// Convenience constructor for the exponential model.
inline ModelParams exponential_model(double lambda, double lambda_bar, double mu, double mu_bar, double theta = 0.0,
                                     double theta_bar = 0.0) {
  return ModelParams(lambda, lambda_bar, ExponentialMarginal(mu, "mu"), ExponentialMarginal(mu_bar, "mu_bar"),
                     FgmParam(theta, "theta"), FgmParam(theta_bar, "theta_bar"));
}

class ThresholdStrategy {
 public:
  enum class Mode { none, threshold };

  ThresholdStrategy() = default;

  static ThresholdStrategy none() { return {}; }
  static ThresholdStrategy threshold(double b, double d) {
    detail::require(b > 0.0 && std::isfinite(b), "b", "threshold must be positive and finite");
    detail::require(d > 0.0 && std::isfinite(d), "d", "dividend rate must be positive and finite");
    ThresholdStrategy s;
    s.mode_ = Mode::threshold;
    s.b_ = b;
    s.d_ = d;
    return s;
  }

  Mode mode() const noexcept { return mode_; }
  bool pays_dividends() const noexcept { return mode_ == Mode::threshold; }
  /// Threshold level; +inf without dividends so that `x < b()` is always true.
  double b() const noexcept { return pays_dividends() ? b_ : HUGE_VAL; }
  double d() const noexcept { return pays_dividends() ? d_ : 0.0; }

 private:
  Mode mode_ = Mode::none;
  double b_ = 0.0;
  double d_ = 0.0;
};

struct Discounts {
  double delta0 = 0.0;
  double delta = 0.01;

  Discounts() = default;
  Discounts(double delta0_, double delta_) : delta0(delta0_), delta(delta_) { validate(); }

  void validate() const {
    detail::require(delta0 >= 0.0 && std::isfinite(delta0), "delta0", "must be non-negative");
    detail::require(delta > 0.0 && std::isfinite(delta), "delta", "must be positive");
  }
};

/// w(surplus prior to ruin, deficit at ruin).
class PenaltySpec {
 public:
  enum class Kind { one, deficit, surplus_prior, product, indicator_deficit_le };

  PenaltySpec() = default;

  static PenaltySpec one() { return PenaltySpec(Kind::one, 0.0); }
  static PenaltySpec deficit() { return PenaltySpec(Kind::deficit, 0.0); }
  static PenaltySpec surplus_prior() { return PenaltySpec(Kind::surplus_prior, 0.0); }
  static PenaltySpec product() { return PenaltySpec(Kind::product, 0.0); }
  static PenaltySpec indicator_deficit_le(double a) {
    detail::require(a >= 0.0 && std::isfinite(a), "a", "indicator level must be non-negative");
    return PenaltySpec(Kind::indicator_deficit_le, a);
  }

  Kind kind() const noexcept { return kind_; }
  double level() const noexcept { return level_; }
  bool bounded() const noexcept { return kind_ == Kind::one || kind_ == Kind::indicator_deficit_le; }

  double operator()(double surplus_prior, double deficit) const noexcept {
    switch (kind_) {
      case Kind::one: return 1.0;
      case Kind::deficit: return deficit;
      case Kind::surplus_prior: return surplus_prior;
      case Kind::product: return surplus_prior * deficit;
      case Kind::indicator_deficit_le: return deficit <= level_ ? 1.0 : 0.0;
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::one: return "one";
      case Kind::deficit: return "deficit";
      case Kind::surplus_prior: return "surplus_prior";
      case Kind::product: return "product";
      case Kind::indicator_deficit_le: return "indicator_deficit_le(" + std::to_string(level_) + ")";
    }
    return {};
  }

  static PenaltySpec parse(std::string_view s) {
    if (s == "one") return one();
    if (s == "deficit") return deficit();
    if (s == "surplus_prior") return surplus_prior();
    if (s == "product") return product();
    constexpr std::string_view prefix = "indicator_deficit_le:";
    if (s.starts_with(prefix)) {
      try {
        return indicator_deficit_le(std::stod(std::string(s.substr(prefix.size()))));
      } catch (const std::logic_error&) {
      }
    }
    throw ParameterError("unknown penalty '" + std::string(s) + "'", "penalty");
  }

 private:
  PenaltySpec(Kind k, double a) : kind_(k), level_(a) {}
  Kind kind_ = Kind::one;
  double level_ = 0.0;
};

inline double penalty_eval(const PenaltySpec& w, double surplus_prior, double deficit) {
  detail::require(surplus_prior >= 0.0, "surplus_prior", "must be non-negative");
  detail::require(deficit >= 0.0, "deficit", "must be non-negative");
  return w(surplus_prior, deficit);
}

struct NetProfit {
  bool holds;
  double margin;  // lambda_bar mu_bar - lambda mu - d
};

template <class P>
NetProfit net_profit_check(const P& params, const ThresholdStrategy& strategy = ThresholdStrategy::none()) {
  const double margin = params.lambda_bar * params.mu_bar() - params.lambda * params.mu() - strategy.d();
  return {margin > 0.0, margin};
}

}  // namespace fgmrisk
