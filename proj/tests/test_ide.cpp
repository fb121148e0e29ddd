#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <fgmrisk/closedform.hpp>
#include <fgmrisk/ide.hpp>

using namespace fgmrisk;

namespace {

ModelParams sec6(double theta = 0.0, double theta_bar = 0.0) {
  return exponential_model(0.1, 2.3, 3.0, 0.2, theta, theta_bar);
}
const ThresholdStrategy kNone = ThresholdStrategy::none();
const ThresholdStrategy kDiv = ThresholdStrategy::threshold(5.0, 0.1);
const Discounts kDisc(0.0, 0.01);

ResidualReport check(const Candidate& c, const ModelParams& p, const ThresholdStrategy& s, Equation eq,
                     std::vector<double> probes = {}) {
  if (probes.empty()) probes = default_probes(eq, s);
  return residual(c, p, s, PenaltySpec::one(), kDisc, eq, probes);
}

double max_error_on(const GridFunction& g, const std::function<double(double)>& exact, double hi) {
  double worst = 0.0;
  for (double x = 0.0; x <= hi + 1e-12; x += 0.05) worst = std::max(worst, std::abs(g(x) - exact(x)));
  return worst;
}

GridSpec spec(double x_max, std::size_t n, Quadrature q = Quadrature::gauss) {
  GridSpec s;
  s.x_max = x_max;
  s.n = n;
  s.quadrature = q;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// every equation id against a solution known to satisfy it

TEST(Residuals, NoDividendClaimDependence) {
  const auto p = sec6(0.5);
  const auto psi = psi_theta_no_dividends(p);
  for (auto eq : {Equation::eq25, Equation::eq47, Equation::eq48, Equation::eq49, Equation::eq27, Equation::eq10}) {
    const auto r = check(Candidate(psi), p, kNone, eq);
    EXPECT_LE(r.max_abs_residual, 1e-8) << to_string(eq);
    EXPECT_EQ(r.probes.size(), 6u) << to_string(eq);
  }
}

TEST(Residuals, NoDividendIndependent) {
  const auto p = sec6();
  const auto psi = psi_independent_no_dividends(p);
  for (auto eq : {Equation::eq25, Equation::eq26, Equation::eq28, Equation::eq48, Equation::eq49, Equation::eq50})
    EXPECT_LE(check(Candidate(psi), p, kNone, eq).max_abs_residual, 1e-8) << to_string(eq);
}

TEST(Residuals, ThresholdRuin) {
  const auto p = sec6();
  const auto psi = psi_threshold_independent(p, kDiv);
  for (auto eq : {Equation::eq9, Equation::eq10, Equation::eq26, Equation::eq27, Equation::eq28, Equation::eq68,
                  Equation::eq69, Equation::eq70, Equation::eq71}) {
    const auto r = check(Candidate(psi), p, kDiv, eq);
    EXPECT_LE(r.max_abs_residual, 1e-8) << to_string(eq);
    EXPECT_FALSE(r.probes.empty());
  }
  // ten probes across both pieces for the ODE forms
  std::vector<double> inner, outer;
  for (int i = 0; i < 10; ++i) {
    inner.push_back(0.5 * i);
    outer.push_back(5.0 + 2.0 * i);
  }
  EXPECT_LE(check(Candidate(psi), p, kDiv, Equation::eq70, inner).max_abs_residual, 1e-8);
  EXPECT_LE(check(Candidate(psi), p, kDiv, Equation::eq71, outer).max_abs_residual, 1e-8);
}

TEST(Residuals, ThresholdDividends) {
  const auto p = sec6();
  const auto v = dividends_threshold_independent(p, kDiv, 0.01);
  for (auto eq : {Equation::eq29, Equation::eq30, Equation::eq42, Equation::eq43, Equation::eq44, Equation::eq86,
                  Equation::eq87, Equation::eq88, Equation::eq89}) {
    const auto r = check(Candidate(v), p, kDiv, eq);
    EXPECT_LE(r.max_rel_residual, 1e-7) << to_string(eq);
  }
}

TEST(Residuals, AllEquationIdsCovered) {
  // ids used above, as a guard against a new id slipping through untested
  EXPECT_EQ(std::size(kAllEquations), 23u);
  for (auto eq : kAllEquations) EXPECT_EQ(parse_equation(to_string(eq)), eq);
  EXPECT_THROW(parse_equation("eq11"), ParameterError);
}

TEST(Residuals, PremiumDependentGridAtNodes) {
  const auto p = sec6(0.0, 0.5);
  const auto g = solve_gs_no_dividends(p, PenaltySpec::one(), 0.0, spec(60, 600));
  const std::vector<double> nodes{0.0, 1.0, 2.5, 5.0, 10.0, 20.0};  // multiples of h = 0.1
  for (auto eq : {Equation::eq25, Equation::eq28, Equation::eq10})
    EXPECT_LE(check(Candidate(g), p, kNone, eq, nodes).max_abs_residual, 1e-8) << to_string(eq);
}

TEST(Residuals, ClaimIntegralMatchesIndependentQuadrature) {
  const auto psi = psi_theta_no_dividends(sec6(0.5));
  const std::vector<double> xs{0.0, 3.0, 12.0};
  const auto r = check(Candidate(psi), sec6(0.5), kNone, Equation::eq48, xs);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (const auto& probe : r.probes) {
    const double x = probe.x;
    const double i13 = x == 0.0 ? 0.0
                                : GK::integrate([&](double u) { return psi(u) * std::exp((u - x) / 3.0); }, 0.0, x,
                                                10, 1e-14) /
                                      3.0;
    EXPECT_NEAR(probe.intermediates.at("I13"), i13, 1e-13);
    EXPECT_TRUE(probe.intermediates.count("I16"));
  }
}

TEST(Residuals, ZeroCandidateLeavesTheSource) {
  const auto p = sec6(0.5);
  const Candidate zero{ExpSum(0.0)};
  const auto r = check(zero, p, kNone, Equation::eq25);
  const double l = p.lambda, w = l * 0.5 * 2.3 / (2 * l + 2.3);
  for (const auto& probe : r.probes) {
    const double source = l * probe.intermediates.at("source_f") + w * probe.intermediates.at("source_h");
    EXPECT_GT(source, 0.0);
    EXPECT_NEAR(-probe.residual, source, 1e-15);
    // w = 1: source is lambda e^{-x/mu} plus the kernel term
    EXPECT_NEAR(probe.intermediates.at("source_f"), std::exp(-probe.x / 3.0), 1e-12);
  }
}

TEST(Residuals, Linearity) {
  const auto p = sec6(0.5);
  const ExpSum c(0.0, {{1.0, -0.3}, {0.5, -1.7}});
  for (auto eq : {Equation::eq49, Equation::eq27}) {
    const auto r1 = check(Candidate(c), p, kNone, eq);
    EXPECT_GT(r1.max_abs_residual, 1e-6);
    for (double a : {0.0, 2.0}) {
      const auto ra = check(Candidate(c * a), p, kNone, eq);
      const auto r0 = check(Candidate(ExpSum(0.0)), p, kNone, eq);
      for (std::size_t i = 0; i < r1.probes.size(); ++i)
        EXPECT_NEAR(ra.probes[i].residual - r0.probes[i].residual, a * (r1.probes[i].residual - r0.probes[i].residual),
                    1e-12 * (1 + std::abs(r1.probes[i].residual)));
    }
  }
  // eq49 is homogeneous
  EXPECT_EQ(check(Candidate(ExpSum(0.0)), p, kNone, Equation::eq49).max_abs_residual, 0.0);
}

TEST(Residuals, DistinctEquationsDiscriminate) {
  // a claim-dependent solution does not solve the premium-dependent ODE
  const auto psi = psi_theta_no_dividends(sec6(0.5));
  const auto r = check(Candidate(psi), sec6(0.0, 0.5), kNone, Equation::eq50);
  EXPECT_GT(r.max_abs_residual, 1e-4);
  // the printed solution solves the ODE with the printed sign but not the integral equation
  const auto printed = psi_theta_no_dividends(sec6(0.5), Variant::as_printed);
  const auto rp = residual(Candidate(printed), sec6(0.5), kNone, PenaltySpec::one(), kDisc, Equation::eq49,
                           default_probes(Equation::eq49, kNone), Variant::as_printed);
  EXPECT_LE(rp.max_abs_residual, 1e-10);
  EXPECT_GT(check(Candidate(printed), sec6(0.5), kNone, Equation::eq48).max_abs_residual, 1e-6);
}

TEST(Residuals, DomainAndRegimeErrors) {
  const auto psi = psi_threshold_independent(sec6(), kDiv);
  try {
    check(Candidate(psi), sec6(), kDiv, Equation::eq68, {6.0});
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "probes");
  }
  EXPECT_THROW(check(Candidate(psi), sec6(), kDiv, Equation::eq71, {4.0}), ParameterError);
  EXPECT_THROW(check(Candidate(psi), sec6(0.5), kDiv, Equation::eq68), ParameterError);
  EXPECT_THROW(check(Candidate(psi), sec6(), kNone, Equation::eq68), ParameterError);
  EXPECT_THROW(check(Candidate(psi), sec6(), kDiv, Equation::eq48), ParameterError);
  const auto g = solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(40, 100));
  EXPECT_THROW(check(Candidate(g), sec6(), kDiv, Equation::eq70), UnsupportedRegimeError);
}

TEST(Residuals, DefaultProbes) {
  EXPECT_EQ(default_probes(Equation::eq68, kDiv), (std::vector<double>{0.0, 2.5, 5.0}));
  EXPECT_EQ(default_probes(Equation::eq69, kDiv), (std::vector<double>{5.0, 6.0, 10.0, 25.0}));
  EXPECT_EQ(default_probes(Equation::eq48, kNone), (std::vector<double>{0.0, 1.0, 2.5, 5.0, 10.0, 20.0}));
}

// ---------------------------------------------------------------------------
// grid functions and the Nystrom solver

TEST(GridFunction, Validation) {
  EXPECT_THROW(GridFunction({0, 1}, {1}), ParameterError);
  EXPECT_THROW(GridFunction({0}, {1}), ParameterError);
  EXPECT_THROW(GridFunction({0.5, 1}, {1, 2}), ParameterError);
  EXPECT_THROW(GridFunction({0, 2, 1}, {1, 2, 3}), ParameterError);
  const GridFunction g({0, 1, 2}, {1, 0.5, 0.25});
  EXPECT_THROW(g(-1.0), ParameterError);
}

TEST(GridFunction, InterpolationAndTails) {
  const GridFunction g({0, 1, 2}, {1, 0.5, 0.25});
  EXPECT_DOUBLE_EQ(g(0.5), 0.75);
  EXPECT_EQ(g.tail(), TailRule::exponential);
  EXPECT_NEAR(g.tail_rate(), std::log(2.0), 1e-15);
  EXPECT_NEAR(g(4.0), 0.0625, 1e-15);
  const GridFunction z({0, 1, 2}, {1, 0.5, 0.25}, TailRule::zero);
  EXPECT_EQ(z(3.0), 0.0);
  const GridFunction rising({0, 1, 2}, {0.1, 0.2, 0.3});
  EXPECT_EQ(rising.tail(), TailRule::zero);  // no decay: falls back
}

TEST(GridFunction, IntegrateIsExactForPolynomials) {
  const GridFunction g({0, 1, 3}, {0, 1, 3}, TailRule::zero);  // g(u) = u on [0, 3]
  EXPECT_NEAR(g.integrate([](double u) { return u; }, 0.0, 3.0), 9.0, 1e-13);
  EXPECT_NEAR(g.integrate([](double) { return 1.0; }, 0.5, 2.0), 1.875, 1e-14);
  const GridFunction e({0, 1, 2}, {1, std::exp(-1.0), std::exp(-2.0)});
  EXPECT_NEAR(e.integrate([](double) { return 1.0; }, 2.0, HUGE_VAL), std::exp(-2.0), 1e-12);
}

TEST(GridSolver, IndependentConvergesAtSecondOrder) {
  const auto exact = psi_independent_no_dividends(sec6());
  const auto coarse = solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(60, 300));
  const auto fine = solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(60, 600));
  const double e1 = max_error_on(coarse, exact, 20), e2 = max_error_on(fine, exact, 20);
  EXPECT_LE(e2, 1e-3);
  EXPECT_GT(e1 / e2, 3.0);
  EXPECT_LT(e1 / e2, 5.0);
  EXPECT_EQ(fine.quadrature, Quadrature::gauss);
  EXPECT_GT(fine.reciprocal_condition, 0.0);
  EXPECT_TRUE(fine.warnings.empty());
}

TEST(GridSolver, ClaimDependentMatchesClosedForm) {
  const auto exact = psi_theta_no_dividends(sec6(0.5));
  const auto g = solve_gs_no_dividends(sec6(0.5), PenaltySpec::one(), 0.0, spec(60, 600));
  EXPECT_LE(max_error_on(g, exact, 20), 1e-3);
}

TEST(GridSolver, DeficitPenaltyIsMuTimesPsi) {
  const auto exact = psi_independent_no_dividends(sec6());
  const auto g = solve_gs_no_dividends(sec6(), PenaltySpec::deficit(), 0.0, spec(60, 600));
  EXPECT_LE(max_error_on(g, [&](double x) { return 3.0 * exact(x); }, 20), 3e-3);
}

TEST(GridSolver, DiscountingLowersTheFunction) {
  const auto m0 = solve_gs_no_dividends(sec6(0.5), PenaltySpec::one(), 0.0, spec(60, 300));
  const auto m1 = solve_gs_no_dividends(sec6(0.5), PenaltySpec::one(), 0.1, spec(60, 300));
  for (std::size_t i = 0; i < m1.values().size(); ++i) {
    EXPECT_LE(m1.values()[i], m0.values()[i] + 1e-12);
    if (i > 0) {
      EXPECT_LE(m1.values()[i], m1.values()[i - 1] + 1e-12);
    }
  }
}

TEST(GridSolver, TrapezoidNeedsAResolvedPremiumKernel) {
  // A premium mean of 0.2 against h = 0.1: the trapezoid weights overshoot the
  // kernel mass and the solution is far off. With a wide kernel it converges.
  const auto bad = solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(60, 600, Quadrature::trapezoid));
  EXPECT_GT(max_error_on(bad, psi_independent_no_dividends(sec6()), 20), 1e-2);
  const auto wide = exponential_model(1.0, 1.0, 1.0, 2.0);
  const auto exact = psi_independent_no_dividends(wide);
  const auto coarse = solve_gs_no_dividends(wide, PenaltySpec::one(), 0.0, spec(100, 1000, Quadrature::trapezoid));
  const auto ok = solve_gs_no_dividends(wide, PenaltySpec::one(), 0.0, spec(100, 2000, Quadrature::trapezoid));
  const double e1 = max_error_on(coarse, exact, 20), e2 = max_error_on(ok, exact, 20);
  EXPECT_LE(e2, 1e-3);
  EXPECT_GT(e1 / e2, 3.0);
  EXPECT_LT(e1 / e2, 5.0);
  EXPECT_EQ(ok.quadrature, Quadrature::trapezoid);
}

TEST(GridSolver, WarnsWhenDomainIsTooShort) {
  const auto g = solve_gs_no_dividends(exponential_model(1.0, 1.0, 1.0, 2.0), PenaltySpec::one(), 0.0, spec(10, 40));
  ASSERT_FALSE(g.warnings.empty());
  EXPECT_NE(g.warnings.front().find("x_max"), std::string::npos);
}

TEST(GridSolver, RejectsBadInput) {
  EXPECT_THROW(solve_gs_no_dividends(sec6(), PenaltySpec::one(), -0.1, spec(60, 100)), ParameterError);
  EXPECT_THROW(solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(60, 2)), ParameterError);
  EXPECT_THROW(solve_gs_no_dividends(sec6(), PenaltySpec::one(), 0.0, spec(0, 100)), ParameterError);
  EXPECT_THROW(solve_gs_no_dividends(exponential_model(1, 1, 1, 1), PenaltySpec::one(), 0.0, spec(60, 100)),
               ParameterError);
}
