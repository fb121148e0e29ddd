#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <fgmrisk/expsum.hpp>
#include <fgmrisk/linalg.hpp>

using namespace fgmrisk;

TEST(Cubic, Examples) {
  const auto a = solve_cubic_real(1, 0, -1, 0);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_NEAR(a[0], -1.0, 1e-14);
  EXPECT_NEAR(a[1], 0.0, 1e-14);
  EXPECT_NEAR(a[2], 1.0, 1e-14);
  const auto b = solve_cubic_real(1, -6, 11, -6);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_NEAR(b[0], 1.0, 1e-13);
  EXPECT_NEAR(b[1], 2.0, 1e-13);
  EXPECT_NEAR(b[2], 3.0, 1e-13);
}

TEST(Cubic, OneRealRoot) {
  int pairs = -1;
  const auto r = solve_cubic_real(1, 0, 1, -2, &pairs);  // (z - 1)(z^2 + z + 2)
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(pairs, 1);
  EXPECT_NEAR(r[0], 1.0, 1e-14);
}

TEST(Cubic, TripleRootAndDegenerateLeading) {
  const auto r = solve_cubic_real(2, -6, 6, -2);  // 2 (z - 1)^3
  for (double z : r) EXPECT_NEAR(z, 1.0, 1e-5);
  EXPECT_THROW(solve_cubic_real(0, 1, 1, 1), ParameterError);
}

TEST(Cubic, RandomRootsAreRecovered) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20), lc(0.01, 100);
  for (int k = 0; k < 2000; ++k) {
    const double r1 = u(rng), r2 = u(rng), r3 = u(rng), c = lc(rng);
    // c (z - r1)(z - r2)(z - r3)
    const double c2 = -c * (r1 + r2 + r3), c1 = c * (r1 * r2 + r1 * r3 + r2 * r3), c0 = -c * r1 * r2 * r3;
    const auto roots = solve_cubic_real(c, c2, c1, c0);
    for (double z : roots) EXPECT_LE(cubic_relative_residual(c, c2, c1, c0, z), 1e-10);
    if (std::min({std::abs(r1 - r2), std::abs(r1 - r3), std::abs(r2 - r3)}) > 0.5) {
      ASSERT_EQ(roots.size(), 3u);
      std::array<double, 3> want{r1, r2, r3};
      std::sort(want.begin(), want.end());
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(roots[i], want[i], 1e-9 * (1 + std::abs(want[i])));
    }
  }
}

TEST(Cubic, WidelySeparatedRoots) {
  // roots -19.4, -0.1, 0.05 scaled like the dividend cubic
  const double r1 = -19.405407, r2 = -0.107684, r3 = 0.0492;
  const double c = 0.06, c2 = -c * (r1 + r2 + r3), c1 = c * (r1 * r2 + r1 * r3 + r2 * r3), c0 = -c * r1 * r2 * r3;
  const auto roots = solve_cubic_real(c, c2, c1, c0);
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], r1, 1e-12);
  EXPECT_NEAR(roots[1], r2, 1e-12);
  EXPECT_NEAR(roots[2], r3, 1e-12);
}

TEST(LinearSystem, Examples) {
  const Matrix<3> id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const Vector<3> rhs{3, -1, 2};
  EXPECT_EQ(solve_linear_system(id, rhs).x, rhs);
  const auto s = solve_linear_system(Matrix<2>{{{2, 0}, {0, 4}}}, Vector<2>{2, 8});
  EXPECT_DOUBLE_EQ(s.x[0], 1.0);
  EXPECT_DOUBLE_EQ(s.x[1], 2.0);
  EXPECT_DOUBLE_EQ(s.determinant, 8.0);
  EXPECT_DOUBLE_EQ(s.condition, 2.0);
}

TEST(LinearSystem, SingularIsNumericalError) {
  EXPECT_THROW(solve_linear_system(Matrix<2>{{{1, 2}, {2, 4}}}, Vector<2>{1, 2}), NumericalError);
  EXPECT_THROW(solve_linear_system(Matrix<2>{{{0, 0}, {0, 0}}}, Vector<2>{1, 2}), NumericalError);
  EXPECT_THROW(solve_linear_system(Matrix<2>{{{1, 0}, {0, 1e-15}}}, Vector<2>{1, 2}), NumericalError);
}

TEST(LinearSystem, AgreesWithEigenOnRandom4x4) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 500; ++k) {
    Matrix<4> a;
    Vector<4> b;
    Eigen::Matrix4d ea;
    Eigen::Vector4d eb;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) ea(i, j) = a[i][j] = n01(rng);
      eb(i) = b[i] = n01(rng);
    }
    const auto s = solve_linear_system(a, b);
    const Eigen::Vector4d ex = ea.fullPivLu().solve(eb);
    const double cond = s.condition;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.x[i], ex(i), 1e-13 * cond * (1 + ex.norm()));
    EXPECT_NEAR(s.determinant, ea.determinant(), 1e-12 * std::max(1.0, std::abs(ea.determinant())));
    const auto r = residual(a, s.x, b);
    for (double v : r) EXPECT_LE(std::abs(v), 1e-12 * (1 + ex.norm()) * 4);
  }
}

TEST(ExpSum, EvaluationAndDerivatives) {
  const ExpSum f(0.0, {{2.0, -0.5}, {1.0, 0.25}, {3.0, 0.0}});
  for (double x : {0.0, 1.0, 7.5}) {
    EXPECT_NEAR(f(x), 2 * std::exp(-0.5 * x) + std::exp(0.25 * x) + 3, 1e-13);
    EXPECT_NEAR(f.derivative(x, 1), -std::exp(-0.5 * x) + 0.25 * std::exp(0.25 * x), 1e-13);
    EXPECT_NEAR(f.derivative(x, 3), -0.25 * std::exp(-0.5 * x) + std::pow(0.25, 3) * std::exp(0.25 * x), 1e-13);
    EXPECT_NEAR(f.derivative(2)(x), f.derivative(x, 2), 1e-14);
  }
  EXPECT_DOUBLE_EQ(f.value_at_anchor(), 6.0);
}

TEST(ExpSum, AnchoringKeepsTheFunction) {
  const ExpSum g(5.0, {{1.0, -19.4}, {-2.0, -0.1}, {10.0, 0.0}});
  const auto h = g.reanchored(0.0);
  for (double x : {5.0, 6.0, 20.0}) EXPECT_NEAR(h(x), g(x), 1e-12 * std::abs(g(x)));
  EXPECT_NEAR(g.global_coeff(0), std::exp(19.4 * 5.0), 1e-10 * std::exp(19.4 * 5.0));
  EXPECT_EQ(g.coeff_for_rate(-0.1), -2.0);
  EXPECT_EQ(g.coeff_for_rate(-0.2), 0.0);
}

TEST(ExpSum, ArithmeticMergesEqualRates) {
  const ExpSum a(0.0, {{1.0, -1.0}}), b(1.0, {{1.0, -1.0}, {2.0, 0.0}});
  const auto c = a + b;
  EXPECT_EQ(c.size(), 2u);
  for (double x : {0.0, 2.0}) EXPECT_NEAR(c(x), a(x) + b(x), 1e-14);
  const auto d = 3.0 * a - a;
  EXPECT_NEAR(d(1.3), 2 * a(1.3), 1e-15);
  EXPECT_THROW(ExpSum(0.0, {{NAN, 1.0}}), ParameterError);
  EXPECT_THROW((void)ExpSum(HUGE_VAL), ParameterError);
}

TEST(ExpSum, WeightedIntegralMatchesQuadrature) {
  const ExpSum f(2.0, {{1.5, -0.3}, {-0.5, 0.2}, {1.0, 0.0}});
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (double s : {-5.0, -0.2, 0.0, 0.3}) {
    const double lo = 0.5, hi = 7.0, ref = 1.0;
    const double exact = detail::weighted_integral(f, s, ref, lo, hi);
    const double quad = GK::integrate([&](double u) { return f(u) * std::exp(s * (u - ref)); }, lo, hi, 15, 1e-14);
    EXPECT_NEAR(exact, quad, 1e-12 * std::max(1.0, std::abs(quad)));
  }
  // infinite range needs decay of every product term
  const ExpSum g(0.0, {{1.0, -0.5}});
  EXPECT_NEAR(detail::weighted_integral(g, -1.0, 0.0, 0.0, HUGE_VAL), 1.0 / 1.5, 1e-15);
}

TEST(ExpSum, IntegrateExpNearZeroRate) {
  EXPECT_NEAR(detail::integrate_exp(1e-14, 0.0, 2.0), 2.0, 1e-12);
  EXPECT_NEAR(detail::integrate_exp(-1.0, 0.0, HUGE_VAL), 1.0, 1e-15);
  EXPECT_NEAR(detail::integrate_exp(0.5, 1.0, 3.0), (std::exp(1.5) - std::exp(0.5)) / 0.5, 1e-13);
}
