#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <fgmrisk/copula.hpp>
#include <fgmrisk/rng.hpp>

using namespace fgmrisk;

TEST(FgmParam, RejectsOutsideUnitInterval) {
  EXPECT_NO_THROW(FgmParam(-1.0));
  EXPECT_NO_THROW(FgmParam(1.0));
  for (double bad : {1.5, -1.0000001, static_cast<double>(NAN)}) {
    try {
      FgmParam p(bad);
      FAIL() << "accepted " << bad;
    } catch (const ParameterError& e) {
      EXPECT_EQ(e.field(), "theta");
    }
  }
}

TEST(FgmCdf, Examples) {
  EXPECT_DOUBLE_EQ(fgm_cdf(0.5, 0.5, FgmParam(0.0)), 0.25);
  EXPECT_DOUBLE_EQ(fgm_cdf(1.0, 0.7, FgmParam(0.9)), 0.7);
  EXPECT_DOUBLE_EQ(fgm_cdf(0.5, 0.5, FgmParam(1.0)), 0.3125);
  EXPECT_THROW(fgm_cdf(1.2, 0.5, FgmParam(0.0)), ParameterError);
  EXPECT_THROW(fgm_cdf(0.5, -0.1, FgmParam(0.0)), ParameterError);
}

TEST(FgmDensity, Examples) {
  for (double u2 : {0.0, 0.3, 1.0})
    for (double th : {-1.0, 0.4, 1.0}) EXPECT_DOUBLE_EQ(fgm_density(0.5, u2, FgmParam(th)), 1.0);
  EXPECT_DOUBLE_EQ(fgm_density(0.0, 0.0, FgmParam(1.0)), 2.0);
  EXPECT_DOUBLE_EQ(fgm_density(0.0, 1.0, FgmParam(1.0)), 0.0);
  EXPECT_THROW(fgm_density(0.5, 2.0, FgmParam(0.0)), ParameterError);
}

TEST(FgmDensity, NonNegativeAndIntegratesToOne) {
  using GL = boost::math::quadrature::gauss<double, 10>;
  for (double th : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (int i = 0; i <= 20; ++i) {
      const double u1 = i / 20.0;
      for (int j = 0; j <= 20; ++j) EXPECT_GE(fgm_density(u1, j / 20.0, FgmParam(th)), 0.0);
      const double mass = GL::integrate([&](double u2) { return fgm_density(u1, u2, FgmParam(th)); }, 0.0, 1.0);
      EXPECT_NEAR(mass, 1.0, 1e-10) << "u1=" << u1 << " theta=" << th;
    }
  }
}

TEST(FgmDensity, MatchesMixedPartialOfCdf) {
  const FgmParam th(0.7);
  const double h = 1e-4;
  for (double u1 : {0.2, 0.5, 0.9})
    for (double u2 : {0.1, 0.6}) {
      const double d2 = (fgm_cdf(u1 + h, u2 + h, th) - fgm_cdf(u1 + h, u2 - h, th) - fgm_cdf(u1 - h, u2 + h, th) +
                         fgm_cdf(u1 - h, u2 - h, th)) /
                        (4 * h * h);
      EXPECT_NEAR(d2, fgm_density(u1, u2, th), 1e-6);
    }
}

TEST(ConditionalQuantile, Examples) {
  for (double u1 : {0.0, 0.3, 1.0})
    for (double v : {0.0, 0.25, 1.0}) EXPECT_DOUBLE_EQ(conditional_quantile(u1, v, FgmParam(0.0)), v);
  EXPECT_DOUBLE_EQ(conditional_quantile(0.5, 0.3, FgmParam(0.8)), 0.3);
  EXPECT_NEAR(conditional_quantile(0.0, 0.5, FgmParam(1.0)), 1.0 - std::sqrt(0.5), 1e-15);
  EXPECT_THROW(conditional_quantile(0.5, 1.5, FgmParam(0.8)), ParameterError);
}

TEST(ConditionalQuantile, RoundTripOnGrid) {
  double worst = 0.0;
  for (double th : {-1.0, -0.5, 0.0, 0.5, 1.0})
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        const double u1 = i / 49.0, v = j / 49.0;
        const double u2 = conditional_quantile(u1, v, FgmParam(th));
        EXPECT_GE(u2, 0.0);
        EXPECT_LE(u2, 1.0);
        worst = std::max(worst, std::abs(conditional_cdf(u1, u2, FgmParam(th)) - v));
      }
  EXPECT_LT(worst, 1e-12);
}

TEST(ConditionalQuantile, NearIndependenceFallbackIsContinuous) {
  // a = theta (1 - 2 u1) crosses the 1e-12 fallback threshold here
  const double u1 = 0.5 - 1e-12;
  for (double v : {0.1, 0.5, 0.9}) {
    const double q = conditional_quantile(u1, v, FgmParam(1.0));
    EXPECT_NEAR(q, v, 1e-11);
    EXPECT_NEAR(conditional_cdf(u1, q, FgmParam(1.0)), v, 1e-12);
  }
}

TEST(ConditionalQuantile, MonotoneInV) {
  for (double th : {-1.0, 1.0})
    for (double u1 : {0.0, 0.2, 0.8, 1.0}) {
      double prev = -1.0;
      for (int j = 0; j <= 200; ++j) {
        const double q = conditional_quantile(u1, j / 200.0, FgmParam(th));
        EXPECT_GE(q, prev);
        prev = q;
      }
    }
}

TEST(ExponentialMarginal, Basics) {
  const ExponentialMarginal m(3.0);
  EXPECT_DOUBLE_EQ(m.mean(), 3.0);
  for (double u : {0.0, 0.1, 0.5, 0.99}) EXPECT_NEAR(m.cdf(m.quantile(u)), u, 1e-14);
  EXPECT_DOUBLE_EQ(m.density(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(m.survival(0.0), 1.0);
  for (double y : {0.0, 0.7, 4.0, 12.0}) {
    EXPECT_NEAR(m.kernel(y), m.density(y) * (1 - 2 * m.cdf(y)), 1e-16);
    EXPECT_NEAR(m.density_expsum()(y), m.density(y), 1e-16);
    EXPECT_NEAR(m.kernel_expsum()(y), m.kernel(y), 1e-16);
  }
  EXPECT_THROW(ExponentialMarginal(0.0, "mu"), ParameterError);
}

TEST(ExponentialMarginal, KernelIntegratesToZero) {
  // h = f (1 - 2F) = -(d/dy) F (1 - F), so its integral over [0, inf) vanishes.
  const ExponentialMarginal m(0.2);
  const double h = 1e-3;
  double acc = 0.0;
  for (int i = 0; i < 40000; ++i) {
    const double a = i * h;
    acc += boost::math::quadrature::gauss<double, 7>::integrate([&](double y) { return m.kernel(y); }, a, a + h);
  }
  EXPECT_NEAR(acc, 0.0, 1e-12);
}

namespace {

struct Sample {
  std::vector<double> t, y;
};

Sample draw(double rate, double mean, double theta, std::size_t n, std::uint64_t seed) {
  Rng rng(mix64(seed));
  const ExponentialMarginal m(mean);
  Sample s;
  s.t.reserve(n);
  s.y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = sample_dependent_pair(rate, m, FgmParam(theta), rng);
    s.t.push_back(p.time);
    s.y.push_back(p.amount);
  }
  return s;
}

// O(n^2) tau-b, independent of the merge-sort implementation.
double naive_kendall(const std::vector<double>& x, const std::vector<double>& y) {
  double conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double a = x[i] - x[j], b = y[i] - y[j];
      if (a == 0 && b == 0) continue;
      if (a == 0) {
        ++tx;
        continue;
      }
      if (b == 0) {
        ++ty;
        continue;
      }
      (a * b > 0 ? conc : disc) += 1;
    }
  return (conc - disc) / std::sqrt((conc + disc + tx) * (conc + disc + ty));
}

}  // namespace

TEST(RankCorrelation, KnownValues) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{10, 20, 30, 40, 50}, c{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman_rho(a, b), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(a, c), -1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(a, b), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(a, c), -1.0);
}

TEST(RankCorrelation, KendallMatchesQuadraticCountWithTies) {
  Rng rng(7);
  std::vector<double> x(400), y(400);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::floor(uniform01(rng) * 20);
    y[i] = std::floor((x[i] + 10 * uniform01(rng)) / 3);
  }
  EXPECT_NEAR(kendall_tau(x, y), naive_kendall(x, y), 1e-12);
}

TEST(RankCorrelation, SpearmanUsesAverageRanks) {
  // ranks of x: 1, 2.5, 2.5, 4; Pearson of (ranks x, ranks y) by hand is 0.9486833
  const std::vector<double> x{1, 2, 2, 3}, y{1, 2, 3, 4};
  EXPECT_NEAR(spearman_rho(x, y), 0.9486832980505138, 1e-12);
}

class SamplerTheta : public ::testing::TestWithParam<double> {};

TEST_P(SamplerTheta, RankCorrelationsMatchTheory) {
  const double th = GetParam();
  const auto s = draw(0.1, 3.0, th, 100'000, 42);
  EXPECT_NEAR(spearman_rho(s.t, s.y), th / 3.0, 0.015);
  EXPECT_NEAR(kendall_tau(s.t, s.y), 2.0 * th / 9.0, 0.015);
}

TEST_P(SamplerTheta, MarginalsArePreserved) {
  const double th = GetParam();
  const auto s = draw(2.3, 0.2, th, 100'000, 43);
  for (const auto* v : {&s.t, &s.y}) {
    const double target = v == &s.t ? 1.0 / 2.3 : 0.2;
    double mean = 0, m2 = 0;
    for (double x : *v) mean += x;
    mean /= v->size();
    for (double x : *v) m2 += (x - mean) * (x - mean);
    const double se = std::sqrt(m2 / (v->size() - 1) / v->size());
    EXPECT_NEAR(mean, target, 3 * se);
  }
}

TEST_P(SamplerTheta, CovarianceMatchesClosedForm) {
  // For exponential margins Cov(T, Y) = theta mu / (4 lambda).
  const double th = GetParam(), rate = 0.5, mu = 2.0;
  const auto s = draw(rate, mu, th, 100'000, 44);
  const std::size_t n = s.t.size();
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += s.t[i];
    my += s.y[i];
  }
  mt /= n;
  my /= n;
  std::vector<double> prod(n);
  double mp = 0;
  for (std::size_t i = 0; i < n; ++i) mp += (prod[i] = (s.t[i] - mt) * (s.y[i] - my));
  mp /= n;
  double var = 0;
  for (double p : prod) var += (p - mp) * (p - mp);
  const double se = std::sqrt(var / (n - 1) / n);
  EXPECT_NEAR(mp, th * mu / (4 * rate), 4 * se);
}

INSTANTIATE_TEST_SUITE_P(Grid, SamplerTheta, ::testing::Values(-1.0, -0.5, 0.0, 0.5, 1.0));

TEST(Sampler, ConditionalSizeUsesTimeRank) {
  // Given the time rank u1, the size is drawn from the copula conditional;
  // for u1 = 0 and theta = 1 the conditional mean is mu (1 - 1/2) = mu / 2.
  Rng rng(11);
  const ExponentialMarginal m(2.0);
  double acc = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) acc += sample_conditional_size(0.0, m, FgmParam(1.0), rng);
  EXPECT_NEAR(acc / n, 1.0, 0.015);
}

TEST(Sampler, DeterministicGivenStream) {
  const auto a = draw(1.0, 1.0, 0.3, 1000, 5), b = draw(1.0, 1.0, 0.3, 1000, 5);
  EXPECT_EQ(a.t, b.t);
  EXPECT_EQ(a.y, b.y);
}
