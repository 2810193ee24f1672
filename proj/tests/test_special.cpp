#include <cmath>
#include <complex>

#include <gtest/gtest.h>
#include <boost/math/special_functions/gamma.hpp>

#include "xqoe/special.hpp"

using namespace xqoe;

TEST(LogGamma, MatchesRealLgammaOnPositiveAxis) {
  for (double x : {0.1, 0.5, 1.0, 2.5, 7.0, 11.0, 30.0, 170.5}) {
    EXPECT_NEAR(log_gamma(cplx(x, 0.0)).real(), std::lgamma(x), 1e-12 * std::max(1.0, std::abs(std::lgamma(x))));
  }
}

TEST(LogGamma, NegativeNonIntegerMagnitude) {
  for (double x : {-0.5, -2.3, -7.7}) {
    EXPECT_NEAR(log_gamma(cplx(x, 0.0)).real(), std::lgamma(x), 1e-11);
  }
}

TEST(LogGamma, RecurrenceAndReflectionOffAxis) {
  // Gamma(z+1) = z Gamma(z)
  for (cplx z : {cplx(0.3, 2.0), cplx(-3.2, 5.5), cplx(4.0, -30.0), cplx(12.5, 0.7)}) {
    const cplx lhs = std::exp(log_gamma(z + 1.0) - log_gamma(z));
    EXPECT_NEAR(std::abs(lhs - z) / std::abs(z), 0.0, 1e-12);
  }
  // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
  for (double y : {0.5, 3.0, 20.0}) {
    const double lhs = 2.0 * log_gamma(cplx(0.5, y)).real();
    EXPECT_NEAR(lhs, std::log(M_PI / std::cosh(M_PI * y)), 1e-11 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(MeijerG, ExponentialIdentity) {
  // G^{1,0}_{0,1}(z | -; 0) = exp(-z)
  MeijerGSpec g;
  g.b = {0.0};
  g.m = 1;
  for (double z : {0.01, 0.5, 2.0, 10.0}) {
    const auto r = meijer_g(g, z);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value / std::exp(-z), 1.0, 1e-8) << z;
  }
}

TEST(MeijerG, PowerIdentity) {
  // G^{1,1}_{1,1}(z | 1-a; 0) = Gamma(a) (1+z)^{-a}
  for (double a : {0.5, 3.0, 18.0}) {
    MeijerGSpec g;
    g.a = {1.0 - a};
    g.b = {0.0};
    g.m = 1;
    g.n = 1;
    for (double z : {0.05, 1.0, 40.0}) {
      const auto r = meijer_g(g, z, -std::lgamma(a));
      EXPECT_NEAR(r.value / std::pow(1.0 + z, -a), 1.0, 1e-8) << a << " " << z;
    }
  }
}

TEST(MeijerG, LogIdentity) {
  // G^{1,2}_{2,2}(z | 1, 1; 1, 0) = ln(1+z)
  MeijerGSpec g;
  g.a = {1.0, 1.0};
  g.b = {1.0, 0.0};
  g.m = 1;
  g.n = 2;
  for (double z : {1e-3, 0.3, 1.0, 25.0, 1e4}) {
    const auto r = meijer_g(g, z);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value / std::log1p(z), 1.0, 1e-8) << z;
  }
}

TEST(MeijerG, UpperIncompleteGammaIdentity) {
  // G^{2,0}_{1,2}(z | 1; 0, s) = Gamma(s, z)
  for (double s : {0.5, 1.0, 2.5}) {
    MeijerGSpec g;
    g.a = {1.0};
    g.b = {0.0, s};
    g.m = 2;
    g.n = 0;
    for (double z : {0.1, 1.0, 5.0}) {
      const auto r = meijer_g(g, z);
      const double expected = boost::math::tgamma(s, z);
      EXPECT_NEAR(r.value / expected, 1.0, 1e-8) << s << " " << z;
    }
  }
}

TEST(MeijerG, ExplicitAbscissaAgreesWithAutomaticChoice) {
  MeijerGSpec g;
  g.a = {1.0, 1.0};
  g.b = {1.0, 0.0};
  g.m = 1;
  g.n = 2;
  const double automatic = meijer_g(g, 3.0).value;
  g.abscissa = 0.5;
  const auto fixed = meijer_g(g, 3.0);
  EXPECT_DOUBLE_EQ(fixed.abscissa, 0.5);
  EXPECT_NEAR(fixed.value / automatic, 1.0, 1e-9);
}

TEST(MeijerG, RejectsAbscissaOutsideStrip) {
  MeijerGSpec g;
  g.a = {1.0, 1.0};
  g.b = {1.0, 0.0};
  g.m = 1;
  g.n = 2;
  g.abscissa = 1.5;
  EXPECT_THROW(meijer_g(g, 1.0), ConfigError);
  g.abscissa.reset();
  EXPECT_THROW(meijer_g(g, -1.0), ConfigError);
}

TEST(MeijerG, LogMagnitudeSurvivesUnderflow) {
  // exp(-800) underflows a double but its logarithm is still exact.
  MeijerGSpec g;
  g.b = {0.0};
  g.m = 1;
  const auto r = meijer_g(g, 800.0);
  EXPECT_EQ(r.sign, 1);
  EXPECT_NEAR(r.log_magnitude, -800.0, 1e-6);
}
