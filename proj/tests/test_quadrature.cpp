#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "levyma/distributions.hpp"
#include "levyma/quadrature.hpp"
#include "levyma/rational.hpp"

using namespace levyma;

TEST(Quadrature, Polynomial) {
  const auto r = quad::integrate([](double x) { return x * x * x - 2.0 * x; }, -1.0, 3.0);
  EXPECT_NEAR(r.value, 80.0 / 4.0 - 8.0, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(Quadrature, OscillatoryNeedsSubdivision) {
  const auto r = quad::integrate([](double x) { return std::sin(50.0 * x); }, 0.0, std::numbers::pi / 2.0);
  EXPECT_NEAR(r.value, (1.0 - std::cos(25.0 * std::numbers::pi)) / 50.0, 1e-10);
}

TEST(Quadrature, LeftSingularEndpoint) {
  // int_0^1 x^{-0.7} dx = 1/0.3
  const auto r = quad::integrate_left_singular([](double x) { return std::pow(x, -0.7); }, 0.0, 1.0, -0.7);
  EXPECT_NEAR(r.value, 1.0 / 0.3, 1e-9);
}

TEST(Quadrature, TailMap) {
  const auto r = quad::integrate_tail([](double x) { return std::pow(x, -2.25); }, 1.0);
  EXPECT_NEAR(r.value, 1.0 / 1.25, 1e-8);
  const auto p = quad::integrate_tail([](double x) { return std::pow(x, -2.25); }, 1.0, {}, 2.25);
  EXPECT_NEAR(p.value, 1.0 / 1.25, 1e-14);
  const auto e = quad::integrate_tail([](double x) { return std::exp(-x); }, 2.0);
  EXPECT_NEAR(e.value, std::exp(-2.0), 1e-12);
}

TEST(Quadrature, BudgetExhaustionReportsFailure) {
  const auto r = quad::integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, {1e-14, 0.0, 150});
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(quad::value_or_throw(r, "t"), AccuracyError);
  try {
    quad::value_or_throw(r, "t");
  } catch (const AccuracyError& e) {
    EXPECT_EQ(e.estimate(), r.value);
    EXPECT_EQ(e.error_bound(), r.abs_error);
  }
}

TEST(Quadrature, GaussLegendreExactForDegree2nMinus1) {
  std::vector<double> x, w;
  quad::gauss_legendre_unit(6, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 11);
  EXPECT_NEAR(s, 1.0 / 12.0, 1e-14);
}

TEST(Distributions, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 0.001, 0.3, 0.5, 0.9, 1.0 - 1e-9}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 * std::max(1.0, p / 1e-3));
  EXPECT_THROW(normal_quantile(0.0), ParameterError);
}

TEST(Distributions, StableCdfSpecialCases) {
  const SymmetricStableLaw cauchy(1.0, 2.0);
  for (double x : {-30.0, -1.0, 0.0, 0.5, 7.0}) EXPECT_NEAR(cauchy.cdf(x), 0.5 + std::atan(x / 2.0) / std::numbers::pi, 1e-13);
  const SymmetricStableLaw gauss(2.0, 1.0);
  for (double x : {-3.0, 0.2, 1.7}) EXPECT_NEAR(gauss.cdf(x), normal_cdf(x / std::numbers::sqrt2), 1e-13);
}

TEST(Distributions, StableCdfAgreesWithFourierInversion) {
  for (double beta : {0.6, 1.3, 1.5, 1.8}) {
    const SymmetricStableLaw law(beta, 1.0);
    for (double x : {-12.0, -2.5, -0.3, 0.0, 0.1, 1.0, 4.0, 40.0})
      EXPECT_NEAR(law.cdf(x), stable_cdf_fourier(x, beta, 1.0), 1e-8) << beta << " " << x;
  }
}

TEST(Distributions, StablePdfIntegratesToCdf) {
  const SymmetricStableLaw law(1.5, 0.7);
  const auto r = quad::integrate([&](double x) { return law.pdf(x); }, -0.5, 2.0, {1e-11, 0.0, 100000});
  EXPECT_NEAR(r.value, law.cdf(2.0) - law.cdf(-0.5), 1e-9);
}

TEST(Distributions, StableQuantileInvertsCdf) {
  const SymmetricStableLaw law(1.2, 1.3);
  for (double p : {0.01, 0.25, 0.5, 0.8, 0.999}) EXPECT_NEAR(law.cdf(law.quantile(p)), p, 1e-10);
}

TEST(Rational, ArithmeticAndOrdering) {
  const Rational a(1, 3), b(-1, 6);
  EXPECT_EQ(a + b, Rational(1, 6));
  EXPECT_EQ(a * b, Rational(-1, 18));
  EXPECT_EQ(a / b, Rational(-2));
  EXPECT_TRUE(b < a);
  EXPECT_EQ(Rational(4, -8).str(), "-1/2");
  EXPECT_THROW(a / Rational(0), ParameterError);
}

TEST(Rational, Parsing) {
  EXPECT_EQ(Rational::parse("3/4"), Rational(3, 4));
  EXPECT_EQ(Rational::parse("-1.25"), Rational(-5, 4));
  EXPECT_EQ(Rational::parse("-0.5"), Rational(-1, 2));
  EXPECT_EQ(Rational::parse("7"), Rational(7));
  EXPECT_EQ(Rational::from_double(0.2), Rational(1, 5));
  EXPECT_EQ(Rational::from_double(-2.0 / 3.0), Rational(-2, 3));
  EXPECT_THROW(Rational::parse("x"), ParameterError);
}
