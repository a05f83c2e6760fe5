#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "levyma/quadrature.hpp"
#include "levyma/rng.hpp"
#include "levyma/stats.hpp"

using namespace levyma;

namespace {

std::vector<double> stable_draws(std::uint64_t seed, double beta, double scale, std::size_t count) {
  RngStream s(seed, 0);
  std::vector<double> v(count);
  for (auto& x : v) x = sample_symmetric_stable(s, beta, scale);
  return v;
}

// Two-sample KS statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(RngStream, NeighbouringStreamsUncorrelated) {
  // Pearson correlation of uniforms from adjacent stream indices.
  RngStream a(1, 0), b(1, 1);
  const int N = 100000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < N; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sx += x, sy += y, sxy += x * y, sxx += x * x, syy += y * y;
  }
  const double cov = sxy / N - sx / N * sy / N;
  const double corr = cov / std::sqrt((sxx / N - sx * sx / N / N) * (syy / N - sy * sy / N / N));
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(double(N)));
}

TEST(RngStream, UniformOpenInterval) {
  RngStream s(3, 3);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, PoissonMeanAndVariance) {
  for (double mean : {0.3, 4.0, 37.5, 1200.0}) {
    RngStream s(9, std::uint64_t(mean * 10));
    const int N = 100000;
    double m = 0, m2 = 0;
    for (int i = 0; i < N; ++i) {
      const double k = double(s.poisson(mean));
      m += k;
      m2 += k * k;
    }
    m /= N;
    const double var = m2 / N - m * m;
    EXPECT_NEAR(m, mean, 5.0 * std::sqrt(mean / N)) << mean;
    EXPECT_NEAR(var / mean, 1.0, 0.03) << mean;
  }
}

TEST(StableSampler, ZeroScaleIsZero) {
  RngStream s(1, 1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_symmetric_stable(s, 1.5, 0.0), 0.0);
}

TEST(StableSampler, RejectsBadParameters) {
  RngStream s(1, 1);
  EXPECT_THROW(sample_symmetric_stable(s, 0.0, 1.0), ParameterError);
  EXPECT_THROW(sample_symmetric_stable(s, 2.1, 1.0), ParameterError);
  EXPECT_THROW(sample_symmetric_stable(s, 1.5, -1.0), ParameterError);
}

TEST(StableSampler, CauchyMatchesAnalyticCdf) {
  auto v = stable_draws(2024, 1.0, 1.0, 100000);
  std::sort(v.begin(), v.end());
  const double d = kolmogorov_distance(v, [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; });
  EXPECT_LT(d, 0.01);
}

TEST(StableSampler, HillEstimatorRecoversTailIndex) {
  auto v = stable_draws(77, 1.8, 1.0, 100000);
  for (auto& x : v) x = std::abs(x);
  std::sort(v.begin(), v.end(), std::greater<>());
  const std::size_t k = v.size() / 100;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(v[i] / v[k]);
  const double hill = double(k) / acc;
  EXPECT_GE(hill, 1.5);
  EXPECT_LE(hill, 2.1);
}

TEST(StableSampler, BetaTwoIsGaussianWithVarianceTwo) {
  auto v = stable_draws(5, 2.0, 1.0, 100000);
  std::sort(v.begin(), v.end());
  const double d = kolmogorov_distance(v, [](double x) { return normal_cdf(x / std::numbers::sqrt2); });
  EXPECT_LT(d, 1.95 / std::sqrt(double(v.size())));
}

TEST(StableSampler, ScalingIsExactIdentity) {
  for (double beta : {0.7, 1.0, 1.5, 1.9}) {
    const auto unit = stable_draws(11, beta, 1.0, 2000);
    const auto scaled = stable_draws(11, beta, 3.25, 2000);
    for (std::size_t i = 0; i < unit.size(); ++i) ASSERT_EQ(scaled[i], 3.25 * unit[i]) << beta;
  }
}

TEST(StableSampler, SymmetricLaw) {
  for (double beta : {0.8, 1.0, 1.5}) {
    RngStream s(13, 0), t(13, 1);
    std::vector<double> a(100000), b(100000);
    for (auto& x : a) x = sample_symmetric_stable(s, beta, 1.0);
    for (auto& x : b) x = -sample_symmetric_stable(t, beta, 1.0);
    // Two-sample critical value at level 0.001 is about 1.95 sqrt(2/N).
    EXPECT_LT(ks_two_sample(a, b), 2.0 * 1.95 * std::sqrt(2.0 / 100000.0)) << beta;
  }
}

TEST(TemperedStable, ValidatesParameters) {
  EXPECT_THROW(validate(LevyModel{TemperedStable{2.0, 5.0, 1e-3}}), ParameterError);
  EXPECT_THROW(validate(LevyModel{TemperedStable{0.5, 0.0, 1e-3}}), ParameterError);
  EXPECT_THROW(validate(LevyModel{TemperedStable{0.5, 5.0, 0.0}}), ParameterError);
  EXPECT_NO_THROW(validate(LevyModel{TemperedStable{}}));
  EXPECT_THROW(validate(LevyModel{SymmetricStable{2.0, 1.0}}), ParameterError);
}

TEST(TemperedStable, DensityDominatedByCubicTail) {
  const TemperedStable m{};
  for (double x = 0.01; x < 1.0; x += 0.01) EXPECT_LE(tempered_density(m, x), std::pow(x, -1.0 - m.zeta));
  for (double x = 1.0; x < 1e3; x *= 1.1) EXPECT_LE(tempered_density(m, x), std::pow(x, -3.0));
}

TEST(TemperedStable, WrongVariantRejected) {
  RngStream s(1, 1);
  EXPECT_THROW(sample_tempered_stable_increment(s, SymmetricStable{1.5, 1.0}, 1.0), WrongVariantError);
}

TEST(TemperedStable, EmptyIntervalGivesZero) {
  RngStream s(1, 1);
  EXPECT_EQ(sample_tempered_stable_increment(s, TemperedStable{}, 0.0), 0.0);
}

TEST(TemperedStable, MeanZeroAndVarianceMatchesQuadrature) {
  const TemperedStable m{};
  const TemperedStableSampler sampler{LevyModel{m}};
  RngStream s(99, 0);
  const int N = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = sampler.increment(s, 1.0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / N;
  const double var = sum2 / N - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(var / N));
  // 2 int_0^inf x^2 kappa(x) dx, computed independently: x^{1-zeta} e^{-cx}.
  const double oracle = 2.0 * quad::integrate_left_singular(
                                  [&](double x) { return x * x * tempered_density(m, x); }, 0.0, 1.0, 1.0 - m.zeta)
                                  .value +
                        2.0 * quad::integrate_tail([&](double x) { return x * x * tempered_density(m, x); }, 1.0).value;
  EXPECT_NEAR(var / oracle, 1.0, 0.05);
  EXPECT_NEAR(sampler.total_variance() / oracle, 1.0, 1e-6);
}

TEST(TemperedStable, SymmetricLaw) {
  const TemperedStableSampler sampler{LevyModel{TemperedStable{}}};
  RngStream s(21, 0), t(21, 1);
  std::vector<double> a(100000), b(100000);
  for (auto& x : a) x = sampler.increment(s, 0.5);
  for (auto& x : b) x = -sampler.increment(t, 0.5);
  EXPECT_LT(ks_two_sample(a, b), 2.0 * 1.95 * std::sqrt(2.0 / 100000.0));
}
