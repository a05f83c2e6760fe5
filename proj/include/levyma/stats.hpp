#pragma once

// The statistic V_n, long-run variance estimation, and empirical distances
// of a sample to a reference law.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "levyma/distributions.hpp"
#include "levyma/errors.hpp"
#include "levyma/parallel.hpp"
#include "levyma/rng.hpp"
#include "levyma/simulate.hpp"

namespace levyma {

struct Cos {
  double theta = 1.0;
};
struct Sin {
  double theta = 1.0;
};
/// 1_{(-inf, t]} convolved with the triweight bump of half-width h.
struct SmoothedIndicator {
  double t = 0.0;
  double h = 0.1;
};
struct GaussBump {
  double center = 0.0;
  double width = 1.0;
};

struct Analytic {};
struct QuadratureVsStableDensity {};
struct MonteCarloMean {
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
};
using MeanMode = std::variant<Analytic, QuadratureVsStableDensity, MonteCarloMean>;

/// A C^2_b test function with its sup-norm bounds.
class TestFunction {
 public:
  using Shape = std::variant<Cos, Sin, SmoothedIndicator, GaussBump>;

  TestFunction(Shape shape, MeanMode mode = Analytic{}) : shape_(shape), mode_(mode) {
    if (const auto* s = std::get_if<SmoothedIndicator>(&shape_); s && !(s->h > 0.0))
      throw ParameterError("SmoothedIndicator: bandwidth h must be > 0");
    if (const auto* g = std::get_if<GaussBump>(&shape_); g && !(g->width > 0.0))
      throw ParameterError("GaussBump: width must be > 0");
    std::visit(detail::overloaded{[this](const Cos& c) { set_bounds(1.0, std::abs(c.theta), c.theta * c.theta); },
                                  [this](const Sin& c) { set_bounds(1.0, std::abs(c.theta), c.theta * c.theta); },
                                  [this](const SmoothedIndicator& c) {
                                    // sup k = 35/32, sup |k'| = (105/16) u (1-u^2)^2 at u = 5^{-1/2}
                                    set_bounds(1.0, 35.0 / (32.0 * c.h),
                                               105.0 / 16.0 * 16.0 / (25.0 * std::sqrt(5.0)) / (c.h * c.h));
                                  },
                                  [this](const GaussBump& c) {
                                    set_bounds(1.0, 1.0 / (c.width * std::sqrt(std::numbers::e)),
                                               1.0 / (c.width * c.width));
                                  }},
               shape_);
  }

  const Shape& shape() const noexcept { return shape_; }
  const MeanMode& mean_mode() const noexcept { return mode_; }
  double sup_f() const noexcept { return sup_[0]; }
  double sup_df() const noexcept { return sup_[1]; }
  double sup_d2f() const noexcept { return sup_[2]; }

  double operator()(double x) const {
    return std::visit(detail::overloaded{[x](const Cos& c) { return std::cos(c.theta * x); },
                                         [x](const Sin& c) { return std::sin(c.theta * x); },
                                         [x](const SmoothedIndicator& c) { return 1.0 - triweight_cdf((x - c.t) / c.h); },
                                         [x](const GaussBump& c) {
                                           const double z = (x - c.center) / c.width;
                                           return std::exp(-0.5 * z * z);
                                         }},
                      shape_);
  }

  static double triweight_cdf(double v) {
    if (v <= -1.0) return 0.0;
    if (v >= 1.0) return 1.0;
    const double v2 = v * v;
    return 0.5 + 35.0 / 32.0 * v * (1.0 - v2 + 0.6 * v2 * v2 - v2 * v2 * v2 / 7.0);
  }

 private:
  void set_bounds(double a, double b, double c) { sup_[0] = a, sup_[1] = b, sup_[2] = c; }
  Shape shape_;
  MeanMode mode_;
  double sup_[3] = {0, 0, 0};
};

/// E[f(X_1)] for symmetric stable noise, where X_1 ~ S(beta, sigma_g).
inline double expected_f(const ProcessModel& model, const TestFunction& f) {
  const auto* st = std::get_if<SymmetricStable>(&model.levy);
  if (st == nullptr) throw WrongVariantError("expected_f: needs SymmetricStable noise");
  const double beta = st->beta;
  const double sigma = marginal_scale(model);
  if (sigma == 0.0) return f(0.0);
  return std::visit(
      detail::overloaded{
          [&](const Analytic&) -> double {
            if (const auto* c = std::get_if<Cos>(&f.shape())) return std::exp(-std::pow(sigma * std::abs(c->theta), beta));
            if (std::holds_alternative<Sin>(f.shape())) return 0.0;
            throw ParameterError("expected_f: Analytic mode supports only Cos and Sin");
          },
          [&](const MonteCarloMean& mc) -> double {
            if (mc.draws == 0) throw ParameterError("expected_f: MonteCarlo needs draws > 0");
            RngStream s(mc.seed, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < mc.draws; ++i) acc += f(sample_symmetric_stable(s, beta, sigma));
            return acc / double(mc.draws);
          },
          [&](const QuadratureVsStableDensity&) -> double {
            if (std::holds_alternative<Sin>(f.shape())) return 0.0;
            const SymmetricStableLaw law(beta, sigma);
            // E f = int_0^inf (f(x) + f(-x)) p(x) dx on [0, L] plus the limit
            // of the even part times the tail mass beyond L.
            const double c_beta = std::tgamma(beta) * std::sin(std::numbers::pi * beta / 2.0) / std::numbers::pi;
            double L = sigma * std::max(50.0, std::pow(1e-9 / c_beta, -1.0 / beta));
            L = std::min(L, sigma * 1e5);
            double period = L;
            double even_limit = 0.0;
            std::visit(detail::overloaded{[&](const Cos& c) { period = 2.0 * std::numbers::pi / std::abs(c.theta); },
                                          [&](const Sin&) {},
                                          [&](const SmoothedIndicator& c) {
                                            period = std::max(c.h, sigma);
                                            even_limit = 1.0;
                                            L = std::max(L, std::abs(c.t) + 50.0 * sigma);
                                          },
                                          [&](const GaussBump& c) {
                                            period = std::min(c.width, sigma) * 2.0;
                                            L = std::max(L, std::abs(c.center) + 40.0 * c.width);
                                          }},
                       f.shape());
            auto integrand = [&](double x) { return (f(x) + f(-x)) * law.pdf(x); };
            quad::Result total;
            double a = 0.0;
            const std::size_t panels = static_cast<std::size_t>(std::ceil(L / period));
            const std::size_t stride = std::max<std::size_t>(1, panels / 4000);
            while (a < L) {
              const double b = std::min(L, a + period * double(stride));
              total += quad::integrate(integrand, a, b, {1e-11, 1e-14, 20000});
              a = b;
            }
            return total.value + even_limit * (1.0 - law.cdf(L));
          }},
      f.mean_mode());
}

/// V_n = n^{-1/2} sum_t (f(X_t) - mean), Neumaier-compensated.
inline double compute_vn(std::span<const double> path, const TestFunction& f, double mean) {
  if (path.empty()) throw ParameterError("compute_vn: empty path");
  double sum = 0.0, comp = 0.0;
  for (double x : path) {
    const double v = f(x) - mean;
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / std::sqrt(double(path.size()));
}

struct VarianceEstimate {
  double v_hat2 = 0.0;         ///< c_0 + 2 sum_{j=1}^{j_max} c_j
  double v_hat2_stderr = 0.0;
  std::vector<double> per_lag;  ///< c_0 .. c_{j_max}
  std::vector<double> per_lag_stderr;
  double vn_hat2 = 0.0;  ///< direct MC variance of V_n over the replications
  double vn_hat2_stderr = 0.0;
  std::size_t window = 0;
  std::size_t replications = 0;
};

/// Monte Carlo autocovariances of f(X) (known mean) from R independent
/// stationary paths of length window + j_max. Path r uses stream
/// (master_seed, stream_base + r).
inline VarianceEstimate estimate_variance(const PathSampler& sampler, const TestFunction& f, double mean,
                                          std::size_t j_max, std::size_t window, std::size_t R,
                                          std::uint64_t master_seed, std::uint64_t stream_base = 0,
                                          unsigned threads = 1) {
  if (j_max < 1) throw ParameterError("estimate_variance: j_max must be >= 1");
  if (window < 1 || R < 2) throw ParameterError("estimate_variance: need window >= 1 and R >= 2");
  std::vector<std::vector<double>> lag(R, std::vector<double>(j_max + 1, 0.0));
  std::vector<double> vn2(R, 0.0);
  parallel_for(R, threads, [&](std::size_t r) {
    RngStream s(master_seed, stream_base + r);
    const std::vector<double> x = sampler(window + j_max, s);
    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) y[t] = f(x[t]) - mean;
    for (std::size_t j = 0; j <= j_max; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < window; ++t) acc += y[t] * y[t + j];
      lag[r][j] = acc / double(window);
    }
    const double vn = compute_vn(std::span<const double>(x.data(), window), f, mean);
    vn2[r] = vn * vn;
  });
  VarianceEstimate out;
  out.window = window;
  out.replications = R;
  auto mean_se = [R](auto&& get) {
    double m = 0.0;
    for (std::size_t r = 0; r < R; ++r) m += get(r);
    m /= double(R);
    double v = 0.0;
    for (std::size_t r = 0; r < R; ++r) v += (get(r) - m) * (get(r) - m);
    return std::pair{m, std::sqrt(v / double(R - 1) / double(R))};
  };
  out.per_lag.resize(j_max + 1);
  out.per_lag_stderr.resize(j_max + 1);
  for (std::size_t j = 0; j <= j_max; ++j) {
    std::tie(out.per_lag[j], out.per_lag_stderr[j]) = mean_se([&](std::size_t r) { return lag[r][j]; });
  }
  std::tie(out.v_hat2, out.v_hat2_stderr) = mean_se([&](std::size_t r) {
    double v = lag[r][0];
    for (std::size_t j = 1; j <= j_max; ++j) v += 2.0 * lag[r][j];
    return v;
  });
  std::tie(out.vn_hat2, out.vn_hat2_stderr) = mean_se([&](std::size_t r) { return vn2[r]; });
  if (!(out.v_hat2 > 0.0)) {
    throw DegenerateVarianceError("estimate_variance: long-run variance estimate " + std::to_string(out.v_hat2) +
                                      " is not positive",
                                  out.v_hat2);
  }
  return out;
}

/// sup_x |F_R(x) - F(x)| over the sorted sample.
inline double kolmogorov_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw ParameterError("kolmogorov_distance: empty sample");
  const double R = double(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = cdf(sorted[i]);
    d = std::max({d, std::abs(double(i + 1) / R - F), std::abs(double(i) / R - F)});
  }
  return std::min(d, 1.0);
}

/// Quantile-coupling estimate (1/R) sum_i |x_(i) - Q((i - 1/2)/R)|.
inline double wasserstein1_distance(std::span<const double> sorted, const std::function<double(double)>& quantile) {
  if (sorted.empty()) throw ParameterError("wasserstein1_distance: empty sample");
  const double R = double(sorted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) acc += std::abs(sorted[i] - quantile((double(i) + 0.5) / R));
  return acc / R;
}

enum class Metric { Kolmogorov, Wasserstein1 };

inline std::string to_string(Metric m) { return m == Metric::Kolmogorov ? "dK" : "dW"; }

struct DistanceEstimate {
  Metric metric = Metric::Kolmogorov;
  double value = 0.0;
  double mc_stderr = 0.0;
  std::size_t R = 0;
  std::size_t n = 0;
};

/// Distance of a sample to N(0, 1).
inline double distance_to_normal(std::span<const double> sorted, Metric m) {
  if (m == Metric::Kolmogorov) return kolmogorov_distance(sorted, normal_cdf);
  return wasserstein1_distance(sorted, [](double p) { return normal_quantile(p); });
}

/// Distance to N(0,1) with a bootstrap standard error over `resamples`
/// resamples drawn from stream (seed, stream_index).
inline DistanceEstimate bootstrap_distance(std::vector<double> sample, Metric m, std::size_t n, std::size_t resamples,
                                           std::uint64_t seed, std::uint64_t stream_index) {
  std::sort(sample.begin(), sample.end());
  DistanceEstimate out{m, distance_to_normal(sample, m), 0.0, sample.size(), n};
  if (resamples < 2 || sample.size() < 2) return out;
  RngStream s(seed, stream_index);
  std::vector<double> boot(sample.size());
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : boot) v = sample[static_cast<std::size_t>(s.uniform() * double(sample.size()))];
    std::sort(boot.begin(), boot.end());
    const double d = distance_to_normal(boot, m);
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / double(resamples);
  out.mc_stderr = std::sqrt(std::max(0.0, (sum2 - double(resamples) * mean * mean) / double(resamples - 1)));
  return out;
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr = 0.0;
};

/// Weighted least squares of log(value) on log(n).
inline RateFit fit_rate(std::span<const double> ns, std::span<const double> values, std::span<const double> weights = {}) {
  if (ns.size() != values.size() || (!weights.empty() && weights.size() != ns.size()))
    throw ParameterError("fit_rate: length mismatch");
  std::size_t used = 0;
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(values[i] > 0.0) || !(ns[i] > 0.0)) throw ParameterError("fit_rate: values and n must be positive");
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0) throw ParameterError("fit_rate: negative weight");
    if (w == 0.0) continue;
    ++used;
    sw += w;
    sx += w * std::log(ns[i]);
    sy += w * std::log(values[i]);
  }
  if (used < 3) throw ParameterError("fit_rate: need at least 3 weighted points");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const double dx = std::log(ns[i]) - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (std::log(values[i]) - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("fit_rate: n values must not all coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const double r = std::log(values[i]) - fit.intercept - fit.slope * std::log(ns[i]);
    rss += w * r * r;
  }
  // Weights are treated as relative precisions; the residual scale is estimated.
  fit.stderr = std::sqrt(rss / double(used - 2) / sxx);
  return fit;
}

}  // namespace levyma
