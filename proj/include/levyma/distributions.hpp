#pragma once

// Reference laws: standard normal and the symmetric stable law
// S(beta, scale) with characteristic function exp(-scale^beta |t|^beta).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "levyma/errors.hpp"
#include "levyma/quadrature.hpp"

namespace levyma {

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) noexcept { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Symmetric stable law evaluated through the Zolotarev integral
/// representation of the inverted characteristic function. Non-oscillatory,
/// so it stays accurate far into the tails.
class SymmetricStableLaw {
 public:
  SymmetricStableLaw(double beta, double scale) : beta_(beta), scale_(scale) {
    if (!(beta > 0.0 && beta <= 2.0)) throw ParameterError("SymmetricStableLaw: beta must lie in (0, 2]");
    if (!(scale > 0.0)) throw ParameterError("SymmetricStableLaw: scale must be positive");
  }

  double beta() const noexcept { return beta_; }
  double scale() const noexcept { return scale_; }

  double cdf(double x) const {
    const double y = x / scale_;
    if (y < 0.0) return 1.0 - unit_cdf(-y);
    return unit_cdf(y);
  }

  double pdf(double x) const { return unit_pdf(std::abs(x / scale_)) / scale_; }

  /// Quantile by bracketed bisection/secant on the CDF.
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("SymmetricStableLaw::quantile: p must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -quantile(1.0 - p);
    double lo = 0.0, hi = 1.0;
    while (unit_cdf(hi) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (unit_cdf(mid) < p ? lo : hi) = mid;
    }
    return scale_ * 0.5 * (lo + hi);
  }

 private:
  // V(theta) of the Zolotarev representation with zero skewness.
  double v_fn(double th) const {
    const double a = beta_;
    const double lc = std::log(std::cos(th));
    const double ls = std::log(std::sin(a * th));
    return std::exp((a / (a - 1.0)) * (lc - ls) + std::log(std::cos((a - 1.0) * th)) - lc);
  }

  // The integrand is a narrow ridge near theta = 0 (small y) or pi/2 (large y);
  // geometric breakpoints towards both ends let the adaptive rule find it.
  std::vector<double> breakpoints(double y) const {
    const double half_pi = std::numbers::pi / 2;
    const double w = std::pow(std::min(y, 1.0 / y), std::max(beta_, 1.0));
    const int depth = std::clamp(int(std::ceil(std::log2(1.0 / std::max(w, 1e-300)))) + 6, 4, 1000);
    std::vector<double> pts{0.0, half_pi / 2, half_pi};
    for (int j = 2; j <= depth; ++j) {
      const double d = half_pi * std::ldexp(1.0, -j);
      pts.push_back(d);
      pts.push_back(half_pi - d);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  // Tail expansion in powers of y^{-beta}: survival function (density = false)
  // or density (density = true). Asymptotic for beta > 1, convergent below;
  // used only far enough out that the smallest term is negligible.
  static constexpr double kSeriesStart = 20.0;
  double tail_series(double y, bool density) const {
    const double a = beta_;
    const double ly = std::log(y);
    double sum = 0.0, prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 400; ++k) {
      // density: Gamma(k a + 1)/k! y^{-k a - 1}; survival: Gamma(k a)/k! y^{-k a}
      const double lg = density ? std::lgamma(k * a + 1.0) - std::lgamma(k + 1.0) - (k * a + 1.0) * ly
                                : std::lgamma(k * a) - std::lgamma(k + 1.0) - k * a * ly;
      const double mag = std::exp(lg);
      if (mag > prev) break;
      prev = mag;
      const double term = ((k % 2 == 1) ? 1.0 : -1.0) * mag * std::sin(k * std::numbers::pi * a / 2.0);
      sum += term;
      if (mag < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::numbers::pi;
  }

  double unit_cdf(double y) const {
    const double a = beta_;
    if (y == 0.0) return 0.5;
    if (a == 1.0) return 0.5 + std::atan(y) / std::numbers::pi;
    if (a == 2.0) return normal_cdf(y / std::numbers::sqrt2);
    if (y >= kSeriesStart) return 1.0 - tail_series(y, false);
    const double c = std::pow(y, a / (a - 1.0));
    auto integrand = [&](double th) {
      const double v = v_fn(th);
      if (!std::isfinite(v)) return 0.0;
      return std::exp(-c * v);
    };
    const quad::Result r = quad::integrate_pieces(integrand, breakpoints(y), {1e-12, 1e-300, 200000});
    const double i = r.value / std::numbers::pi;
    return a < 1.0 ? 0.5 + i : 1.0 - i;
  }

  double unit_pdf(double y) const {
    const double a = beta_;
    if (a == 1.0) return 1.0 / (std::numbers::pi * (1.0 + y * y));
    if (a == 2.0) return std::exp(-0.25 * y * y) / (2.0 * std::sqrt(std::numbers::pi));
    if (y == 0.0) return std::tgamma(1.0 + 1.0 / a) / std::numbers::pi;
    if (y >= kSeriesStart) return tail_series(y, true);
    const double c = std::pow(y, a / (a - 1.0));
    auto integrand = [&](double th) {
      const double v = v_fn(th);
      if (!std::isfinite(v) || v == 0.0) return 0.0;
      const double e = c * v;
      return e * std::exp(-e);
    };
    const quad::Result r = quad::integrate_pieces(integrand, breakpoints(y), {1e-11, 1e-300, 200000});
    return a / (std::numbers::pi * std::abs(a - 1.0) * y) * r.value;
  }

  double beta_;
  double scale_;
};

/// Direct Fourier inversion F(x) = 1/2 + (1/pi) int_0^inf sin(x t) / t * phi(t) dt.
/// Slow for large |x|; kept as an independent cross-check of SymmetricStableLaw.
inline double stable_cdf_fourier(double x, double beta, double scale) {
  if (x == 0.0) return 0.5;
  const double y = x / scale;
  const double tmax = std::pow(60.0, 1.0 / beta);
  auto f = [&](double t) { return t == 0.0 ? y : std::sin(y * t) / t * std::exp(-std::pow(t, beta)); };
  const double period = std::numbers::pi / std::abs(y);
  quad::Result total;
  for (double a = 0.0; a < tmax; a += period) total += quad::integrate(f, a, std::min(a + period, tmax), {1e-12, 1e-15, 2000});
  return 0.5 + total.value / std::numbers::pi;
}

}  // namespace levyma
