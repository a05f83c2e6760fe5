#pragma once

// Seedable, splittable random streams and heavy-tailed variate generation.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>

#include "levyma/errors.hpp"
#include "levyma/quadrature.hpp"

namespace levyma {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// One replication's random stream. The state is a pure function of
/// (master_seed, stream_index), so results never depend on scheduling.
/// Not thread-safe; give each worker its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
      : master_seed_(master_seed), stream_index_(stream_index) {
    std::uint64_t h = splitmix64(master_seed ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ splitmix64(stream_index + 0xbb67ae8584caa73bULL));
    for (auto& w : s_) {
      h += 0x9e3779b97f4a7c15ULL;
      w = splitmix64(h);
    }
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  /// xoshiro256**
  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() noexcept { return -std::log(uniform()); }

  /// Standard normal (Marsaglia polar method, second variate cached).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Poisson variate. Inversion by multiplication for small means,
  /// Hormann's PTRS transformed rejection otherwise.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("poisson: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kd);
      if (kd < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -mean + kd * loglam - std::lgamma(kd + 1.0)) {
        return static_cast<std::uint64_t>(kd);
      }
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t s_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SymmetricStable {
  double beta = 1.5;
  double scale = 1.0;
};

/// Symmetric Levy process with density |x|^{-1-zeta} exp(-tempering |x|).
struct TemperedStable {
  double zeta = 0.5;
  double tempering = 5.0;
  double truncation_eps = 1e-3;
};

using LevyModel = std::variant<SymmetricStable, TemperedStable>;

inline double tempered_density(const TemperedStable& m, double x) noexcept {
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  return std::pow(ax, -1.0 - m.zeta) * std::exp(-m.tempering * ax);
}

/// Validates the invariants of a Levy model, throwing ParameterError.
inline void validate(const LevyModel& model) {
  if (const auto* s = std::get_if<SymmetricStable>(&model)) {
    if (!(s->beta > 0.0 && s->beta < 2.0)) throw ParameterError("SymmetricStable: beta must lie in (0, 2)");
    if (!(s->scale > 0.0)) throw ParameterError("SymmetricStable: scale must be positive");
    return;
  }
  const auto& t = std::get<TemperedStable>(model);
  if (!(t.zeta >= 0.0 && t.zeta < 2.0)) throw ParameterError("TemperedStable: zeta must lie in [0, 2)");
  if (!(t.tempering > 0.0)) throw ParameterError("TemperedStable: tempering must be positive");
  if (!(t.truncation_eps > 0.0 && t.truncation_eps < 1.0))
    throw ParameterError("TemperedStable: truncation_eps must lie in (0, 1)");
  // kappa(x) <= |x|^{-3} for |x| > 1, checked on a log grid out to where the
  // exponential has long since won.
  for (int i = 0; i <= 4000; ++i) {
    const double x = std::exp(i * 1e-3 * std::log(1e4)) * (1.0 + 1e-12);
    if (tempered_density(t, x) > std::pow(x, -3.0) * (1.0 + 1e-12)) {
      throw ParameterError("TemperedStable: tempering too weak for kappa(x) <= |x|^-3 on |x| > 1");
    }
  }
}

/// Symmetric stable draw with characteristic function exp(-scale^beta |t|^beta),
/// generated as scale times a unit-scale Chambers-Mallows-Stuck variate.
inline double sample_symmetric_stable(RngStream& stream, double beta, double scale) {
  if (!(beta > 0.0 && beta <= 2.0)) throw ParameterError("sample_symmetric_stable: beta must lie in (0, 2]");
  if (!(scale >= 0.0)) throw ParameterError("sample_symmetric_stable: scale must be >= 0");
  const double v = std::numbers::pi * (stream.uniform() - 0.5);
  double unit;
  if (beta == 1.0) {
    unit = std::tan(v);
  } else {
    const double w = stream.exponential();
    unit = std::sin(beta * v) / std::pow(std::cos(v), 1.0 / beta) *
           std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
  }
  return scale * unit;
}

/// Increment sampler for a tempered-stable Levy process: compound Poisson
/// jumps above truncation_eps plus a Gaussian standing in for the small jumps.
class TemperedStableSampler {
 public:
  explicit TemperedStableSampler(const LevyModel& model) {
    const auto* t = std::get_if<TemperedStable>(&model);
    if (t == nullptr) throw WrongVariantError("tempered-stable sampler needs a TemperedStable model");
    validate(model);
    m_ = *t;
    const double eps = m_.truncation_eps;
    auto kappa = [this](double x) { return tempered_density(m_, x); };
    quad::Options opt{1e-11, 0.0, 200000};
    // Jump intensity on |x| > eps, both signs.
    intensity_ = 2.0 * (quad::value_or_throw(quad::integrate(kappa, eps, 1.0, opt), "tempered intensity") +
                        quad::value_or_throw(quad::integrate_tail(kappa, 1.0, opt), "tempered intensity"));
    auto x2k = [this](double x) { return x * x * tempered_density(m_, x); };
    small_var_ = 2.0 * quad::value_or_throw(quad::integrate_left_singular(x2k, 0.0, eps, 1.0 - m_.zeta, opt),
                                            "tempered small-jump variance");
    // Rejection envelope: x^{-1-zeta} e^{-c eps} on (eps, 1], e^{-c x} on (1, inf).
    const double z = m_.zeta;
    head_mass_ = std::exp(-m_.tempering * eps) *
                 (z == 0.0 ? -std::log(eps) : (std::pow(eps, -z) - 1.0) / z);
    tail_mass_ = std::exp(-m_.tempering) / m_.tempering;
  }

  const TemperedStable& model() const noexcept { return m_; }
  double jump_intensity() const noexcept { return intensity_; }
  double small_jump_variance() const noexcept { return small_var_; }

  /// 2 * int_0^inf x^2 kappa(x) dx, the variance of a unit-time increment.
  double total_variance() const {
    auto x2k = [this](double x) { return x * x * tempered_density(m_, x); };
    quad::Options opt{1e-11, 0.0, 200000};
    return 2.0 * (quad::integrate_left_singular(x2k, 0.0, 1.0, 1.0 - m_.zeta, opt).value +
                  quad::integrate_tail(x2k, 1.0, opt).value);
  }

  double jump_size(RngStream& s) const {
    const double eps = m_.truncation_eps;
    const double z = m_.zeta;
    const double c = m_.tempering;
    for (;;) {
      double x;
      if (s.uniform() * (head_mass_ + tail_mass_) < head_mass_) {
        const double u = s.uniform();
        x = z == 0.0 ? std::exp(std::log(eps) * (1.0 - u))
                     : std::pow(std::pow(eps, -z) - u * (std::pow(eps, -z) - 1.0), -1.0 / z);
        if (s.uniform() <= std::exp(-c * (x - eps))) return x;
      } else {
        x = 1.0 + s.exponential() / c;
        if (s.uniform() <= std::pow(x, -1.0 - z)) return x;
      }
    }
  }

  double increment(RngStream& s, double dt) const {
    if (!(dt >= 0.0)) throw ParameterError("tempered increment: dt must be >= 0");
    if (dt == 0.0) return 0.0;
    const std::uint64_t jumps = s.poisson(intensity_ * dt);
    double sum = 0.0;
    for (std::uint64_t i = 0; i < jumps; ++i) {
      const double j = jump_size(s);
      sum += s.uniform() < 0.5 ? -j : j;
    }
    return sum + std::sqrt(small_var_ * dt) * s.normal();
  }

 private:
  TemperedStable m_{};
  double intensity_ = 0.0;
  double small_var_ = 0.0;
  double head_mass_ = 0.0;
  double tail_mass_ = 0.0;
};

/// Convenience form; builds the sampler on every call.
inline double sample_tempered_stable_increment(RngStream& stream, const LevyModel& model, double dt) {
  return TemperedStableSampler(model).increment(stream, dt);
}

}  // namespace levyma
