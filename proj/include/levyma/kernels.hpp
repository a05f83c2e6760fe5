#pragma once

// Moving-average kernels g (all vanish on x <= 0), FARIMA coefficient
// construction and the kernel overlap integrals rho_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "levyma/errors.hpp"
#include "levyma/quadrature.hpp"

namespace levyma {

/// g(x) = K x^gamma on (0,1), K x^-alpha on [1, inf).
struct PowerLaw {
  double gamma = 0.0;
  double alpha = 1.5;
  double K = 1.0;
};

/// Increment kernel of linear fractional stable motion:
/// x_+^{H-1/beta} - (x-1)_+^{H-1/beta}.
struct LfsnIncrement {
  double H = 0.2;
  double beta = 1.5;
};

/// Increment kernel of fractional Levy noise: x_+^{-rho} - (x-1)_+^{-rho}.
struct FractionalLevyIncrement {
  double rho = 0.4;
};

struct OuExponential {
  double lambda = 1.0;
};

/// Step kernel sum_j b_j 1_[j, j+1)(x).
struct DiscreteMA {
  std::vector<double> b;
};

using KernelSpec = std::variant<PowerLaw, LfsnIncrement, FractionalLevyIncrement, OuExponential, DiscreteMA>;

namespace detail {
// (u)_+^p with the convention 0 for u <= 0, also for p < 0.
inline double pos_pow(double u, double p) { return u > 0.0 ? std::pow(u, p) : 0.0; }
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

/// g(base + delta), with the shifted argument of the increment kernels formed
/// as (base - 1) + delta so that it stays accurate for tiny delta at base = 1.
inline double kernel_eval_at(const KernelSpec& spec, double base, double delta) {
  const double x = base + delta;
  if (!(x > 0.0)) return 0.0;
  return std::visit(
      detail::overloaded{
          [x](const PowerLaw& k) { return x < 1.0 ? k.K * std::pow(x, k.gamma) : k.K * std::pow(x, -k.alpha); },
          [&](const LfsnIncrement& k) {
            const double h = k.H - 1.0 / k.beta;
            return detail::pos_pow(x, h) - detail::pos_pow((base - 1.0) + delta, h);
          },
          [&](const FractionalLevyIncrement& k) {
            return detail::pos_pow(x, -k.rho) - detail::pos_pow((base - 1.0) + delta, -k.rho);
          },
          [x](const OuExponential& k) { return std::exp(-k.lambda * x); },
          [x](const DiscreteMA& k) {
            const double j = std::floor(x);
            return j < static_cast<double>(k.b.size()) ? k.b[static_cast<std::size_t>(j)] : 0.0;
          }},
      spec);
}

inline double kernel_eval(const KernelSpec& spec, double x) { return kernel_eval_at(spec, x, 0.0); }

/// A point where |g| behaves like (x - point)^exponent from the right.
struct Singularity {
  double point;
  double exponent;
};

/// Power-type blow-ups of |g|, used to pick quadrature substitutions.
inline std::vector<Singularity> kernel_singularities(const KernelSpec& spec) {
  return std::visit(detail::overloaded{
                        [](const PowerLaw& k) {
                          return k.gamma < 0.0 ? std::vector<Singularity>{{0.0, k.gamma}} : std::vector<Singularity>{};
                        },
                        [](const LfsnIncrement& k) {
                          const double h = k.H - 1.0 / k.beta;
                          return h < 0.0 ? std::vector<Singularity>{{0.0, h}, {1.0, h}} : std::vector<Singularity>{};
                        },
                        [](const FractionalLevyIncrement& k) {
                          return std::vector<Singularity>{{0.0, -k.rho}, {1.0, -k.rho}};
                        },
                        [](const auto&) { return std::vector<Singularity>{}; }},
                    spec);
}

/// Points where g is not smooth (kinks, jumps, singularities), excluding 0.
inline std::vector<double> kernel_breakpoints(const KernelSpec& spec) {
  return std::visit(detail::overloaded{[](const OuExponential&) { return std::vector<double>{}; },
                                       [](const DiscreteMA& k) {
                                         std::vector<double> v;
                                         for (std::size_t j = 1; j <= k.b.size(); ++j) v.push_back(double(j));
                                         return v;
                                       },
                                       [](const auto&) { return std::vector<double>{1.0}; }},
                    spec);
}

/// Right end of the support (infinity for all but DiscreteMA).
inline double kernel_support_end(const KernelSpec& spec) {
  if (const auto* d = std::get_if<DiscreteMA>(&spec)) return double(d->b.size());
  return std::numeric_limits<double>::infinity();
}

/// Polynomial decay exponent alpha of |g| at infinity (infinity for OU and
/// finitely supported kernels).
inline double kernel_decay_exponent(const KernelSpec& spec) {
  return std::visit(detail::overloaded{[](const PowerLaw& k) { return k.alpha; },
                                       [](const LfsnIncrement& k) { return 1.0 - k.H + 1.0 / k.beta; },
                                       [](const FractionalLevyIncrement& k) { return k.rho + 1.0; },
                                       [](const auto&) { return std::numeric_limits<double>::infinity(); }},
                    spec);
}

/// Exponent gamma of |g| near zero.
inline double kernel_gamma(const KernelSpec& spec) {
  return std::visit(detail::overloaded{[](const PowerLaw& k) { return k.gamma; },
                                       [](const LfsnIncrement& k) { return k.H - 1.0 / k.beta; },
                                       [](const FractionalLevyIncrement& k) { return -k.rho; },
                                       [](const auto&) { return 0.0; }},
                    spec);
}

/// True when g is identically zero.
inline bool kernel_is_zero(const KernelSpec& spec) {
  if (const auto* p = std::get_if<PowerLaw>(&spec)) return p->K == 0.0;
  if (const auto* d = std::get_if<DiscreteMA>(&spec))
    return std::all_of(d->b.begin(), d->b.end(), [](double v) { return v == 0.0; });
  return false;
}

/// Coefficients b_0..b_{n_max} of Theta(z) Phi(z)^{-1} (1 - z)^{-d} with
/// Phi(z) = 1 - phi_1 z - ... and Theta(z) = 1 + theta_1 z + ...
inline std::vector<double> arima_coefficients(std::span<const double> phi, std::span<const double> theta, double d,
                                              std::size_t n_max) {
  const std::size_t p = phi.size();
  if (p > 0) {
    // Phi has no roots in |z| <= 1 iff the reciprocal polynomial's roots,
    // the companion eigenvalues, lie strictly inside the unit disk.
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(Eigen::Index(p), Eigen::Index(p));
    for (std::size_t i = 0; i < p; ++i) comp(0, Eigen::Index(i)) = phi[i];
    for (std::size_t i = 1; i < p; ++i) comp(Eigen::Index(i), Eigen::Index(i - 1)) = 1.0;
    const Eigen::VectorXcd eig = comp.eigenvalues();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (std::abs(eig[i]) >= 1.0 - 1e-12) {
        throw StationarityError("arima_coefficients: AR polynomial has a root in the closed unit disk (|z| = " +
                                std::to_string(1.0 / std::abs(eig[i])) + ")");
      }
    }
  }
  std::vector<double> psi(n_max + 1);
  psi[0] = 1.0;
  for (std::size_t j = 1; j <= n_max; ++j) psi[j] = psi[j - 1] * ((double(j) - 1.0 + d) / double(j));
  std::vector<double> a(n_max + 1);
  for (std::size_t j = 0; j <= n_max; ++j) {
    double s = psi[j];
    for (std::size_t i = 1; i <= std::min(theta.size(), j); ++i) s += theta[i - 1] * psi[j - i];
    a[j] = s;
  }
  std::vector<double> b(n_max + 1);
  for (std::size_t j = 0; j <= n_max; ++j) {
    double s = a[j];
    for (std::size_t i = 1; i <= std::min(p, j); ++i) s += phi[i - 1] * b[j - i];
    b[j] = s;
  }
  return b;
}

struct IntegralOptions {
  double rel_tol = 1e-8;
  std::size_t max_evals = 100000;
  /// Start of the x = T/u tail map; 0 picks max(2, largest offset).
  double tail_start = 0.0;
};

/// int_0^inf prod_i |g(y + offsets_i)|^power dy, split at every shifted
/// breakpoint with power-singularity substitutions and a mapped tail.
inline quad::Result overlap_integral(const KernelSpec& spec, std::span<const double> offsets, double power,
                                     const IntegralOptions& opt = {}) {
  quad::Result out;
  if (offsets.empty() || kernel_is_zero(spec)) return out;
  const double dmin = *std::min_element(offsets.begin(), offsets.end());
  std::vector<double> d(offsets.begin(), offsets.end());
  for (auto& v : d) v -= dmin;  // translation invariance in y
  const double dmax = *std::max_element(d.begin(), d.end());

  if (const auto* dm = std::get_if<DiscreteMA>(&spec)) {
    const bool integral_offsets =
        std::all_of(d.begin(), d.end(), [](double v) { return v == std::floor(v) && v < 1e15; });
    if (integral_offsets) {
      // Piecewise constant on unit cells: the integral is an exact sum.
      const std::size_t len = dm->b.size();
      for (std::size_t j = 0; j < len; ++j) {
        double prod = 1.0;
        for (double off : d) {
          const std::size_t idx = j + static_cast<std::size_t>(off);
          prod *= idx < len ? std::pow(std::abs(dm->b[idx]), power) : 0.0;
        }
        out.value += prod;
      }
      out.evaluations = len;
      return out;
    }
  }

  // Evaluated at y = base + delta; base is a breakpoint, so base + off is exact.
  auto integrand_at = [&](double base, double delta) {
    double prod = 1.0;
    for (double off : d) {
      const double g = kernel_eval_at(spec, base + off, delta);
      if (g == 0.0) return 0.0;
      prod *= std::abs(g);
    }
    return std::pow(prod, power);
  };
  auto integrand = [&](double y) { return integrand_at(y, 0.0); };

  const auto sing = kernel_singularities(spec);
  auto exponent_at = [&](double y) {
    double e = 0.0;
    for (double off : d)
      for (const auto& s : sing)
        if (std::abs(y + off - s.point) < 1e-12) e += s.exponent;
    return e * power;
  };

  std::vector<double> pts{0.0};
  std::vector<double> kinks = kernel_breakpoints(spec);
  for (const auto& s : sing) kinks.push_back(s.point);
  for (double off : d)
    for (double k : kinks)
      if (k - off > 0.0) pts.push_back(k - off);
  const double support = kernel_support_end(spec);
  double tail = opt.tail_start > 0.0 ? opt.tail_start : std::max(2.0, dmax);
  if (std::isfinite(support)) tail = support - dmax;
  if (!(tail > 0.0)) return out;
  pts.push_back(tail);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double p) { return p > tail; }), pts.end());

  const std::size_t pieces = pts.size() - 1 + (std::isfinite(support) ? 0 : 1);
  quad::Options qo{opt.rel_tol, 0.0, std::max<std::size_t>(opt.max_evals / std::max<std::size_t>(pieces, 1), 45)};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    out += quad::integrate_left_singular([&, base = pts[i]](double delta) { return integrand_at(base, delta); }, 0.0,
                                         pts[i + 1] - pts[i], exponent_at(pts[i]), qo);
  if (!std::isfinite(support))
    out += quad::integrate_tail(integrand, tail, qo, power * double(d.size()) * kernel_decay_exponent(spec));
  // Integrals that underflow to the subnormal range are accepted as converged.
  out.converged = out.converged || out.abs_error <= opt.rel_tol * std::abs(out.value) ||
                  out.abs_error < std::numeric_limits<double>::min();
  return out;
}

/// rho_k = int |g(x) g(x+k)|^{beta/2} dx.
inline double rho_k(const KernelSpec& spec, double beta, std::size_t k, double tol = 1e-8,
                    quad::Result* detail_out = nullptr, double tail_start = 0.0) {
  if (!(beta > 0.0 && beta < 2.0)) throw ParameterError("rho_k: beta must lie in (0, 2)");
  if (!(tol > 0.0)) throw ParameterError("rho_k: tol must be positive");
  const double offs[2] = {0.0, double(k)};
  const quad::Result r = overlap_integral(spec, offs, beta / 2.0, {tol, 100000, tail_start});
  if (detail_out) *detail_out = r;
  return quad::value_or_throw(r, "rho_k");
}

/// int (prod_{i=1..4} |g(t_i - s)|)^{beta/4} ds.
inline double product4_integral(const KernelSpec& spec, double beta, double t1, double t2, double t3, double t4,
                                double tol = 1e-8) {
  if (!(beta > 0.0 && beta < 2.0)) throw ParameterError("product4_integral: beta must lie in (0, 2)");
  if (!(tol > 0.0)) throw ParameterError("product4_integral: tol must be positive");
  // With y = min(t) - s the factors become |g(y + t_i - min t)|.
  const double offs[4] = {t1, t2, t3, t4};
  return quad::value_or_throw(overlap_integral(spec, offs, beta / 4.0, {tol, 100000, 0.0}), "product4_integral");
}

/// int_0^inf |g(s)|^power ds.
inline quad::Result kernel_power_integral(const KernelSpec& spec, double power, double tol = 1e-10) {
  const double offs[1] = {0.0};
  return overlap_integral(spec, offs, power, {tol, 100000, 0.0});
}

/// int_M^inf |g(s)|^power ds.
inline double kernel_power_tail(const KernelSpec& spec, double power, double M, double tol = 1e-10) {
  if (std::isfinite(kernel_support_end(spec))) {
    const auto* dm = std::get_if<DiscreteMA>(&spec);
    double s = 0.0;
    for (std::size_t j = 0; j < dm->b.size(); ++j) {
      const double lo = std::max(double(j), M);
      if (lo < double(j + 1)) s += (double(j + 1) - lo) * std::pow(std::abs(dm->b[j]), power);
    }
    return s;
  }
  auto f = [&](double x) { return std::pow(std::abs(kernel_eval(spec, x)), power); };
  const double start = std::max(M, 1e-300);
  quad::Result r = quad::integrate_tail(f, std::max(start, 2.0), {tol, 0.0, 100000}, power * kernel_decay_exponent(spec));
  if (start < 2.0) {
    std::vector<double> pts{start};
    for (double b : kernel_breakpoints(spec))
      if (b > start && b < 2.0) pts.push_back(b);
    pts.push_back(2.0);
    r += quad::integrate_pieces(f, pts, {tol, 0.0, 100000});
  }
  return r.value;
}

}  // namespace levyma
