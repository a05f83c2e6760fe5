#pragma once

// Deterministic rate tables and bound ingredients: theoretical exponents,
// the difference-operator majorants A_n, the min-integral over the Levy
// intensity, and the rho-sum proxy for gamma_1 / gamma_2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "levyma/errors.hpp"
#include "levyma/kernels.hpp"
#include "levyma/quadrature.hpp"
#include "levyma/rational.hpp"

namespace levyma {

enum class RateMetric { Wasserstein, Kolmogorov };

/// n^exponent * log(n)^log_power. `epsilon_loss` marks rates that hold as
/// n^{exponent + eps} for every eps > 0.
struct RateClass {
  Rational exponent;
  int log_power = 0;
  bool epsilon_loss = false;

  friend bool operator==(const RateClass&, const RateClass&) = default;
  std::string str() const {
    std::string s = "n^(" + exponent.str() + ")";
    if (log_power > 0) s += " log(n)";
    if (epsilon_loss) s += " n^eps";
    return s;
  }
};

/// Berry-Esseen exponent for d_W / d_K as a function of alpha*beta > 2.
inline RateClass theoretical_rate(const Rational& alpha_beta, RateMetric metric) {
  if (alpha_beta <= Rational(2)) throw ParameterError("theoretical_rate: alpha*beta must exceed 2");
  const Rational edge = metric == RateMetric::Wasserstein ? Rational(3) : Rational(4);
  const Rational divisor = metric == RateMetric::Wasserstein ? Rational(2) : Rational(4);
  if (alpha_beta > edge) return {Rational(-1, 2), 0};
  if (alpha_beta == edge) return {Rational(-1, 2), 1};
  return {(Rational(2) - alpha_beta) / divisor, 0};
}

/// Exponent of int min(A_n^p, A_n^q) d(lambda) in n for q > 2.
inline RateClass min_integral_rate(const Rational& alpha_beta, const Rational& q) {
  if (alpha_beta <= Rational(2)) throw ParameterError("min_integral_rate: alpha*beta must exceed 2");
  if (q <= Rational(2)) throw ParameterError("min_integral_rate: q must exceed 2");
  const Rational top = Rational(1) - q / Rational(2);
  if (alpha_beta > q) return {top, 0};
  if (alpha_beta == q) return {top, 1};
  return {(Rational(2) - alpha_beta) / Rational(2), 0};
}

struct LfsnExample {
  Rational H;
  Rational beta;
};
struct FlnExample {
  Rational rho;
  Rational epsilon;
  Rational zeta{0};
};
struct ArimaExample {
  Rational d;
  Rational beta;
};
struct OuExample {};
using CorollaryExample = std::variant<LfsnExample, FlnExample, ArimaExample, OuExample>;

struct CorollaryRates {
  RateClass wasserstein;
  RateClass kolmogorov;
};

namespace detail {
inline void require_consistent(const RateClass& stated, const RateClass& derived, const char* name) {
  if (!(stated == derived))
    throw Error(std::string("corollary_rate: ") + name + " disagrees with the general table (" + stated.str() +
                " vs " + derived.str() + ")");
}
}  // namespace detail

/// Rates for the four worked examples. Each branch states the closed-form
/// corollary exponent, then cross-checks it against theoretical_rate under
/// the example's alpha.
inline CorollaryRates corollary_rate(const CorollaryExample& example) {
  const Rational half(1, 2), one(1), two(2);
  return std::visit(
      detail::overloaded{
          [&](const LfsnExample& e) {
            if (!(e.beta > one && e.beta < two)) throw ParameterError("LFSN: requires 1 < beta < 2");
            if (!(e.H > Rational(0) && e.H < one - one / e.beta)) throw ParameterError("LFSN: requires 0 < H < 1 - 1/beta");
            const Rational base = one + e.beta * (e.H - one);
            CorollaryRates r{{base / two, 0}, {base / Rational(4), 0}};
            const Rational ab = (one - e.H + one / e.beta) * e.beta;
            detail::require_consistent(r.wasserstein, theoretical_rate(ab, RateMetric::Wasserstein), "LFSN d_W");
            detail::require_consistent(r.kolmogorov, theoretical_rate(ab, RateMetric::Kolmogorov), "LFSN d_K");
            return r;
          },
          [&](const FlnExample& e) {
            if (!(e.zeta >= Rational(0) && e.zeta < two)) throw ParameterError("FLN: requires 0 <= zeta < 2");
            if (!(e.rho > Rational(0))) throw ParameterError("FLN: requires rho > 0");
            if (e.zeta > Rational(0) && !(e.rho * e.zeta < one)) throw ParameterError("FLN: requires rho < 1/zeta");
            if (!(e.epsilon > Rational(0))) throw ParameterError("FLN: requires epsilon > 0");
            CorollaryRates r;
            r.wasserstein = e.rho > half ? RateClass{-half, 0} : RateClass{-e.rho, 0, true};
            r.kolmogorov = e.rho > one ? RateClass{-half, 0} : RateClass{-e.rho / two, 0, true};
            // The corollary takes beta -> 2 inside [zeta, 2): check at beta = 2 - delta.
            const Rational alpha = e.rho + one;
            Rational delta(1, 1000000);
            while ((alpha * (two - delta) <= Rational(3) && e.rho > half) ||
                   (alpha * (two - delta) <= Rational(4) && e.rho > one))
              delta = delta / Rational(2);
            const Rational ab = alpha * (two - delta);
            for (auto [stated, metric] : {std::pair{r.wasserstein, RateMetric::Wasserstein},
                                          std::pair{r.kolmogorov, RateMetric::Kolmogorov}}) {
              const RateClass t = theoretical_rate(ab, metric);
              const Rational gap = t.exponent - stated.exponent;
              const bool ok = stated.epsilon_loss ? (gap >= Rational(0) && gap <= e.epsilon && t.log_power == 0)
                                                  : t == stated;
              if (!ok) throw Error("corollary_rate: FLN disagrees with the general table");
            }
            return r;
          },
          [&](const ArimaExample& e) {
            if (!(e.beta > Rational(0) && e.beta < two)) throw ParameterError("ARIMA: requires 0 < beta < 2");
            if (e.d.is_integer()) throw ParameterError("ARIMA: d must not be an integer");
            if (!(e.d < one - two / e.beta)) throw ParameterError("ARIMA: requires d < 1 - 2/beta");
            const Rational mid = one - (one - e.d) * e.beta / two;
            CorollaryRates r;
            const Rational w_edge = one - Rational(3) / e.beta, k_edge = one - Rational(4) / e.beta;
            r.wasserstein = e.d < w_edge ? RateClass{-half, 0} : (e.d == w_edge ? RateClass{-half, 1} : RateClass{mid, 0});
            r.kolmogorov =
                e.d < k_edge ? RateClass{-half, 0} : (e.d == k_edge ? RateClass{-half, 1} : RateClass{mid / two, 0});
            const Rational ab = (one - e.d) * e.beta;
            detail::require_consistent(r.wasserstein, theoretical_rate(ab, RateMetric::Wasserstein), "ARIMA d_W");
            detail::require_consistent(r.kolmogorov, theoretical_rate(ab, RateMetric::Kolmogorov), "ARIMA d_K");
            return r;
          },
          [&](const OuExample&) {
            CorollaryRates r{{-half, 0}, {-half, 0}};
            // alpha may be taken arbitrarily large.
            detail::require_consistent(r.wasserstein, theoretical_rate(Rational(1000), RateMetric::Wasserstein), "OU d_W");
            detail::require_consistent(r.kolmogorov, theoretical_rate(Rational(1000), RateMetric::Kolmogorov), "OU d_K");
            return r;
          }},
      example);
}

/// lambda(ds, dx) = ds C_kappa |x|^{-1-beta} dx.
struct IntensityMeasure {
  double beta = 1.5;
  double C_kappa = 1.0;
};

/// A_n(x, s) = n^{-1/2} sum_{t=1}^n min(1, |x g(t - s)|).
inline double a_n(double x, double s, const KernelSpec& kernel, std::size_t n) {
  if (n < 1) throw ParameterError("a_n: n must be >= 1");
  if (x == 0.0 || s >= double(n)) return 0.0;
  double acc = 0.0;
  for (std::size_t t = 1; t <= n; ++t) acc += std::min(1.0, std::abs(x * kernel_eval(kernel, double(t) - s)));
  return acc / std::sqrt(double(n));
}

/// A_n(z1, z2) = n^{-1/2} sum_t min(1, |x1 g(t-s1)|) min(1, |x2 g(t-s2)|).
inline double a_n2(double x1, double s1, double x2, double s2, const KernelSpec& kernel, std::size_t n) {
  if (n < 1) throw ParameterError("a_n2: n must be >= 1");
  double acc = 0.0;
  for (std::size_t t = 1; t <= n; ++t) {
    acc += std::min(1.0, std::abs(x1 * kernel_eval(kernel, double(t) - s1))) *
           std::min(1.0, std::abs(x2 * kernel_eval(kernel, double(t) - s2)));
  }
  return acc / std::sqrt(double(n));
}

struct MinIntegralOptions {
  double rel_tol = 1e-4;
  std::size_t outer_max_evals = 200000;
  /// Gauss-Kronrod panels on the intra-cell coordinate u in s = k - u.
  std::size_t u_panels = 8;
  /// Cells with s in (-far_cells, n] use the tabulated rule; further out the
  /// s-integral is adaptive with direct A_n evaluation.
  std::size_t far_cells = 0;  // 0 selects n
};

struct MinIntegralResult {
  double value = 0.0;
  double abs_error = 0.0;
  double small_jumps = 0.0;  ///< |x| in (0, 1)
  double mid_jumps = 0.0;    ///< |x| in [1, n^alpha]
  double large_jumps = 0.0;  ///< |x| > n^alpha
  std::size_t outer_evaluations = 0;
  bool converged = true;
};

/// Evaluates int_{R^2} min(A_n(z)^p, A_n(z)^q) lambda(dz).
class MinIntegral {
 public:
  MinIntegral(double p, double q, std::size_t n, KernelSpec kernel, IntensityMeasure measure,
              MinIntegralOptions opt = {})
      : p_(p), q_(q), n_(n), kernel_(std::move(kernel)), measure_(measure), opt_(opt) {
    if (!(p >= 0.0 && p <= 2.0)) throw ParameterError("min_integral: p must lie in [0, 2]");
    if (!(q > 2.0)) throw ParameterError("min_integral: q must exceed 2");
    if (n < 1) throw ParameterError("min_integral: n must be >= 1");
    if (!(measure.beta > 0.0 && measure.beta < 2.0)) throw ParameterError("min_integral: beta must lie in (0, 2)");
    if (!(measure.C_kappa >= 0.0)) throw ParameterError("min_integral: C_kappa must be >= 0");
    if (!(opt_.rel_tol > 0.0)) throw ParameterError("min_integral: tolerance must be positive");
    alpha_ = kernel_decay_exponent(kernel_);
    if (std::isfinite(alpha_) && !(alpha_ * measure.beta > 2.0))
      throw ParameterError("min_integral: requires alpha*beta > 2");
    zero_ = kernel_is_zero(kernel_) || measure.C_kappa == 0.0;
    far_ = opt_.far_cells == 0 ? n_ : opt_.far_cells;
    build_table();
  }

  /// Inner integral F(x) = int min(A^p, A^q)(x, s) ds for x > 0; error estimate via `err`.
  double inner(double x, double* err = nullptr) const {
    if (zero_ || x <= 0.0) {
      if (err) *err = 0.0;
      return 0.0;
    }
    const std::size_t len = n_ + far_;  // j = 0 .. n + far - 1
    const double inv_sqrt_n = 1.0 / std::sqrt(double(n_));
    std::vector<double> prefix(len);
    double kron = 0.0, gauss = 0.0;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      const double* g = &table_[v * len];
      double c = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        c += std::min(1.0, x * g[j]);
        prefix[j] = c;
      }
      // Cells k = 1..n: j in [0, n-k]; cells k = 0..-(far-1): j in [1-k, n-k].
      double cell_sum = 0.0;
      for (std::size_t k = 1; k <= n_; ++k) cell_sum += h(prefix[n_ - k] * inv_sqrt_n);
      for (std::size_t m = 0; m + 1 < far_ + 1 && m < far_; ++m) {
        // k = -m: j in [1+m, n+m]
        cell_sum += h((prefix[n_ + m] - prefix[m]) * inv_sqrt_n);
      }
      kron += wk_[v] * cell_sum;
      gauss += wg_[v] * cell_sum;
    }
    // Beyond the tabulated cells: s <= -far, r = -s >= far.
    auto far_integrand = [&](double r) {
      double acc = 0.0;
      for (std::size_t t = 1; t <= n_; ++t) acc += std::min(1.0, std::abs(x * kernel_eval(kernel_, double(t) + r)));
      return h(acc * inv_sqrt_n);
    };
    quad::Result tail;
    const double r0 = double(far_);
    if (std::isfinite(kernel_support_end(kernel_))) {
      const double end = kernel_support_end(kernel_) - 1.0;
      if (end > r0) tail = quad::integrate(far_integrand, r0, end, {opt_.rel_tol * 0.1, 0.0, 20000});
    } else {
      std::vector<double> pts{r0};
      if (std::isfinite(alpha_)) {
        for (double b : {std::pow(x, 1.0 / alpha_), std::pow(x, 1.0 / alpha_) * std::pow(double(n_), 0.5 / alpha_)})
          if (b > r0 && b < 1e300) pts.push_back(b);
      }
      std::sort(pts.begin(), pts.end());
      quad::Options qo{opt_.rel_tol * 0.1, 1e-300, 4000};
      tail += quad::integrate_pieces(far_integrand, pts, qo);
      tail += quad::integrate_tail(far_integrand, pts.back(), qo, q_ * alpha_);
    }
    if (err) *err = std::abs(kron - gauss) + tail.abs_error;
    return kron + tail.value;
  }

  MinIntegralResult evaluate() const {
    MinIntegralResult out;
    if (zero_) return out;
    const double beta = measure_.beta;
    const double scale = 2.0 * measure_.C_kappa;  // both signs of x
    // y = log x; dx x^{-1-beta} = e^{-beta y} dy.
    auto phi = [&](double y) {
      const double v = inner(std::exp(y));
      return v == 0.0 ? 0.0 : scale * v * std::exp(-beta * y);
    };
    const double split = (std::isfinite(alpha_) ? alpha_ : 4.0) * std::log(double(n_));
    quad::Options qo{opt_.rel_tol, 0.0, opt_.outer_max_evals / 3};
    // (0, 1): y = 1 - w, w in [1, inf).
    const quad::Result small = quad::integrate_tail([&](double w) { return phi(1.0 - w); }, 1.0, qo);
    const quad::Result mid = split > 0.0 ? quad::integrate(phi, 0.0, split, qo) : quad::Result{};
    // (n^alpha, inf): y = split - 1 + w.
    const quad::Result large = quad::integrate_tail([&](double w) { return phi(split - 1.0 + w); }, 1.0, qo);
    out.small_jumps = small.value;
    out.mid_jumps = mid.value;
    out.large_jumps = large.value;
    out.value = small.value + mid.value + large.value;
    out.abs_error = small.abs_error + mid.abs_error + large.abs_error;
    out.outer_evaluations = small.evaluations + mid.evaluations + large.evaluations;
    out.converged = out.abs_error <= opt_.rel_tol * std::abs(out.value) * 3.0;
    return out;
  }

 private:
  double h(double a) const {
    if (a <= 0.0) return 0.0;
    return a <= 1.0 ? power(a, q_) : power(a, p_);
  }
  static double power(double a, double e) {
    if (e == 2.0) return a * a;
    if (e == 3.0) return a * a * a;
    if (e == 4.0) return (a * a) * (a * a);
    if (e == 1.0) return a;
    if (e == 0.0) return 1.0;
    return std::pow(a, e);
  }

  void build_table() {
    const std::size_t panels = std::max<std::size_t>(opt_.u_panels, 1);
    const double width = 1.0 / double(panels);
    for (std::size_t pnl = 0; pnl < panels; ++pnl) {
      const double c = (double(pnl) + 0.5) * width, hw = 0.5 * width;
      for (int j = 0; j < 7; ++j) {
        for (int sgn : {-1, 1}) {
          nodes_.push_back(c + sgn * hw * quad::detail::kXgk[j]);
          wk_.push_back(hw * quad::detail::kWgk[j]);
          wg_.push_back(j % 2 == 1 ? hw * quad::detail::kWg[j / 2] : 0.0);
        }
      }
      nodes_.push_back(c);
      wk_.push_back(hw * quad::detail::kWgk[7]);
      wg_.push_back(hw * quad::detail::kWg[3]);
    }
    if (zero_) return;
    const std::size_t len = n_ + far_;
    table_.resize(nodes_.size() * len);
    for (std::size_t v = 0; v < nodes_.size(); ++v)
      for (std::size_t j = 0; j < len; ++j) table_[v * len + j] = std::abs(kernel_eval(kernel_, double(j) + nodes_[v]));
  }

  double p_, q_;
  std::size_t n_;
  KernelSpec kernel_;
  IntensityMeasure measure_;
  MinIntegralOptions opt_;
  double alpha_ = 0.0;
  bool zero_ = false;
  std::size_t far_ = 0;
  std::vector<double> nodes_, wk_, wg_;
  std::vector<double> table_;
};

inline MinIntegralResult min_integral(double p, double q, std::size_t n, const KernelSpec& kernel,
                                      const IntensityMeasure& measure, const MinIntegralOptions& opt = {}) {
  return MinIntegral(p, q, n, kernel, measure, opt).evaluate();
}

struct Gamma12Proxy {
  double gamma1_sq = 0.0;
  double gamma2_sq = 0.0;
};

/// n^{-2} sum_{t1..t4 = 1}^n rho_{t1-t3} rho_{t2-t4} rho_{t3-t4} with
/// rho_{-k} = rho_k, in O(n^2) via S(t) = sum_u rho_{u-t}.
inline Gamma12Proxy gamma12_proxy(std::size_t n, std::span<const double> rho_table) {
  if (n < 1) throw ParameterError("gamma12_proxy: n must be >= 1");
  if (rho_table.size() < n)
    throw InputError("gamma12_proxy: rho table has " + std::to_string(rho_table.size()) + " lags, needs 0.." +
                     std::to_string(n - 1));
  std::vector<double> prefix(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) prefix[k] = (acc += rho_table[k]);
  // S(t) for t = 1..n: lags 0..t-1 to the left, 1..n-t to the right.
  std::vector<double> S(n);
  for (std::size_t t = 1; t <= n; ++t) S[t - 1] = prefix[t - 1] + prefix[n - t] - rho_table[0];
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) row += rho_table[a > b ? a - b : b - a] * S[b];
    total += S[a] * row;
  }
  const double v = total / (double(n) * double(n));
  return {v, v};
}

}  // namespace levyma
