#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with global subdivision,
// endpoint-singularity substitutions and semi-infinite tail maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "levyma/errors.hpp"

namespace levyma::quad {

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  std::size_t max_evals = 100000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;

  Result& operator+=(const Result& o) {
    value += o.value;
    abs_error += o.abs_error;
    evaluations += o.evaluations;
    converged = converged && o.converged;
    return *this;
  }
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

/// Adaptive quadrature of f over the finite interval [a, b]. Never throws on
/// non-convergence; inspect Result::converged.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result out;
  if (!(b > a)) {
    if (a == b) return out;
    Result r = integrate(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<detail::Panel> heap;
  detail::Panel first = detail::gk15(f, a, b);
  out.evaluations = 15;
  double total = first.value;
  double err = first.error;
  heap.push(first);
  auto done = [&] { return err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (!done()) {
    if (out.evaluations + 30 > opt.max_evals) break;
    detail::Panel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b) ||
        (p.b - p.a) < 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) {
      break;  // interval exhausted at machine resolution
    }
    heap.pop();
    const detail::Panel l = detail::gk15(f, p.a, mid);
    const detail::Panel r = detail::gk15(f, mid, p.b);
    out.evaluations += 30;
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.abs_error = err;
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) ||
                  err <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(total);
  return out;
}

/// Integral over [a, b] where |f| ~ (x-a)^exponent near a. For exponent < 0
/// uses x = a + (b-a) u^{1/(1+exponent)}, which removes a pure power singularity.
template <class F>
Result integrate_left_singular(F&& f, double a, double b, double exponent, const Options& opt = {}) {
  if (!(exponent < 0.0)) return integrate(f, a, b, opt);
  if (exponent <= -1.0) throw ParameterError("integrate_left_singular: non-integrable exponent");
  const double c = 1.0 / (1.0 + exponent);
  const double w = b - a;
  auto g = [&](double u) {
    const double uc = std::pow(u, c - 1.0);
    return f(a + w * u * uc) * w * c * uc;
  };
  return integrate(g, 0.0, 1.0, opt);
}

/// Integral over [a, inf) (a > 0). With a finite `decay` p > 1, i.e.
/// |f| ~ x^{-p}, uses x = a u^{-1/(p-1)}, which flattens a pure power tail;
/// otherwise x = a / u.
template <class F>
Result integrate_tail(F&& f, double a, const Options& opt = {},
                      double decay = std::numeric_limits<double>::infinity()) {
  if (!(a > 0.0)) throw ParameterError("integrate_tail: lower limit must be positive");
  if (std::isfinite(decay) && decay > 1.0) {
    const double m = 1.0 / (decay - 1.0);
    auto g = [&](double u) {
      const double um = std::pow(u, -m);
      return f(a * um) * a * m * um / u;
    };
    return integrate(g, 0.0, 1.0, opt);
  }
  auto g = [&](double u) {
    const double x = a / u;
    return f(x) * a / (u * u);
  };
  return integrate(g, 0.0, 1.0, opt);
}

/// Integral over [a, b] split at the given interior breakpoints; the node
/// budget is shared evenly across the pieces.
template <class F>
Result integrate_pieces(F&& f, std::span<const double> points, const Options& opt = {}) {
  Result out;
  if (points.size() < 2) return out;
  Options piece = opt;
  piece.max_evals = std::max<std::size_t>(opt.max_evals / (points.size() - 1), 45);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i + 1] > points[i]) out += integrate(f, points[i], points[i + 1], piece);
  }
  return out;
}

/// Throws AccuracyError when the result did not converge.
inline double value_or_throw(const Result& r, const std::string& what) {
  if (!r.converged) throw AccuracyError(what + ": quadrature did not converge", r.value, r.abs_error);
  return r.value;
}

/// n-point Gauss-Legendre nodes and weights on [0, 1] (Newton on P_n).
inline void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[i] = 0.5 * (1.0 - z);
    nodes[n - 1 - i] = 0.5 * (1.0 + z);
    weights[i] = weights[n - 1 - i] = 0.5 * w;
  }
}

}  // namespace levyma::quad
