#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "levyma/errors.hpp"

namespace levyma {

/// Exact rational number with 64-bit numerator/denominator and 128-bit
/// intermediates. Always normalized (den > 0, gcd 1).
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return double(num_) / double(den_); }
  bool is_integer() const noexcept { return den_ == 1; }

  /// Parses "p/q", an integer, or a finite decimal such as "-1.25".
  static Rational parse(const std::string& text) {
    const auto slash = text.find('/');
    try {
      if (slash != std::string::npos)
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
      const auto dot = text.find('.');
      if (dot == std::string::npos) return Rational(std::stoll(text));
      const std::string frac = text.substr(dot + 1);
      if (frac.size() > 15) throw ParameterError("Rational::parse: too many decimals in '" + text + "'");
      std::int64_t scale = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
      const bool neg = !text.empty() && text[0] == '-';
      const std::string whole = text.substr(0, dot);
      const std::int64_t w = whole.empty() || whole == "-" || whole == "+" ? 0 : std::llabs(std::stoll(whole));
      const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
      return Rational((neg ? -1 : 1) * (w * scale + f), scale);
    } catch (const std::logic_error&) {
      throw ParameterError("Rational::parse: cannot parse '" + text + "'");
    }
  }

  /// Best rational approximation with denominator <= max_den (continued fractions).
  static Rational from_double(double x, std::int64_t max_den = 1000000) {
    if (!std::isfinite(x)) throw ParameterError("Rational::from_double: non-finite value");
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double v = x;
    for (int i = 0; i < 64; ++i) {
      const double a = std::floor(v);
      const auto ai = static_cast<std::int64_t>(a);
      const std::int64_t q2 = q0 + ai * q1;
      if (q2 > max_den) break;
      const std::int64_t p2 = p0 + ai * p1;
      p0 = p1, q0 = q1, p1 = p2, q1 = q2;
      if (v - a < 1e-15) break;
      v = 1.0 / (v - a);
    }
    return Rational(p1, q1);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw ParameterError("Rational: division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational operator-() const { return Rational(-num_, den_); }

  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::string str() const { return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_); }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw ParameterError("Rational: zero denominator");
    if (d < 0) n = -n, d = -d;
    __int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) n /= a, d /= a;
    constexpr __int128 lim = INT64_MAX;
    if (n > lim || n < -lim || d > lim) throw ParameterError("Rational: overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }
  void assign(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace levyma
