#pragma once

// JSON encoding of models, kernels and test functions, shortest round-trip
// number formatting, and the binary path-dump format.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "levyma/errors.hpp"
#include "levyma/kernels.hpp"
#include "levyma/rng.hpp"
#include "levyma/simulate.hpp"
#include "levyma/stats.hpp"

namespace levyma {

using Json = nlohmann::json;

/// Shortest decimal string that parses back to exactly x.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double get_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get_number(j, key, where);
}

inline std::string get_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> number_list(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

inline Json to_json(const LevyModel& m) {
  if (const auto* s = std::get_if<SymmetricStable>(&m)) return {{"type", "stable"}, {"beta", s->beta}, {"scale", s->scale}};
  const auto& t = std::get<TemperedStable>(m);
  return {{"type", "tempered"}, {"zeta", t.zeta}, {"tempering", t.tempering}, {"truncation_eps", t.truncation_eps}};
}

inline LevyModel levy_from_json(const Json& j) {
  const std::string where = "levy";
  const std::string type = detail::get_string(j, "type", where);
  if (type == "stable") return SymmetricStable{detail::get_number(j, "beta", where), detail::number_or(j, "scale", 1.0, where)};
  if (type == "tempered") {
    const TemperedStable d{};
    return TemperedStable{detail::number_or(j, "zeta", d.zeta, where), detail::number_or(j, "tempering", d.tempering, where),
                          detail::number_or(j, "truncation_eps", d.truncation_eps, where)};
  }
  throw ConfigError("levy: unknown type '" + type + "'");
}

inline Json to_json(const KernelSpec& k) {
  return std::visit(detail::overloaded{[](const PowerLaw& p) -> Json {
                                         return {{"type", "power_law"}, {"gamma", p.gamma}, {"alpha", p.alpha}, {"K", p.K}};
                                       },
                                       [](const LfsnIncrement& p) -> Json {
                                         return {{"type", "lfsn"}, {"H", p.H}, {"beta", p.beta}};
                                       },
                                       [](const FractionalLevyIncrement& p) -> Json {
                                         return {{"type", "fln"}, {"rho", p.rho}};
                                       },
                                       [](const OuExponential& p) -> Json {
                                         return {{"type", "ou"}, {"lambda", p.lambda}};
                                       },
                                       [](const DiscreteMA& p) -> Json {
                                         return {{"type", "discrete_ma"}, {"b", p.b}};
                                       }},
                    k);
}

inline KernelSpec kernel_from_json(const Json& j) {
  const std::string where = "kernel";
  const std::string type = detail::get_string(j, "type", where);
  if (type == "power_law")
    return PowerLaw{detail::number_or(j, "gamma", 0.0, where), detail::get_number(j, "alpha", where),
                    detail::number_or(j, "K", 1.0, where)};
  if (type == "lfsn") return LfsnIncrement{detail::get_number(j, "H", where), detail::get_number(j, "beta", where)};
  if (type == "fln") return FractionalLevyIncrement{detail::get_number(j, "rho", where)};
  if (type == "ou") return OuExponential{detail::get_number(j, "lambda", where)};
  if (type == "discrete_ma") {
    DiscreteMA d{detail::number_list(j, "b", where)};
    if (d.b.empty()) throw ConfigError("kernel: discrete_ma needs a non-empty 'b'");
    return d;
  }
  throw ConfigError("kernel: unknown type '" + type + "'");
}

inline Json to_json(const TestFunction& f) {
  Json j = std::visit(
      detail::overloaded{[](const Cos& c) -> Json { return {{"type", "cos"}, {"theta", c.theta}}; },
                         [](const Sin& c) -> Json { return {{"type", "sin"}, {"theta", c.theta}}; },
                         [](const SmoothedIndicator& c) -> Json {
                           return {{"type", "smoothed_indicator"}, {"t", c.t}, {"h", c.h}};
                         },
                         [](const GaussBump& c) -> Json {
                           return {{"type", "gauss_bump"}, {"center", c.center}, {"width", c.width}};
                         }},
      f.shape());
  std::visit(detail::overloaded{[&](const Analytic&) { j["mean"] = "analytic"; },
                                [&](const QuadratureVsStableDensity&) { j["mean"] = "quadrature"; },
                                [&](const MonteCarloMean& m) {
                                  j["mean"] = "monte_carlo";
                                  j["mc_draws"] = m.draws;
                                  j["mc_seed"] = m.seed;
                                }},
             f.mean_mode());
  return j;
}

inline TestFunction test_function_from_json(const Json& j) {
  const std::string where = "f";
  const std::string type = detail::get_string(j, "type", where);
  TestFunction::Shape shape;
  if (type == "cos")
    shape = Cos{detail::number_or(j, "theta", 1.0, where)};
  else if (type == "sin")
    shape = Sin{detail::number_or(j, "theta", 1.0, where)};
  else if (type == "smoothed_indicator")
    shape = SmoothedIndicator{detail::number_or(j, "t", 0.0, where), detail::number_or(j, "h", 0.1, where)};
  else if (type == "gauss_bump")
    shape = GaussBump{detail::number_or(j, "center", 0.0, where), detail::number_or(j, "width", 1.0, where)};
  else
    throw ConfigError("f: unknown type '" + type + "'");
  MeanMode mode = Analytic{};
  const std::string m = j.contains("mean") ? detail::get_string(j, "mean", where) : "analytic";
  if (m == "quadrature")
    mode = QuadratureVsStableDensity{};
  else if (m == "monte_carlo")
    mode = MonteCarloMean{static_cast<std::size_t>(detail::number_or(j, "mc_draws", 100000, where)),
                          j.contains("mc_seed") ? j.at("mc_seed").get<std::uint64_t>() : 0};
  else if (m != "analytic")
    throw ConfigError("f: unknown mean mode '" + m + "'");
  try {
    return TestFunction(shape, mode);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("f: ") + e.what());
  }
}

/// Row-major little-endian float64 dump of `rows` paths of equal length.
inline void write_path_dump(const std::string& path, const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  for (const auto& row : rows) {
    for (double v : row) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::array<char, 8> bytes;
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(bytes.data(), 8);
    }
  }
  if (!out) throw InputError("write to '" + path + "' failed");
}

inline std::vector<double> read_path_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> out;
  std::array<unsigned char, 8> bytes;
  while (in.read(reinterpret_cast<char*>(bytes.data()), 8)) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
    out.push_back(std::bit_cast<double>(bits));
  }
  return out;
}

/// 64-bit FNV-1a, used for config hashes.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

}  // namespace levyma
