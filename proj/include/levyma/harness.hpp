#pragma once

// Experiment orchestration: config parsing, Monte Carlo rate runs, bound
// sweeps, rho tables, CSV / JSON reports and slope verdicts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levyma/bounds.hpp"
#include "levyma/errors.hpp"
#include "levyma/kernels.hpp"
#include "levyma/parallel.hpp"
#include "levyma/rational.hpp"
#include "levyma/rng.hpp"
#include "levyma/serialize.hpp"
#include "levyma/simulate.hpp"
#include "levyma/stats.hpp"

namespace levyma {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCsvHeader = "experiment,n,metric,value,stderr,R,seed,flag";

enum class ExperimentKind { RateMc, BoundQuadrature, RhoDecay, VarianceCheck };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::RateMc: return "rate-mc";
    case ExperimentKind::BoundQuadrature: return "bound-quadrature";
    case ExperimentKind::RhoDecay: return "rho-decay";
    case ExperimentKind::VarianceCheck: return "variance-check";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::RateMc, ExperimentKind::BoundQuadrature, ExperimentKind::RhoDecay,
                 ExperimentKind::VarianceCheck})
    if (to_string(k) == s) return k;
  throw ConfigError("experiment: unknown kind '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::RateMc;
  std::string name = "experiment";
  /// Named example {"example": "lfsn" | "fln" | "farima" | "ou" | "debug-gaussian", params...}
  /// or explicit {"levy": {...}, "kernel": {...}}. Stored in canonical form.
  Json model;
  Json f;  ///< canonical test-function JSON
  std::vector<std::size_t> n_grid;
  std::size_t R = 1000;
  std::uint64_t seed = 1;

  // Lattice. horizon 0 means automatic.
  std::size_t steps_per_unit = 4;
  double horizon = 0.0;
  double horizon_factor = 2.0;
  double horizon_tol = 1e-3;

  // Rate runs.
  std::vector<std::string> metrics{"dK", "dW"};
  std::string normalization = "vn";  ///< "vn": per-n RMS of V_n; "v": plug-in v-hat
  bool report_v_hat = true;
  std::size_t j_max = 50;
  std::size_t variance_window = 4096;
  std::size_t variance_R = 200;
  std::size_t bootstrap = 200;

  // Verdicts. band 0 selects the default (0.15, or 0.25 with a log factor or p = beta).
  double band = 0.0;
  std::string alpha_beta;  ///< optional exact override, e.g. "5/2"

  // Bound sweeps.
  double p = 2.0, q = 3.0, C_kappa = 1.0, rel_tol = 1e-4;
  bool gamma = true;

  // rho tables.
  double rho_tol = 1e-8;

  std::string output;  ///< file stem; defaults to name
};

namespace detail {

inline Rational rational_param(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  try {
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    if (v.is_number()) return Rational::from_double(v.get<double>());
  } catch (const ParameterError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": '" + key + "' must be a number or a rational string");
}

inline double real_param(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (v.is_string()) return rational_param(j, key, where).to_double();
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline std::size_t count_or(const Json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(where + ": '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::string string_or(const Json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get_string(j, key, where);
}

inline bool bool_or(const Json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + ": '" + key + "' must be true or false");
  return j.at(key).get<bool>();
}

// Fills defaults for named-example parameters.
inline Json canonical_model(const Json& m) {
  const std::string where = "model";
  if (!m.is_object()) throw ConfigError("model: must be an object");
  Json out = m;
  if (m.contains("example")) {
    const std::string ex = get_string(m, "example", where);
    auto def = [&](const char* key, Json v) {
      if (!out.contains(key)) out[key] = std::move(v);
    };
    if (ex == "lfsn") {
      require(m, "H", where);
      require(m, "beta", where);
      def("sigma", 1.0);
    } else if (ex == "fln") {
      require(m, "rho", where);
      const TemperedStable d{};
      def("zeta", d.zeta);
      def("tempering", d.tempering);
      def("truncation_eps", d.truncation_eps);
      def("epsilon", "1/100");
    } else if (ex == "farima") {
      require(m, "d", where);
      require(m, "beta", where);
      def("sigma", 1.0);
      def("length", 0);
    } else if (ex == "ou") {
      def("lambda", 1.0);
      def("beta", 1.5);
      def("sigma", 1.0);
    } else if (ex != "debug-gaussian") {
      throw ConfigError("model: unknown example '" + ex + "' (expected lfsn, fln, farima, ou, debug-gaussian)");
    }
    return out;
  }
  if (!m.contains("levy") || !m.contains("kernel")) throw ConfigError("model: needs 'example' or both 'levy' and 'kernel'");
  out = Json::object();
  out["levy"] = to_json(levy_from_json(m.at("levy")));
  out["kernel"] = to_json(kernel_from_json(m.at("kernel")));
  return out;
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = to_string(c.kind);
  j["name"] = c.name;
  j["model"] = c.model;
  j["f"] = c.f;
  j["n_grid"] = c.n_grid;
  j["R"] = c.R;
  j["seed"] = c.seed;
  j["grid"] = {{"steps_per_unit", c.steps_per_unit},
               {"horizon", c.horizon},
               {"horizon_factor", c.horizon_factor},
               {"horizon_tol", c.horizon_tol}};
  j["metrics"] = c.metrics;
  j["normalization"] = c.normalization;
  j["report_v_hat"] = c.report_v_hat;
  j["variance"] = {{"j_max", c.j_max}, {"window", c.variance_window}, {"R", c.variance_R}};
  j["bootstrap"] = c.bootstrap;
  j["band"] = c.band;
  j["alpha_beta"] = c.alpha_beta;
  j["bounds"] = {{"p", c.p}, {"q", c.q}, {"C_kappa", c.C_kappa}, {"rel_tol", c.rel_tol}, {"gamma", c.gamma}};
  j["rho"] = {{"tol", c.rho_tol}};
  j["output"] = c.output;
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

struct ResolvedModel {
  ProcessModel model;
  bool debug_gaussian = false;
  std::optional<CorollaryRates> rates;
  std::optional<Rational> alpha_beta;
  std::string description;
};

/// Expands the model block of a config; named examples are checked against
/// their corollary domain and refused with the violated condition.
inline ResolvedModel resolve_model(const ExperimentConfig& c) {
  const Json& m = c.model;
  const std::string where = "model";
  ResolvedModel out;
  auto domain = [&](auto&& fn) {
    try {
      return fn();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
  };
  std::optional<Rational> override_ab;
  if (!c.alpha_beta.empty()) {
    try {
      override_ab = Rational::parse(c.alpha_beta);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("alpha_beta: ") + e.what());
    }
  }
  if (m.contains("example")) {
    const std::string ex = detail::get_string(m, "example", where);
    out.description = ex;
    if (ex == "debug-gaussian") {
      out.debug_gaussian = true;
      out.model = {SymmetricStable{2.0, std::sqrt(0.5)}, DiscreteMA{{1.0}}};
      return out;
    }
    if (ex == "lfsn") {
      const Rational H = detail::rational_param(m, "H", where), beta = detail::rational_param(m, "beta", where);
      out.rates = domain([&] { return corollary_rate(LfsnExample{H, beta}); });
      out.alpha_beta = (Rational(1) - H + Rational(1) / beta) * beta;
      out.model = {SymmetricStable{beta.to_double(), detail::real_param(m, "sigma", where)},
                   LfsnIncrement{H.to_double(), beta.to_double()}};
    } else if (ex == "fln") {
      const Rational rho = detail::rational_param(m, "rho", where), zeta = detail::rational_param(m, "zeta", where);
      const Rational eps = detail::rational_param(m, "epsilon", where);
      out.rates = domain([&] { return corollary_rate(FlnExample{rho, eps, zeta}); });
      out.model = {TemperedStable{zeta.to_double(), detail::real_param(m, "tempering", where),
                                  detail::real_param(m, "truncation_eps", where)},
                   FractionalLevyIncrement{rho.to_double()}};
    } else if (ex == "farima") {
      const Rational d = detail::rational_param(m, "d", where), beta = detail::rational_param(m, "beta", where);
      out.rates = domain([&] { return corollary_rate(ArimaExample{d, beta}); });
      out.alpha_beta = (Rational(1) - d) * beta;
      std::size_t len = detail::count_or(m, "length", 0, where);
      if (len == 0) {
        const std::size_t n_max = c.n_grid.empty() ? 1 : c.n_grid.back();
        len = std::max<std::size_t>(1024, static_cast<std::size_t>(std::ceil(c.horizon_factor * double(n_max))));
      }
      const auto b = domain([&] { return arima_coefficients({}, {}, d.to_double(), len); });
      out.model = {SymmetricStable{beta.to_double(), detail::real_param(m, "sigma", where)}, DiscreteMA{b}};
    } else if (ex == "ou") {
      out.rates = corollary_rate(OuExample{});
      const double lambda = detail::real_param(m, "lambda", where), beta = detail::real_param(m, "beta", where);
      if (!(lambda > 0.0)) throw ConfigError("model: ou requires lambda > 0");
      if (!(beta > 0.0 && beta < 2.0)) throw ConfigError("model: ou requires 0 < beta < 2");
      out.model = {SymmetricStable{beta, detail::real_param(m, "sigma", where)}, OuExponential{lambda}};
    }
  } else {
    out.model = {levy_from_json(m.at("levy")), kernel_from_json(m.at("kernel"))};
    out.description = "explicit";
    const double decay = kernel_decay_exponent(out.model.kernel);
    if (const auto* s = std::get_if<SymmetricStable>(&out.model.levy)) {
      if (std::isfinite(decay)) {
        out.alpha_beta = Rational::from_double(decay * s->beta);
      } else {
        out.rates = corollary_rate(OuExample{});
      }
    }
  }
  if (override_ab) out.alpha_beta = override_ab;
  if (out.alpha_beta && !out.rates && *out.alpha_beta > Rational(2))
    out.rates = CorollaryRates{theoretical_rate(*out.alpha_beta, RateMetric::Wasserstein),
                               theoretical_rate(*out.alpha_beta, RateMetric::Kolmogorov)};
  try {
    validate(out.model.levy);
    validate(out.model);
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return out;
}

/// Parses and validates a config document; defaults are filled so that
/// serialize(parse(text)) is a fixed point.
inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const std::string where = "config";
  ExperimentConfig c;
  try {
    c.kind = experiment_kind_from_string(detail::string_or(j, "experiment", "rate-mc", where));
    c.name = detail::string_or(j, "name", c.name, where);
    if (c.name.empty() || c.name.find_first_of(",\n\r\"/\\") != std::string::npos)
      throw ConfigError("config: name must be non-empty without commas, quotes, slashes or newlines");
    if (!j.contains("model")) throw ConfigError("config: missing key 'model'");
    c.model = detail::canonical_model(j.at("model"));
    c.f = to_json(test_function_from_json(j.contains("f") ? j.at("f") : Json{{"type", "cos"}, {"theta", 1.0}}));
    if (!j.contains("n_grid") || !j.at("n_grid").is_array() || j.at("n_grid").empty())
      throw ConfigError("config: 'n_grid' must be a non-empty array");
    for (const auto& v : j.at("n_grid")) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError("config: n_grid entries must be positive integers");
      c.n_grid.push_back(v.get<std::size_t>());
    }
    for (std::size_t i = 1; i < c.n_grid.size(); ++i)
      if (c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("config: n_grid must be strictly increasing");
    c.R = detail::count_or(j, "R", c.R, where);
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("config: 'seed' must be a non-negative integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
    const Json grid = j.value("grid", Json::object());
    c.steps_per_unit = detail::count_or(grid, "steps_per_unit", c.steps_per_unit, "grid");
    c.horizon = detail::number_or(grid, "horizon", c.horizon, "grid");
    c.horizon_factor = detail::number_or(grid, "horizon_factor", c.horizon_factor, "grid");
    c.horizon_tol = detail::number_or(grid, "horizon_tol", c.horizon_tol, "grid");
    if (c.steps_per_unit < 1) throw ConfigError("grid: steps_per_unit must be >= 1");
    if (!(c.horizon == 0.0 || c.horizon >= 1.0)) throw ConfigError("grid: horizon must be 0 (auto) or >= 1");
    if (!(c.horizon_factor >= 0.0)) throw ConfigError("grid: horizon_factor must be >= 0");
    if (!(c.horizon_tol > 0.0 && c.horizon_tol < 1.0)) throw ConfigError("grid: horizon_tol must lie in (0, 1)");
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& v : j.at("metrics")) {
        if (!v.is_string() || (v != "dK" && v != "dW")) throw ConfigError("config: metrics must be \"dK\" or \"dW\"");
        c.metrics.push_back(v.get<std::string>());
      }
      if (c.metrics.empty()) throw ConfigError("config: metrics must not be empty");
    }
    c.normalization = detail::string_or(j, "normalization", c.normalization, where);
    if (c.normalization != "vn" && c.normalization != "v") throw ConfigError("config: normalization must be \"vn\" or \"v\"");
    c.report_v_hat = detail::bool_or(j, "report_v_hat", c.report_v_hat, where);
    const Json var = j.value("variance", Json::object());
    c.j_max = detail::count_or(var, "j_max", c.j_max, "variance");
    c.variance_window = detail::count_or(var, "window", c.variance_window, "variance");
    c.variance_R = detail::count_or(var, "R", c.variance_R, "variance");
    if (c.j_max < 1 || c.variance_window < 1 || c.variance_R < 2) throw ConfigError("variance: need j_max >= 1, window >= 1, R >= 2");
    c.bootstrap = detail::count_or(j, "bootstrap", c.bootstrap, where);
    c.band = detail::number_or(j, "band", c.band, where);
    if (!(c.band >= 0.0)) throw ConfigError("config: band must be >= 0");
    c.alpha_beta = detail::string_or(j, "alpha_beta", "", where);
    const Json b = j.value("bounds", Json::object());
    c.p = detail::number_or(b, "p", c.p, "bounds");
    c.q = detail::number_or(b, "q", c.q, "bounds");
    c.C_kappa = detail::number_or(b, "C_kappa", c.C_kappa, "bounds");
    c.rel_tol = detail::number_or(b, "rel_tol", c.rel_tol, "bounds");
    c.gamma = detail::bool_or(b, "gamma", c.gamma, "bounds");
    const Json rho = j.value("rho", Json::object());
    c.rho_tol = detail::number_or(rho, "tol", c.rho_tol, "rho");
    c.output = detail::string_or(j, "output", "", where);
    if (c.output.empty()) c.output = c.name;
    if (c.kind == ExperimentKind::RateMc && c.R < 100) throw ConfigError("config: rate-mc requires R >= 100");
    if (c.kind == ExperimentKind::VarianceCheck && c.R < 2) throw ConfigError("config: variance-check requires R >= 2");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  resolve_model(c);  // domain checks at parse time
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

struct ReportRow {
  std::string experiment;
  std::size_t n = 0;
  std::string metric;
  double value = 0.0;
  double stderr = 0.0;
  std::size_t R = 0;
  std::uint64_t seed = 0;
  std::string flag = "ok";
  std::size_t n_index = 0;  ///< position in n_grid; streams are (n_index << 32) | r
};

struct SlopeFit {
  std::string metric;
  std::size_t points = 0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double stderr = std::numeric_limits<double>::quiet_NaN();
  std::optional<RateClass> theory;
  double band = 0.0;
  std::string verdict = "inconclusive";
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<SlopeFit> fits;
  Json notes = Json::object();
  bool incomplete = false;
  double wall_time = 0.0;
  unsigned threads = 1;

  bool has_violation() const {
    return std::any_of(fits.begin(), fits.end(), [](const SlopeFit& f) { return f.verdict == "violation"; });
  }
};

inline std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.experiment + "," + std::to_string(r.n) + "," + r.metric + "," + format_double(r.value) + "," +
           format_double(r.stderr) + "," + std::to_string(r.R) + "," + std::to_string(r.seed) + "," + r.flag + "\n";
  }
  return out;
}

/// Parses the CSV schema; rejects any other header.
inline std::vector<ReportRow> parse_csv(const std::string& text, const std::string& source = "csv") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InputError(source + ": header must be '" + std::string(kCsvHeader) + "'");
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 8) throw InputError(source + ":" + std::to_string(lineno) + ": expected 8 columns");
    try {
      ReportRow r;
      r.experiment = cells[0];
      r.n = std::stoull(cells[1]);
      r.metric = cells[2];
      r.value = std::stod(cells[3]);
      r.stderr = std::stod(cells[4]);
      r.R = std::stoull(cells[5]);
      r.seed = std::stoull(cells[6]);
      r.flag = cells[7];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InputError(source + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

inline double default_band(const RateClass& theory, bool p_equals_beta) {
  return theory.log_power > 0 || theory.epsilon_loss || p_equals_beta ? 0.25 : 0.15;
}

/// Weighted log-log fit over rows flagged "ok" for one metric, then the
/// verdict against the theoretical exponent. Bounds are upper bounds, so a
/// slope below the band reads "faster"; a slope above it is a violation only
/// when it clears the band by two standard errors.
inline SlopeFit fit_rows(const std::vector<ReportRow>& rows, const std::string& metric,
                         const std::optional<RateClass>& theory, double band) {
  SlopeFit fit;
  fit.metric = metric;
  fit.theory = theory;
  fit.band = band;
  std::vector<double> ns, vals, w;
  std::size_t total = 0, floor_limited = 0;
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    ++total;
    if (r.flag == "floor-limited") ++floor_limited;
    if (r.flag != "ok" || !(r.value > 0.0)) continue;
    ns.push_back(double(r.n));
    vals.push_back(r.value);
    w.push_back(r.stderr > 0.0 ? (r.value / r.stderr) * (r.value / r.stderr) : 1.0);
  }
  fit.points = ns.size();
  if (ns.size() < 3) {
    fit.verdict = total > 0 && floor_limited * 2 > total ? "floor-limited" : "inconclusive";
    return fit;
  }
  const RateFit rf = fit_rate(ns, vals, w);
  fit.slope = rf.slope;
  fit.stderr = rf.stderr;
  if (!theory) {
    fit.verdict = "inconclusive";
    return fit;
  }
  const double e = theory->exponent.to_double();
  const double diff = fit.slope - e;
  if (std::abs(diff) <= band)
    fit.verdict = "within-band";
  else if (diff < -band)
    fit.verdict = "faster";
  else
    fit.verdict = fit.slope - 2.0 * fit.stderr > e + band ? "violation" : "inconclusive";
  return fit;
}

namespace detail {

inline std::optional<RateClass> rate_for(const ResolvedModel& rm, const std::string& metric) {
  if (!rm.rates) return std::nullopt;
  return metric == "dK" ? rm.rates->kolmogorov : rm.rates->wasserstein;
}

inline double resolve_band(const ExperimentConfig& c, const std::optional<RateClass>& theory, bool p_equals_beta = false) {
  if (c.band > 0.0) return c.band;
  return theory ? default_band(*theory, p_equals_beta) : 0.15;
}

/// Lattice for path length n: DiscreteMA kernels use unit cells and their
/// full length; other kernels use max(default horizon, factor * n) unless
/// the config pins the horizon. Exponentially decaying kernels skip the
/// n-proportional part.
inline SimGrid grid_for(const ExperimentConfig& c, const ProcessModel& model, std::size_t n) {
  if (const auto* dm = std::get_if<DiscreteMA>(&model.kernel)) return {1, double(std::max<std::size_t>(dm->b.size(), 1)), n};
  SimGrid g{c.steps_per_unit, c.horizon, n};
  if (g.horizon == 0.0) {
    double h = default_horizon(model, c.steps_per_unit, c.horizon_tol);
    if (std::isfinite(kernel_decay_exponent(model.kernel))) h = std::max(h, std::ceil(c.horizon_factor * double(n)));
    g.horizon = h;
  }
  return g;
}

inline PathSampler sampler_for(const ExperimentConfig& c, const ResolvedModel& rm, std::size_t n) {
  if (rm.debug_gaussian) {
    return [](std::size_t len, RngStream& s) {
      std::vector<double> x(len);
      for (auto& v : x) v = s.normal();
      return x;
    };
  }
  return make_path_sampler(rm.model, grid_for(c, rm.model, n));
}

/// E f(X_1): symmetry gives 0 for Sin; stable noise uses expected_f;
/// otherwise a MonteCarloMean mode averages f over simulated values.
inline double model_mean(const ExperimentConfig& c, const ResolvedModel& rm, const TestFunction& f) {
  if (std::holds_alternative<Sin>(f.shape())) return 0.0;
  if (std::holds_alternative<SymmetricStable>(rm.model.levy)) return expected_f(rm.model, f);
  const auto* mc = std::get_if<MonteCarloMean>(&f.mean_mode());
  if (mc == nullptr)
    throw ConfigError("f: tempered noise has no closed-form marginal; use Sin or mean \"monte_carlo\"");
  const std::size_t chunk = 256;
  const std::size_t paths = std::max<std::size_t>(1, (mc->draws + chunk - 1) / chunk);
  const auto sampler = make_path_sampler(rm.model, grid_for(c, rm.model, chunk));
  long double acc = 0.0L;
  for (std::size_t i = 0; i < paths; ++i) {
    RngStream s(mc->seed, i);
    for (double x : sampler(chunk, s)) acc += f(x);
  }
  return static_cast<double>(acc / (long double)(paths * chunk));
}

inline std::uint64_t stream_of(std::size_t n_index, std::size_t r) { return (std::uint64_t(n_index) << 32) | std::uint64_t(r); }
inline constexpr std::uint64_t kBootstrapStreams = 1ULL << 63;
inline constexpr std::uint64_t kVarianceStreams = 1ULL << 62;

}  // namespace detail

/// Monte Carlo estimates of d_K / d_W between the normalized V_n and N(0, 1)
/// for every n in the grid, then slope fits and verdicts.
inline ExperimentReport run_rate_experiment(const ExperimentConfig& c, unsigned threads = default_thread_count()) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = c;
  rep.threads = threads;
  const ResolvedModel rm = resolve_model(c);
  const TestFunction f = test_function_from_json(c.f);
  const double mean = rm.debug_gaussian ? 0.0 : detail::model_mean(c, rm, f);
  rep.notes["mean_f"] = mean;
  rep.notes["normalization"] = c.normalization == "vn" ? "per-n RMS of V_n over the R replications"
                                                      : "plug-in v-hat from lagged autocovariances";
  const double floor = 3.0 / std::sqrt(double(c.R));
  rep.notes["mc_floor"] = floor;

  double v_hat = std::numeric_limits<double>::quiet_NaN();
  if (!rm.debug_gaussian && (c.normalization == "v" || c.report_v_hat)) {
    const auto sampler = detail::sampler_for(c, rm, c.variance_window + c.j_max);
    const VarianceEstimate est = estimate_variance(sampler, f, mean, c.j_max, c.variance_window, c.variance_R, c.seed,
                                                   detail::kVarianceStreams, threads);
    v_hat = std::sqrt(est.v_hat2);
    rep.rows.push_back({c.name, c.variance_window, "v_hat", v_hat, est.v_hat2_stderr / (2.0 * v_hat), c.variance_R,
                        c.seed, "ok", 0});
    rep.notes["v_hat2"] = est.v_hat2;
    rep.notes["vn_hat2_window"] = est.vn_hat2;
  }

  for (std::size_t ni = 0; ni < c.n_grid.size(); ++ni) {
    const std::size_t n = c.n_grid[ni];
    std::vector<double> V(c.R);
    try {
      const PathSampler sampler = detail::sampler_for(c, rm, n);
      parallel_for(c.R, threads, [&](std::size_t r) {
        RngStream s(c.seed, detail::stream_of(ni, r));
        const std::vector<double> x = sampler(n, s);
        if (rm.debug_gaussian) {
          long double acc = 0.0L;
          for (double v : x) acc += v;
          V[r] = static_cast<double>(acc / std::sqrt((long double)n));
        } else {
          V[r] = compute_vn(x, f, mean);
        }
      });
    } catch (const ResourceError& e) {
      rep.incomplete = true;
      rep.notes["incomplete_reason"] = e.what();
      break;
    }
    double m2 = 0.0, m4 = 0.0;
    for (double v : V) m2 += v * v, m4 += v * v * v * v;
    m2 /= double(c.R);
    m4 /= double(c.R);
    const double vn = std::sqrt(m2);
    const double vn_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / double(c.R)) / (2.0 * std::max(vn, 1e-300));
    rep.rows.push_back({c.name, n, "vn_hat", vn, vn_se, c.R, c.seed, "ok", ni});
    const double norm = c.normalization == "v" ? v_hat : vn;
    if (!(norm > 0.0)) throw DegenerateVarianceError("run_rate_experiment: normalizer is zero at n = " + std::to_string(n), norm);
    for (auto& v : V) v /= norm;
    for (std::size_t mi = 0; mi < c.metrics.size(); ++mi) {
      const Metric metric = c.metrics[mi] == "dK" ? Metric::Kolmogorov : Metric::Wasserstein1;
      const DistanceEstimate d =
          bootstrap_distance(V, metric, n, c.bootstrap, c.seed, detail::kBootstrapStreams | detail::stream_of(ni, mi));
      rep.rows.push_back({c.name, n, c.metrics[mi], d.value, d.mc_stderr, c.R, c.seed,
                          d.value < floor ? "floor-limited" : "ok", ni});
    }
  }
  for (const auto& metric : c.metrics) {
    const auto theory = detail::rate_for(rm, metric);
    rep.fits.push_back(fit_rows(rep.rows, metric, theory, detail::resolve_band(c, theory)));
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// rho_0 .. rho_{count-1}; lags past an exponential underflow are set to zero.
inline std::vector<double> rho_table(const KernelSpec& kernel, double beta, std::size_t count, double tol = 1e-8) {
  std::vector<double> rho(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    rho[k] = rho_k(kernel, beta, k, tol);
    if (k > 0 && !std::isfinite(kernel_decay_exponent(kernel)) && rho[k] < 1e-30 * rho[0]) break;
  }
  return rho;
}

/// min_integral(p, q) and the rho-sum proxy n gamma_1^2 across the n grid.
inline ExperimentReport run_bound_experiment(const ExperimentConfig& c, unsigned threads = default_thread_count()) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = c;
  rep.threads = threads;
  const ResolvedModel rm = resolve_model(c);
  const auto* st = std::get_if<SymmetricStable>(&rm.model.levy);
  if (st == nullptr || rm.debug_gaussian) throw ConfigError("bound-quadrature: needs symmetric stable noise and a kernel");
  const IntensityMeasure measure{st->beta, c.C_kappa};
  std::optional<RateClass> theory;
  if (rm.alpha_beta) {
    theory = min_integral_rate(*rm.alpha_beta, Rational::from_double(c.q));
  } else if (!std::isfinite(kernel_decay_exponent(rm.model.kernel))) {
    theory = min_integral_rate(Rational(1000), Rational::from_double(c.q));
  }
  std::vector<MinIntegralResult> results(c.n_grid.size());
  MinIntegralOptions opt;
  opt.rel_tol = c.rel_tol;
  parallel_for(c.n_grid.size(), threads, [&](std::size_t i) {
    results[i] = min_integral(c.p, c.q, c.n_grid[i], rm.model.kernel, measure, opt);
  });
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    rep.rows.push_back({c.name, c.n_grid[i], "min_integral", results[i].value, results[i].abs_error, 0, c.seed,
                        results[i].converged ? "ok" : "accuracy", i});
  rep.fits.push_back(fit_rows(rep.rows, "min_integral", theory, detail::resolve_band(c, theory, c.p == st->beta)));

  if (c.gamma) {
    // n gamma_1^2 <= (rho_0 + 2 sum_{k=1}^{n-1} rho_k)^3 holds term by term.
    const std::vector<double> rho = rho_table(rm.model.kernel, st->beta, c.n_grid.back(), c.rho_tol);
    bool bounded = true;
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
      const std::size_t n = c.n_grid[i];
      const double g = double(n) * gamma12_proxy(n, rho).gamma1_sq;
      double two_sided = rho[0];
      for (std::size_t k = 1; k < n; ++k) two_sided += 2.0 * rho[k];
      const double bound = two_sided * two_sided * two_sided;
      const bool ok = g <= 1.1 * bound;
      bounded = bounded && ok;
      rep.rows.push_back({c.name, n, "n_gamma1_sq", g, 0.0, 0, c.seed, ok ? "ok" : "above-bound", i});
      rep.rows.push_back({c.name, n, "rho_sum_cubed", bound, 0.0, 0, c.seed, "ok", i});
    }
    SlopeFit gf;
    gf.metric = "n_gamma1_sq";
    gf.points = c.n_grid.size();
    gf.band = 0.1;
    gf.verdict = bounded ? "bounded" : "violation";
    rep.fits.push_back(gf);
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// rho_k at k in n_grid with the log-log slope against -alpha beta / 2.
inline ExperimentReport run_rho_experiment(const ExperimentConfig& c, unsigned threads = default_thread_count()) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = c;
  rep.threads = threads;
  const ResolvedModel rm = resolve_model(c);
  const auto* st = std::get_if<SymmetricStable>(&rm.model.levy);
  if (st == nullptr || rm.debug_gaussian) throw ConfigError("rho-decay: needs symmetric stable noise and a kernel");
  std::vector<quad::Result> res(c.n_grid.size());
  parallel_for(c.n_grid.size(), threads, [&](std::size_t i) {
    quad::Result r;
    const double offs[2] = {0.0, double(c.n_grid[i])};
    r = overlap_integral(rm.model.kernel, offs, st->beta / 2.0, {c.rho_tol, 100000, 0.0});
    res[i] = r;
  });
  for (std::size_t i = 0; i < c.n_grid.size(); ++i)
    rep.rows.push_back({c.name, c.n_grid[i], "rho", res[i].value, res[i].abs_error, 0, c.seed,
                        res[i].converged ? "ok" : "accuracy", i});
  std::optional<RateClass> theory;
  if (rm.alpha_beta) theory = RateClass{-*rm.alpha_beta / Rational(2), 0};
  rep.fits.push_back(fit_rows(rep.rows, "rho", theory, detail::resolve_band(c, theory)));
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Plug-in long-run variance against the direct variance of V_n, with the
/// window set to each n in the grid.
inline ExperimentReport run_variance_experiment(const ExperimentConfig& c, unsigned threads = default_thread_count()) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = c;
  rep.threads = threads;
  const ResolvedModel rm = resolve_model(c);
  if (rm.debug_gaussian) throw ConfigError("variance-check: needs a process model");
  const TestFunction f = test_function_from_json(c.f);
  const double mean = detail::model_mean(c, rm, f);
  bool consistent = true;
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    const std::size_t n = c.n_grid[i];
    const auto sampler = detail::sampler_for(c, rm, n + c.j_max);
    const VarianceEstimate est =
        estimate_variance(sampler, f, mean, c.j_max, n, c.R, c.seed, detail::stream_of(i, 0), threads);
    const bool ok = std::abs(est.v_hat2 - est.vn_hat2) <= 3.0 * std::hypot(est.v_hat2_stderr, est.vn_hat2_stderr);
    consistent = consistent && ok;
    rep.rows.push_back({c.name, n, "v_hat2", est.v_hat2, est.v_hat2_stderr, c.R, c.seed, "ok", i});
    rep.rows.push_back({c.name, n, "vn_hat2", est.vn_hat2, est.vn_hat2_stderr, c.R, c.seed, ok ? "ok" : "disagrees", i});
  }
  SlopeFit vf;
  vf.metric = "v_hat2";
  vf.points = c.n_grid.size();
  vf.verdict = consistent ? "consistent" : "inconsistent";
  rep.fits.push_back(vf);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& c, unsigned threads = default_thread_count()) {
  switch (c.kind) {
    case ExperimentKind::RateMc: return run_rate_experiment(c, threads);
    case ExperimentKind::BoundQuadrature: return run_bound_experiment(c, threads);
    case ExperimentKind::RhoDecay: return run_rho_experiment(c, threads);
    case ExperimentKind::VarianceCheck: return run_variance_experiment(c, threads);
  }
  throw ConfigError("unknown experiment kind");
}

inline Json to_json(const SlopeFit& f) {
  Json j{{"metric", f.metric}, {"points", f.points}, {"band", f.band}, {"verdict", f.verdict}};
  j["slope"] = std::isfinite(f.slope) ? Json(f.slope) : Json(nullptr);
  j["stderr"] = std::isfinite(f.stderr) ? Json(f.stderr) : Json(nullptr);
  if (f.theory) {
    j["theory"] = f.theory->str();
    j["theory_exponent"] = f.theory->exponent.str();
  }
  return j;
}

inline Json to_json(const ExperimentReport& r) {
  Json j;
  const std::string cfg = serialize_config(r.config);
  j["config"] = to_json(r.config);
  j["provenance"] = {{"config_hash", hex64(fnv1a64(cfg))},
                     {"seed", r.config.seed},
                     {"version", kVersion},
                     {"wall_time_s", r.wall_time},
                     {"threads", r.threads},
                     {"stream_rule", "path r at n_grid[i] uses stream (seed, (i << 32) | r)"}};
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"experiment", row.experiment}, {"n", row.n}, {"metric", row.metric}, {"value", format_double(row.value)},
                    {"stderr", format_double(row.stderr)}, {"R", row.R}, {"seed", row.seed}, {"flag", row.flag},
                    {"n_index", row.n_index}});
  j["rows"] = rows;
  Json fits = Json::array();
  for (const auto& f : r.fits) fits.push_back(to_json(f));
  j["fits"] = fits;
  j["notes"] = r.notes;
  j["incomplete"] = r.incomplete;
  return j;
}

/// One line per fit, for terminals.
inline std::string summary_lines(const ExperimentReport& r) {
  std::string out;
  for (const auto& f : r.fits) {
    out += r.config.name + " " + f.metric + ": " + f.verdict;
    if (std::isfinite(f.slope)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " slope %.4f +- %.4f over %zu points", f.slope, f.stderr, f.points);
      out += buf;
    }
    if (f.theory) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ", band %.2f", f.band);
      out += ", theory " + f.theory->str() + buf;
    }
    out += "\n";
  }
  if (r.incomplete) out += r.config.name + ": incomplete (" + r.notes.value("incomplete_reason", std::string()) + ")\n";
  return out;
}

/// Merged summary of CSV reports: per (experiment, metric) slope over rows
/// flagged "ok", without theory.
inline std::vector<std::pair<std::string, SlopeFit>> summarize_rows(const std::vector<ReportRow>& rows) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) {
    const auto key = std::pair{r.experiment, r.metric};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<std::pair<std::string, SlopeFit>> out;
  for (const auto& [exp, metric] : keys) {
    std::vector<ReportRow> sub;
    for (const auto& r : rows)
      if (r.experiment == exp) sub.push_back(r);
    out.emplace_back(exp, fit_rows(sub, metric, std::nullopt, 0.15));
  }
  return out;
}

}  // namespace levyma
