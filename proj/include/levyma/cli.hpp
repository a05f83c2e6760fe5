#pragma once

// Command-line front end. Exit codes: 0 ok, 1 usage, 2 invalid config or
// input, 3 numerical failure or incomplete run, 4 verdict violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levyma/harness.hpp"

namespace levyma {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitNumerical = 3, kExitViolation = 4 };

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json rate_json(const RateClass& r) {
  return {{"exponent", r.exponent.str()}, {"log_power", r.log_power}, {"epsilon_loss", r.epsilon_loss}, {"rate", r.str()}};
}

inline CorollaryExample example_from_params(const std::string& name, const std::map<std::string, std::string>& params) {
  auto get = [&](const char* key, const char* fallback = nullptr) {
    const auto it = params.find(key);
    if (it != params.end()) return Rational::parse(it->second);
    if (fallback) return Rational::parse(fallback);
    throw ConfigError("table: example '" + name + "' needs --param " + key + "=<value>");
  };
  if (name == "lfsn") return LfsnExample{get("H"), get("beta")};
  if (name == "fln") return FlnExample{get("rho"), get("epsilon", "1/100"), get("zeta", "0")};
  if (name == "farima") return ArimaExample{get("d"), get("beta")};
  if (name == "ou") return OuExample{};
  throw ConfigError("table: unknown example '" + name + "'");
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Berry-Esseen rate experiments for Levy moving averages", "levyma"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", format = "both";
  std::uint64_t seed = 0;
  unsigned threads = default_thread_count();

  std::vector<CLI::Option*> seed_opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    seed_opts.push_back(sub->add_option("--seed", seed, "override the master seed"));
    sub->add_option("--threads", threads, "worker threads (default $LEVYMA_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "files to write")->check(CLI::IsMember({"csv", "json", "both"}));
  };
  auto* rates = app.add_subcommand("rates", "Monte Carlo distances to N(0,1) across n (rate-mc, variance-check)");
  auto* bounds = app.add_subcommand("bounds", "min-integral and gamma proxy sweeps (bound-quadrature)");
  auto* rho = app.add_subcommand("rho", "rho_k table and decay slope (rho-decay)");
  auto* simulate = app.add_subcommand("simulate", "dump simulated paths as little-endian float64");
  for (auto* s : {rates, bounds, rho, simulate}) add_common(s);
  std::size_t paths = 16;
  simulate->add_option("--paths", paths, "paths per n (default 16, at most R)")->check(CLI::PositiveNumber);

  auto* table = app.add_subcommand("table", "exponent tables for alpha*beta values or a named example");
  std::vector<std::string> ab_values, param_values;
  std::string example, q_value;
  std::string table_format = "csv";
  table->add_option("--alpha-beta", ab_values, "alpha*beta values, e.g. 5/2 (repeatable)");
  table->add_option("--example", example, "lfsn | fln | farima | ou");
  table->add_option("--param", param_values, "example parameter key=value (repeatable)");
  table->add_option("--q", q_value, "also print the min-integral exponent for this q");
  table->add_option("--format", table_format, "output format")->check(CLI::IsMember({"csv", "json"}));

  auto* report = app.add_subcommand("report", "merge CSV reports and fit slopes per experiment and metric");
  std::vector<std::string> csv_inputs;
  std::string report_out;
  report->add_option("csv", csv_inputs, "CSV reports")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "directory for merged.csv and summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*table) {
      if (ab_values.empty() && example.empty()) throw ConfigError("table: give --alpha-beta or --example");
      Json rows = Json::array();
      std::string csv = "source,metric,exponent,log_power,epsilon_loss,rate\n";
      auto emit = [&](const std::string& source, const std::string& metric, const RateClass& r) {
        rows.push_back({{"source", source}, {"metric", metric}, {"rate", detail::rate_json(r)}});
        csv += source + "," + metric + "," + r.exponent.str() + "," + std::to_string(r.log_power) + "," +
               (r.epsilon_loss ? "true" : "false") + "," + r.str() + "\n";
      };
      for (const auto& text : ab_values) {
        const Rational ab = Rational::parse(text);
        emit("alpha_beta=" + ab.str(), "dW", theoretical_rate(ab, RateMetric::Wasserstein));
        emit("alpha_beta=" + ab.str(), "dK", theoretical_rate(ab, RateMetric::Kolmogorov));
        if (!q_value.empty()) emit("alpha_beta=" + ab.str(), "min_integral", min_integral_rate(ab, Rational::parse(q_value)));
      }
      if (!example.empty()) {
        std::map<std::string, std::string> params;
        for (const auto& kv : param_values) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw ConfigError("table: --param expects key=value, got '" + kv + "'");
          params[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        const CorollaryRates r = corollary_rate(detail::example_from_params(example, params));
        emit(example, "dW", r.wasserstein);
        emit(example, "dK", r.kolmogorov);
      }
      out << (table_format == "json" ? rows.dump(2) + "\n" : csv);
      return kExitOk;
    }

    if (*report) {
      std::vector<ReportRow> rows;
      for (const auto& path : csv_inputs) {
        auto part = parse_csv(detail::read_file(path), path);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto summary = summarize_rows(rows);
      Json js = Json::array();
      for (const auto& [exp, fit] : summary) {
        Json f = to_json(fit);
        f["experiment"] = exp;
        js.push_back(f);
        out << exp << " " << fit.metric << ": ";
        if (std::isfinite(fit.slope))
          out << "slope " << format_double(fit.slope) << " +- " << format_double(fit.stderr) << " over " << fit.points
              << " points\n";
        else
          out << fit.verdict << " (" << fit.points << " usable points)\n";
      }
      if (!report_out.empty()) {
        std::filesystem::create_directories(report_out);
        detail::write_file(std::filesystem::path(report_out) / "merged.csv", to_csv(rows));
        detail::write_file(std::filesystem::path(report_out) / "summary.json", js.dump(2) + "\n");
      }
      return kExitOk;
    }

    ExperimentConfig cfg = load_config(config_path);
    if (std::any_of(seed_opts.begin(), seed_opts.end(), [](const CLI::Option* o) { return o->count() > 0; })) cfg.seed = seed;
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base = std::filesystem::path(out_dir) / cfg.output;

    if (*simulate) {
      const ResolvedModel rm = resolve_model(cfg);
      const std::size_t count = std::min(paths, cfg.R);
      Json meta{{"config", to_json(cfg)}, {"paths", count}, {"layout", "row-major little-endian float64, one row per path"}};
      Json files = Json::array();
      for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        const std::size_t n = cfg.n_grid[i];
        const auto sampler = detail::sampler_for(cfg, rm, n);
        std::vector<std::vector<double>> rows(count);
        parallel_for(count, threads, [&](std::size_t r) {
          RngStream s(cfg.seed, detail::stream_of(i, r));
          rows[r] = sampler(n, s);
        });
        const std::string file = base.string() + "_n" + std::to_string(n) + ".bin";
        write_path_dump(file, rows);
        files.push_back({{"n", n}, {"file", std::filesystem::path(file).filename().string()}});
        out << "wrote " << file << "\n";
      }
      meta["files"] = files;
      detail::write_file(base.string() + "_paths.json", meta.dump(2) + "\n");
      return kExitOk;
    }

    ExperimentKind want = ExperimentKind::RateMc;
    if (*bounds) want = ExperimentKind::BoundQuadrature;
    if (*rho) want = ExperimentKind::RhoDecay;
    const bool kind_ok = cfg.kind == want || (want == ExperimentKind::RateMc && cfg.kind == ExperimentKind::VarianceCheck);
    if (!kind_ok) throw ConfigError("config experiment '" + to_string(cfg.kind) + "' does not match this subcommand");

    const ExperimentReport rep = run_experiment(cfg, threads);
    if (format != "json") detail::write_file(base.string() + ".csv", to_csv(rep.rows));
    if (format != "csv") detail::write_file(base.string() + ".json", to_json(rep).dump(2) + "\n");
    out << summary_lines(rep);
    if (rep.incomplete) return kExitNumerical;
    return rep.has_violation() ? kExitViolation : kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "invalid parameter: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace levyma
