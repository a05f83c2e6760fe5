#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "levyma/harness.hpp"

using namespace levyma;

namespace {

Json small_ou(std::vector<std::size_t> n_grid = {32, 64, 128}) {
  return {{"experiment", "rate-mc"},
          {"name", "ou"},
          {"model", {{"example", "ou"}}},
          {"n_grid", n_grid},
          {"R", 200},
          {"seed", 11},
          {"report_v_hat", false}};
}

ReportRow row(std::size_t n, double value, double se, std::string flag = "ok") {
  ReportRow r;
  r.experiment = "x";
  r.n = n;
  r.metric = "dW";
  r.value = value;
  r.stderr = se;
  r.R = 1000;
  r.flag = std::move(flag);
  return r;
}

}  // namespace

TEST(Config, RoundTripIsFixedPoint) {
  for (const Json& j :
       {small_ou(), Json{{"name", "lfsn"}, {"model", {{"example", "lfsn"}, {"H", "1/10"}, {"beta", "9/5"}}}, {"n_grid", {64}}},
        Json{{"experiment", "bound-quadrature"},
             {"model", {{"levy", {{"type", "stable"}, {"beta", 1.5}}}, {"kernel", {{"type", "power_law"}, {"alpha", 2.0}}}}},
             {"n_grid", {16, 32}},
             {"bounds", {{"p", 2}, {"q", 3}}}}}) {
    const std::string once = serialize_config(parse_config(j.dump()));
    EXPECT_EQ(serialize_config(parse_config(once)), once);
  }
}

TEST(Config, RefusesOutOfDomainModels) {
  // H >= 1 - 1/beta violates the LFSN domain.
  const Json lfsn{{"model", {{"example", "lfsn"}, {"H", "1/2"}, {"beta", "3/2"}}}, {"n_grid", {64}}};
  EXPECT_THROW(parse_config(lfsn.dump()), ConfigError);
  const Json farima{{"model", {{"example", "farima"}, {"d", "1/2"}, {"beta", "3/2"}}}, {"n_grid", {64}}};
  EXPECT_THROW(parse_config(farima.dump()), ConfigError);
  const Json integer_d{{"model", {{"example", "farima"}, {"d", "-1"}, {"beta", "3/2"}}}, {"n_grid", {64}}};
  EXPECT_THROW(parse_config(integer_d.dump()), ConfigError);
}

TEST(Config, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(small_ou({64, 64}).dump()), ConfigError);
  EXPECT_THROW(parse_config(small_ou({128, 64}).dump()), ConfigError);
  Json j = small_ou();
  j["R"] = 10;
  EXPECT_THROW(parse_config(j.dump()), ConfigError);
  j = small_ou();
  j["metrics"] = {"dTV"};
  EXPECT_THROW(parse_config(j.dump()), ConfigError);
  j = small_ou();
  j["name"] = "a,b";
  EXPECT_THROW(parse_config(j.dump()), ConfigError);
}

TEST(Csv, RoundTrip) {
  std::vector<ReportRow> rows{row(64, 0.125, 0.01), row(128, 1.0 / 3.0, 1e-7, "floor-limited")};
  rows[1].seed = 18446744073709551615ULL;
  const auto back = parse_csv(to_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].value, rows[1].value);
  EXPECT_EQ(back[1].seed, rows[1].seed);
  EXPECT_EQ(back[1].flag, "floor-limited");
  EXPECT_EQ(to_csv(back), to_csv(rows));
}

TEST(Csv, RejectsBadInput) {
  EXPECT_THROW(parse_csv("n,value\n1,2\n"), InputError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\nx,1,dW,0.1\n"), InputError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\nx,abc,dW,0.1,0.1,1,1,ok\n"), InputError);
}

TEST(FitRows, Verdicts) {
  const RateClass theory{Rational(-1, 2), 0};
  auto rows_with = [](double slope) {
    std::vector<ReportRow> rows;
    for (std::size_t n = 64; n <= 4096; n *= 2) rows.push_back(row(n, 0.5 * std::pow(double(n), slope), 1e-4));
    return rows;
  };
  EXPECT_EQ(fit_rows(rows_with(-0.5), "dW", theory, 0.15).verdict, "within-band");
  EXPECT_NEAR(fit_rows(rows_with(-0.5), "dW", theory, 0.15).slope, -0.5, 1e-9);
  EXPECT_EQ(fit_rows(rows_with(-0.9), "dW", theory, 0.15).verdict, "faster");
  EXPECT_EQ(fit_rows(rows_with(-0.1), "dW", theory, 0.15).verdict, "violation");
  EXPECT_EQ(fit_rows(rows_with(-0.1), "dW", std::nullopt, 0.15).verdict, "inconclusive");

  // Above the band but within two standard errors of it: not a violation.
  std::vector<ReportRow> noisy = rows_with(-0.3);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    noisy[i].value *= (i % 2 ? 1.6 : 0.6);
    noisy[i].stderr = noisy[i].value;
  }
  const auto fit = fit_rows(noisy, "dW", theory, 0.15);
  EXPECT_GT(fit.slope, -0.35);
  EXPECT_EQ(fit.verdict, "inconclusive");

  std::vector<ReportRow> floor{row(64, 0.01, 0.01, "floor-limited"), row(128, 0.01, 0.01, "floor-limited"),
                               row(256, 0.2, 0.01)};
  EXPECT_EQ(fit_rows(floor, "dW", theory, 0.15).verdict, "floor-limited");
  EXPECT_EQ(fit_rows({row(64, 0.2, 0.01)}, "dW", theory, 0.15).verdict, "inconclusive");
}

TEST(Harness, DefaultBand) {
  EXPECT_EQ(default_band({Rational(-1, 2), 0}, false), 0.15);
  EXPECT_EQ(default_band({Rational(-1, 2), 1}, false), 0.25);
  EXPECT_EQ(default_band({Rational(-1, 4), 0, true}, false), 0.25);
  EXPECT_EQ(default_band({Rational(-1, 4), 0}, true), 0.25);
}

TEST(Harness, RateRunIsDeterministicAcrossThreads) {
  const ExperimentConfig c = parse_config(small_ou().dump());
  const auto a = run_rate_experiment(c, 1);
  const auto b = run_rate_experiment(c, 3);
  EXPECT_EQ(to_csv(a.rows), to_csv(b.rows));
  EXPECT_FALSE(a.incomplete);
  // vn_hat plus one row per metric per n.
  EXPECT_EQ(a.rows.size(), 3u * 3u);
  for (const auto& r : a.rows) EXPECT_EQ(r.seed, 11u);
}

TEST(Harness, SeedChangesResults) {
  Json j = small_ou();
  const auto a = run_rate_experiment(parse_config(j.dump()), 1);
  j["seed"] = 12;
  const auto b = run_rate_experiment(parse_config(j.dump()), 1);
  EXPECT_NE(to_csv(a.rows), to_csv(b.rows));
}

TEST(Harness, DebugGaussianIsFloorLimited) {
  const Json j{{"name", "debug"},
               {"model", {{"example", "debug-gaussian"}}},
               {"n_grid", {16, 32, 64, 128}},
               {"R", 400},
               {"seed", 3},
               {"report_v_hat", false}};
  const auto rep = run_rate_experiment(parse_config(j.dump()), 2);
  ASSERT_FALSE(rep.fits.empty());
  for (const auto& f : rep.fits) EXPECT_NE(f.verdict, "violation");
  std::size_t floor = 0, total = 0;
  for (const auto& r : rep.rows)
    if (r.metric == "dK" || r.metric == "dW") ++total, floor += r.flag == "floor-limited";
  // Exact Gaussians: nearly everything sits at the Monte Carlo floor.
  EXPECT_GE(floor * 4, total * 3);
}

TEST(Harness, SingleGridPointIsInconclusive) {
  const auto rep = run_rate_experiment(parse_config(small_ou({64}).dump()), 1);
  for (const auto& f : rep.fits) EXPECT_TRUE(f.verdict == "inconclusive" || f.verdict == "floor-limited") << f.verdict;
}

TEST(Harness, BoundRunRowsAndGammaBound) {
  const Json j{{"experiment", "bound-quadrature"},
               {"name", "b"},
               {"model", {{"example", "ou"}}},
               {"n_grid", {16, 32, 64}}};
  const auto rep = run_bound_experiment(parse_config(j.dump()), 1);
  std::vector<double> gamma, bound;
  for (const auto& r : rep.rows) {
    if (r.metric == "n_gamma1_sq") gamma.push_back(r.value);
    if (r.metric == "rho_sum_cubed") bound.push_back(r.value);
  }
  ASSERT_EQ(gamma.size(), 3u);
  ASSERT_EQ(bound.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(gamma[i], 1.1 * bound[i]);
  EXPECT_FALSE(rep.has_violation());
}

TEST(Harness, RhoRunReportsDecaySlope) {
  const Json j{{"experiment", "rho-decay"},
               {"name", "r"},
               {"model", {{"levy", {{"type", "stable"}, {"beta", 1.5}}}, {"kernel", {{"type", "power_law"}, {"alpha", 3.0}}}}},
               {"alpha_beta", "9/2"},
               {"n_grid", {16, 32, 64, 128, 256}}};
  const auto rep = run_rho_experiment(parse_config(j.dump()), 1);
  ASSERT_EQ(rep.fits.size(), 1u);
  // Faster decay: the leading term dominates already at moderate k.
  EXPECT_NEAR(rep.fits[0].slope, -2.25, 0.1);
}

TEST(Harness, ReportJsonCarriesProvenance) {
  const ExperimentConfig c = parse_config(small_ou({32}).dump());
  const Json js = to_json(run_rate_experiment(c, 1));
  EXPECT_EQ(js.at("provenance").at("seed"), 11u);
  EXPECT_EQ(js.at("provenance").at("config_hash"), hex64(fnv1a64(serialize_config(c))));
  EXPECT_TRUE(js.contains("rows"));
}
