#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "topk/harness/config.hpp"
#include "topk/harness/experiment.hpp"
#include "topk/harness/sweep.hpp"
#include "topk/harness/verify.hpp"

using namespace topk;
using namespace topk::harness;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.n = 400;
  cfg.k = 20;
  return cfg;
}

std::string csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  write_rows(out, rows, "csv");
  return out.str();
}

}  // namespace

TEST(Config, DefaultsMatchExperimentSetup) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.n, 10000u);
  EXPECT_EQ(cfg.k, 100u);
  EXPECT_EQ(cfg.gap, 0.05);
  EXPECT_EQ(cfg.oracle_sigma, 0.1);
  EXPECT_EQ(cfg.pulls_per_item, 12u);
  EXPECT_EQ(cfg.resolved_budget(), 120000u);
  EXPECT_EQ(cfg.w_min, 6u);
  EXPECT_EQ(cfg.resolved_w_max(), 120000u);
  EXPECT_EQ(cfg.delta, 0.05);
  EXPECT_EQ(cfg.replicates, 10u);
}

TEST(Config, SetAndAliases) {
  RunConfig cfg;
  cfg.set("N", "20");
  cfg.set("B", "5000");
  cfg.set("ci.method", "empirical_bernstein");
  cfg.set("ci.clamp", "true");
  cfg.set("algo", "stc, ace");
  cfg.set("grid", "1, 2.5");
  cfg.set("seed", "17");
  EXPECT_EQ(cfg.pulls_per_item, 20u);
  EXPECT_EQ(cfg.resolved_budget(), 5000u);
  EXPECT_TRUE(std::holds_alternative<EmpiricalBernstein>(cfg.ci()));
  EXPECT_EQ(cfg.algorithms, (std::vector<std::string>{"stc", "ace"}));
  EXPECT_EQ(cfg.grid, (std::vector<double>{1, 2.5}));
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_THROW(cfg.set("bogus", "1"), ConfigError);
  EXPECT_THROW(cfg.set("n", "ten"), ConfigError);
  EXPECT_THROW(cfg.set("algo", "quick"), ConfigError);
  EXPECT_THROW(cfg.set("format", "xml"), ConfigError);
  EXPECT_THROW(cfg.set_assignment("novalue"), ConfigError);
  cfg.set("ci.method", "other");
  EXPECT_THROW(cfg.ci(), ConfigError);
}

TEST(Config, FileWithCommentsAndLineNumbers) {
  RunConfig cfg;
  std::istringstream good("# comment\nn = 500\n\nk=25  # trailing\noracle.sigma = 0.2\n");
  cfg.load(good);
  EXPECT_EQ(cfg.n, 500u);
  EXPECT_EQ(cfg.k, 25u);
  EXPECT_EQ(cfg.oracle_sigma, 0.2);
  std::istringstream bad("n = 500\nk = x\n");
  try {
    cfg.load(bad, "run.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
}

TEST(Config, EnvironmentOverridesFileAndSetOverridesEnvironment) {
  EXPECT_EQ(RunConfig::env_name("TOPK_", "ci.method"), "TOPK_CI__METHOD");
  RunConfig cfg;
  std::istringstream file("n = 500\nk = 25\n");
  cfg.load(file);
  ::setenv("TOPK_K", "30", 1);
  ::setenv("TOPK_ORACLE__SIGMA", "0.3", 1);
  cfg.apply_environment();
  ::unsetenv("TOPK_K");
  ::unsetenv("TOPK_ORACLE__SIGMA");
  EXPECT_EQ(cfg.n, 500u);
  EXPECT_EQ(cfg.k, 30u);
  EXPECT_EQ(cfg.oracle_sigma, 0.3);
  cfg.set_assignment("k=40");
  EXPECT_EQ(cfg.k, 40u);
}

TEST(Csv, QuotingAndSchema) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(row_fields(ExperimentRow{}).size(), row_columns().size());
  const std::string header = csv({}).substr(0, csv({}).find('\n'));
  EXPECT_EQ(header,
            "experiment,algorithm,point,replicate,seed,n,k,gap,sigma,N,B,w_min,w_max,delta,"
            "strong_calls,weak_pulls,max_item_pulls,ambiguous_initial,ambiguous_final,eps_max,"
            "eps_max_ambiguous,m_eps,m_4eps,rho,correct,coverage_held,lemma1_held,wall_ms,status");
}

TEST(Metrics, BruteForceAndFaultInjection) {
  const Instance inst({0.1, 0.5, 0.9, 0.7, 0.3}, 2);
  Oracles oracles(inst, NoiseModel::gaussian(0.1), 1);
  auto report = brute_force_certify(oracles, 2);
  const ExperimentRow row = compute_metrics(report, inst);
  ASSERT_TRUE(row.correct.has_value());
  EXPECT_TRUE(*row.correct);
  EXPECT_EQ(row.eps_max, 0.5);
  EXPECT_DOUBLE_EQ(row.rho, 5.0 / static_cast<double>(near_tie_mass(inst, 0.5)));
  EXPECT_TRUE(row.coverage_held);
  report.output = {0, 1};
  EXPECT_FALSE(*compute_metrics(report, inst).correct);
}

TEST(Metrics, RowsFromAGapReplicate) {
  const RunConfig cfg = small_config();
  std::vector<CertificationReport> reports;
  const auto rows = run_gap_replicate(cfg, "scaling_n", "400", 0, 5, &reports);
  ASSERT_EQ(rows.size(), 4u);
  ASSERT_EQ(reports.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].algorithm, cfg.algorithms[i]);
    EXPECT_EQ(rows[i].status, "ok");
    EXPECT_GE(rows[i].m_eps, 1u);
    EXPECT_EQ(rows[i].wall_ms, 0.0);
    if (rows[i].coverage_held) {
      EXPECT_TRUE(rows[i].lemma1_held);
    }
  }
  EXPECT_EQ(rows[0].strong_calls, rows[0].ambiguous_initial);
  EXPECT_LE(rows[1].strong_calls, rows[0].strong_calls);
}

TEST(Metrics, BudgetErrorsBecomeRows) {
  RunConfig cfg = small_config();
  cfg.strong_cap = 1;
  const auto rows = run_gap_replicate(cfg, "run", "", 0, 1);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[0].status.find("strong cap"), std::string::npos);
}

TEST(Sweep, LowerBoundCallsEqualM) {
  RunConfig cfg;
  cfg.experiment = "lower_bound";
  cfg.replicates = 3;
  const auto result = run_sweep(SweepSpec::from_config(cfg));
  ASSERT_EQ(result.rows.size(), 3u * 3u * 2u);
  for (const auto& row : result.rows) {
    EXPECT_EQ(row.status, "ok");
    EXPECT_EQ(std::to_string(row.strong_calls), row.point);
    EXPECT_TRUE(*row.correct);
    EXPECT_EQ(row.k, 10u);
  }
}

TEST(Sweep, DeterministicAcrossRunsAndThreads) {
  RunConfig cfg = small_config();
  cfg.experiment = "scaling_k";
  cfg.set("grid", "5,10,20");
  cfg.replicates = 3;
  const auto a = run_sweep(SweepSpec::from_config(cfg));
  const auto b = run_sweep(SweepSpec::from_config(cfg));
  cfg.jobs = 4;
  const auto c = run_sweep(SweepSpec::from_config(cfg));
  EXPECT_EQ(csv(a.rows), csv(b.rows));
  EXPECT_EQ(csv(a.rows), csv(c.rows));
  ASSERT_EQ(a.rows.size(), 3u * 3u * 4u);
  // (point, replicate, algorithm) order, seeds base + r.
  EXPECT_EQ(a.rows[0].point, "5");
  EXPECT_EQ(a.rows[4].replicate, 1u);
  EXPECT_EQ(a.rows[4].seed, 1u);
  EXPECT_EQ(a.rows[12].point, "10");
}

TEST(Sweep, InfeasiblePointBecomesErrorRows) {
  RunConfig cfg = small_config();
  cfg.experiment = "scaling_n";
  cfg.set("grid", "10,400");  // n = 10 < k = 20
  cfg.replicates = 2;
  const auto result = run_sweep(SweepSpec::from_config(cfg));
  ASSERT_EQ(result.rows.size(), 16u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(result.rows[i].status.rfind("error", 0), 0u);
  for (std::size_t i = 8; i < 16; ++i) EXPECT_EQ(result.rows[i].status, "ok");
  EXPECT_EQ(result.summary[0].errors, 2u);
  EXPECT_EQ(result.summary[0].replicates, 0u);
}

TEST(Sweep, SpecValidation) {
  RunConfig cfg;
  cfg.experiment = "nope";
  EXPECT_THROW(SweepSpec::from_config(cfg), ConfigError);
  cfg.experiment = "scaling_n";
  cfg.replicates = 0;
  EXPECT_THROW(SweepSpec::from_config(cfg), ConfigError);
  EXPECT_EQ(default_grid("scaling_n"), (std::vector<double>{1000, 3162, 10000}));
  EXPECT_EQ(default_grid("hardness"), (std::vector<double>{0.02, 0.05, 0.1}));
}

TEST(Summary, MeanAndNormalInterval) {
  std::vector<ExperimentRow> rows(4);
  const double calls[] = {10, 12, 14, 20};
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].point = "p";
    rows[i].algorithm = "ace";
    rows[i].strong_calls = static_cast<std::uint64_t>(calls[i]);
    rows[i].correct = i != 3;
    rows[i].coverage_held = true;
  }
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].mean_strong_calls, 14.0);
  // sample sd of {10,12,14,20} = sqrt(56/3)
  EXPECT_NEAR(s[0].ci95_strong_calls, 1.96 * std::sqrt(56.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(s[0].failures, 1u);
  EXPECT_EQ(summary_path("out/results.csv"), "out/results.summary.csv");
  EXPECT_EQ(summary_path("out.d/results"), "out.d/results.summary.csv");
}

TEST(Sweep, CoverageExperimentRows) {
  RunConfig cfg = small_config();
  cfg.experiment = "coverage";
  cfg.set("grid", "400");
  cfg.replicates = 3;
  const auto result = run_sweep(SweepSpec::from_config(cfg));
  ASSERT_EQ(result.rows.size(), 6u);
  EXPECT_EQ(result.rows[0].algorithm, "weak_fixed");
  EXPECT_EQ(result.rows[1].algorithm, "weak_anytime");
  for (const auto& row : result.rows) {
    EXPECT_FALSE(row.correct.has_value());
    EXPECT_EQ(row.strong_calls, 0u);
    EXPECT_LE(row.weak_pulls, 400u * 12);
  }
}

TEST(Output, JsonLines) {
  const auto rows = run_gap_replicate(small_config(), "run", "", 0, 2);
  std::ostringstream out;
  write_rows(out, rows, "jsonl");
  std::istringstream in(out.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["algorithm"], rows[count].algorithm);
    EXPECT_EQ(j["strong_calls"], rows[count].strong_calls);
    ++count;
  }
  EXPECT_EQ(count, rows.size());
}

TEST(Verify, SmallSeedRangePasses) {
  RunConfig cfg = small_config();
  const auto result = verify_invariants(cfg, 0, 5);
  EXPECT_EQ(result.seeds, 5u);
  EXPECT_GT(result.checks, 50u);
  EXPECT_TRUE(result.ok()) << (result.failures.empty() ? "" : result.failures.front());
}
