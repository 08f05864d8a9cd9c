#pragma once

// One seeded replicate: build the instance, run each algorithm against
// oracles sharing the same weak streams, and turn reports into rows.

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "topk/algorithms.hpp"
#include "topk/core.hpp"
#include "topk/harness/config.hpp"
#include "topk/instances.hpp"
#include "topk/oracles.hpp"

namespace topk::harness {

struct ExperimentRow {
  std::string experiment;
  std::string algorithm;
  std::string point;  // swept value, as text
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  double gap = 0.0;
  double sigma = 0.0;
  std::uint64_t pulls_per_item = 0;
  std::uint64_t weak_budget = 0;
  std::uint64_t w_min = 0;
  std::uint64_t w_max = 0;
  double delta = 0.0;

  std::uint64_t strong_calls = 0;
  std::uint64_t weak_pulls = 0;
  std::uint64_t max_item_pulls = 0;
  std::size_t ambiguous_initial = 0;
  std::size_t ambiguous_final = 0;
  double eps_max = 0.0;
  double eps_max_ambiguous = 0.0;
  std::size_t m_eps = 0;
  std::size_t m_4eps = 0;
  double rho = 0.0;
  std::optional<bool> correct;
  bool coverage_held = false;
  bool lemma1_held = false;
  double wall_ms = 0.0;
  std::string status = "ok";
};

inline const std::vector<std::string>& row_columns() {
  static const std::vector<std::string> cols{
      "experiment", "algorithm", "point", "replicate", "seed", "n", "k", "gap",
      "sigma", "N", "B", "w_min", "w_max", "delta", "strong_calls", "weak_pulls",
      "max_item_pulls", "ambiguous_initial", "ambiguous_final", "eps_max",
      "eps_max_ambiguous", "m_eps", "m_4eps", "rho", "correct", "coverage_held",
      "lemma1_held", "wall_ms", "status"};
  return cols;
}

// RFC 4180 quoting.
inline std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << csv_field(fields[i]);
  }
  out << '\n';
}

inline std::vector<std::string> row_fields(const ExperimentRow& r) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {r.experiment,
          r.algorithm,
          r.point,
          std::to_string(r.replicate),
          std::to_string(r.seed),
          std::to_string(r.n),
          std::to_string(r.k),
          format_double(r.gap),
          format_double(r.sigma),
          std::to_string(r.pulls_per_item),
          std::to_string(r.weak_budget),
          std::to_string(r.w_min),
          std::to_string(r.w_max),
          format_double(r.delta),
          std::to_string(r.strong_calls),
          std::to_string(r.weak_pulls),
          std::to_string(r.max_item_pulls),
          std::to_string(r.ambiguous_initial),
          std::to_string(r.ambiguous_final),
          format_double(r.eps_max),
          format_double(r.eps_max_ambiguous),
          std::to_string(r.m_eps),
          std::to_string(r.m_4eps),
          format_double(r.rho),
          r.correct ? b(*r.correct) : std::string(),
          b(r.coverage_held),
          b(r.lemma1_held),
          format_double(r.wall_ms),
          r.status};
}

inline nlohmann::ordered_json row_json(const ExperimentRow& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["algorithm"] = r.algorithm;
  j["point"] = r.point;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["k"] = r.k;
  j["gap"] = r.gap;
  j["sigma"] = r.sigma;
  j["N"] = r.pulls_per_item;
  j["B"] = r.weak_budget;
  j["w_min"] = r.w_min;
  j["w_max"] = r.w_max;
  j["delta"] = r.delta;
  j["strong_calls"] = r.strong_calls;
  j["weak_pulls"] = r.weak_pulls;
  j["max_item_pulls"] = r.max_item_pulls;
  j["ambiguous_initial"] = r.ambiguous_initial;
  j["ambiguous_final"] = r.ambiguous_final;
  j["eps_max"] = r.eps_max;
  j["eps_max_ambiguous"] = r.eps_max_ambiguous;
  j["m_eps"] = r.m_eps;
  j["m_4eps"] = r.m_4eps;
  j["rho"] = r.rho;
  j["correct"] = r.correct ? nlohmann::ordered_json(*r.correct) : nlohmann::ordered_json();
  j["coverage_held"] = r.coverage_held;
  j["lemma1_held"] = r.lemma1_held;
  j["wall_ms"] = r.wall_ms;
  j["status"] = r.status;
  return j;
}

inline void write_rows(std::ostream& out, const std::vector<ExperimentRow>& rows,
                       const std::string& format = "csv") {
  if (format == "jsonl") {
    for (const auto& r : rows) out << row_json(r).dump() << '\n';
    return;
  }
  write_csv_line(out, row_columns());
  for (const auto& r : rows) write_csv_line(out, row_fields(r));
}

/// Ground-truth metrics for one report: correctness, coverage of the weak
/// intervals, m(eps_max), m(4 eps_max) and rho = strong calls / m(eps_max).
inline ExperimentRow compute_metrics(const CertificationReport& report,
                                     const Instance& instance) {
  const diagnostics::GroundTruth truth(instance);
  ExperimentRow row;
  row.algorithm = report.algorithm;
  row.n = instance.size();
  row.k = instance.k();
  row.strong_calls = report.strong_calls;
  row.weak_pulls = report.weak_pulls;
  for (ItemId x = 0; x < report.weak_intervals.size(); ++x) {
    row.max_item_pulls = std::max(row.max_item_pulls, report.weak_intervals.pulls(x));
  }
  row.ambiguous_initial = report.ambiguous_initial;
  row.ambiguous_final = report.ambiguous_final;
  row.eps_max = report.eps_max;
  row.eps_max_ambiguous = report.eps_max_ambiguous;
  row.m_eps = near_tie_mass(instance, report.eps_max);
  row.m_4eps = near_tie_mass(instance, 4.0 * report.eps_max);
  row.rho = static_cast<double>(report.strong_calls) / static_cast<double>(row.m_eps);
  row.correct = report.output == true_top_k(instance);
  row.coverage_held = diagnostics::coverage_event_holds(truth, report.weak_intervals);
  row.lemma1_held = diagnostics::check_lemma1(truth, report.weak_intervals);
  return row;
}

inline CertificationReport run_algorithm(const std::string& name, Oracles& oracles,
                                         const RunConfig& cfg) {
  if (name == "stc") return stc(oracles, cfg.certify_params());
  if (name == "ace") return ace(oracles, cfg.certify_params());
  if (name == "ace_w") return ace_w(oracles, cfg.certify_params(), cfg.ace_w_params());
  if (name == "ta") return ta_certify(oracles, cfg.certify_params());
  if (name == "brute") return brute_force_certify(oracles, cfg.k);
  throw ConfigError("unknown algorithm '" + name + "'");
}

inline std::uint64_t oracle_seed(std::uint64_t seed) {
  return rng::splitmix64(seed ^ 0x6f7261636c65ULL);
}

inline GapInstanceSpec gap_spec(const RunConfig& cfg, std::uint64_t seed) {
  GapInstanceSpec spec;
  spec.n = cfg.n;
  spec.k = cfg.k;
  spec.gap = cfg.gap;
  spec.eta = cfg.eta;
  spec.t_star = cfg.t_star;
  spec.near_ties = cfg.near_ties;
  spec.seed = seed;
  return spec;
}

inline void fill_parameters(ExperimentRow& row, const RunConfig& cfg,
                            const std::string& experiment, const std::string& point,
                            std::size_t replicate, std::uint64_t seed) {
  row.experiment = experiment;
  row.point = point;
  row.replicate = replicate;
  row.seed = seed;
  row.n = cfg.n;
  row.k = cfg.k;
  row.gap = cfg.gap;
  row.sigma = cfg.oracle_noise == "exact" ? 0.0 : cfg.oracle_sigma;
  row.pulls_per_item = cfg.pulls_per_item;
  row.weak_budget = cfg.resolved_budget();
  row.w_min = cfg.w_min;
  row.w_max = cfg.resolved_w_max();
  row.delta = cfg.delta;
}

inline ExperimentRow error_row(const RunConfig& cfg, const std::string& experiment,
                               const std::string& algorithm, const std::string& point,
                               std::size_t replicate, std::uint64_t seed,
                               const std::string& what) {
  ExperimentRow row;
  fill_parameters(row, cfg, experiment, point, replicate, seed);
  row.algorithm = algorithm;
  row.status = "error: " + what;
  return row;
}

/// Runs cfg.algorithms on one instance. All algorithms see identical weak
/// observations because the oracle counters are reset between them.
inline std::vector<ExperimentRow> run_on_instance(
    const Instance& instance, const RunConfig& cfg, const std::string& experiment,
    const std::string& point, std::size_t replicate, std::uint64_t seed,
    std::vector<CertificationReport>* reports = nullptr) {
  std::vector<ExperimentRow> rows;
  Oracles oracles(instance, cfg.noise(), oracle_seed(seed), cfg.strong_cap);
  for (const auto& name : cfg.algorithms) {
    oracles.snapshot_and_reset();
    try {
      const auto start = std::chrono::steady_clock::now();
      CertificationReport report = run_algorithm(name, oracles, cfg);
      const auto stop = std::chrono::steady_clock::now();
      ExperimentRow row = compute_metrics(report, instance);
      fill_parameters(row, cfg, experiment, point, replicate, seed);
      if (cfg.timing) {
        row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      }
      report.correct = row.correct;
      if (reports) reports->push_back(std::move(report));
      rows.push_back(std::move(row));
    } catch (const BudgetError& e) {
      rows.push_back(error_row(cfg, experiment, name, point, replicate, seed, e.what()));
    } catch (const ParameterError& e) {
      rows.push_back(error_row(cfg, experiment, name, point, replicate, seed, e.what()));
    }
  }
  return rows;
}

inline std::vector<ExperimentRow> run_gap_replicate(
    const RunConfig& cfg, const std::string& experiment, const std::string& point,
    std::size_t replicate, std::uint64_t seed,
    std::vector<CertificationReport>* reports = nullptr) {
  const Instance instance = generate_gap_instance(gap_spec(cfg, seed));
  return run_on_instance(instance, cfg, experiment, point, replicate, seed, reports);
}

/// Packing instance with prescribed intervals; STC and ACE run their strong
/// phases directly on those intervals.
inline std::vector<ExperimentRow> run_packing_replicate(const RunConfig& cfg,
                                                        const std::string& point,
                                                        std::size_t replicate,
                                                        std::uint64_t seed) {
  PackingSpec spec{cfg.n, cfg.k, cfg.packing_m, cfg.packing_level, cfg.packing_eps,
                   cfg.packing_gap};
  PackingInstance packed = generate_packing_instance(spec, random_planted_set(spec, seed));
  std::vector<ExperimentRow> rows;
  for (const std::string name : {"stc", "ace"}) {
    StrongOracle strong(packed.instance, cfg.strong_cap);
    CertificationReport report = name == std::string("stc")
                                     ? stc_certify(packed.intervals, cfg.k, strong)
                                     : ace_certify(packed.intervals, cfg.k, strong);
    ExperimentRow row = compute_metrics(report, packed.instance);
    fill_parameters(row, cfg, "lower_bound", point, replicate, seed);
    row.gap = cfg.packing_gap;
    row.sigma = 0.0;
    row.pulls_per_item = 0;
    row.weak_budget = 0;
    row.w_min = 0;
    row.w_max = 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Weak phases only: fixed intervals and ACE-W's adaptive intervals, with
/// their joint coverage recorded.
inline std::vector<ExperimentRow> run_coverage_replicate(const RunConfig& cfg,
                                                         const std::string& point,
                                                         std::size_t replicate,
                                                         std::uint64_t seed) {
  const Instance instance = generate_gap_instance(gap_spec(cfg, seed));
  const diagnostics::GroundTruth truth(instance);
  WeakOracle weak(instance, cfg.noise(), oracle_seed(seed));
  const DeltaBudget budget = DeltaBudget::make(cfg.delta, cfg.n, cfg.delta_weak_fraction);
  std::vector<ExperimentRow> rows;
  auto describe = [&](const std::string& name, const IntervalState& state) {
    CertificationReport report;
    report.algorithm = name;
    topk::detail::describe_weak_intervals(report, state, cfg.k);
    report.weak_pulls = weak.total_pulls();
    report.ambiguous_final = report.ambiguous_initial;
    ExperimentRow row = compute_metrics(report, instance);
    row.correct.reset();
    fill_parameters(row, cfg, "coverage", point, replicate, seed);
    rows.push_back(std::move(row));
  };
  describe("weak_fixed", build_fixed_intervals(weak, cfg.pulls_per_item, budget, cfg.ci()));
  weak.reset();
  describe("weak_anytime",
           adaptive_weak_allocation(weak, cfg.k, budget, cfg.ci(), cfg.ace_w_params()));
  return rows;
}

}  // namespace topk::harness
