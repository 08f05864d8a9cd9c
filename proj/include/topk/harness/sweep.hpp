#pragma once

// Parameter sweeps: grid point x replicate x algorithm, deterministic in the
// base seed, plus per-(point, algorithm) summaries.

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "topk/harness/config.hpp"
#include "topk/harness/experiment.hpp"

namespace topk::harness {

inline const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{"scaling_n", "scaling_k", "hardness",
                                              "lower_bound", "coverage"};
  return names;
}

inline std::vector<double> default_grid(const std::string& experiment) {
  if (experiment == "scaling_n") return {1000, 3162, 10000};
  if (experiment == "scaling_k") return {25, 50, 100, 200};
  if (experiment == "hardness") return {0.02, 0.05, 0.1};
  if (experiment == "lower_bound") return {50, 100, 200};
  if (experiment == "coverage") return {1000};
  throw ConfigError("unknown experiment '" + experiment + "'");
}

struct SweepSpec {
  std::string experiment = "scaling_n";
  std::vector<double> grid;
  std::size_t replicates = 10;
  RunConfig base;
  std::string out_path;

  static SweepSpec from_config(const RunConfig& cfg) {
    SweepSpec spec;
    spec.experiment = cfg.experiment;
    spec.grid = cfg.grid.empty() ? default_grid(cfg.experiment) : cfg.grid;
    spec.replicates = cfg.replicates;
    spec.base = cfg;
    spec.out_path = cfg.out;
    spec.validate();
    return spec;
  }

  void validate() const {
    default_grid(experiment);  // rejects unknown names
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (grid.empty()) throw ConfigError("grid must not be empty");
  }

  // Config for one grid point.
  RunConfig at(double value) const {
    RunConfig cfg = base;
    const auto as_count = [&](double v) {
      if (!(v >= 1.0) || std::floor(v) != v) {
        throw ConfigError(experiment + ": grid value " + format_double(v) +
                          " is not a positive integer");
      }
      return static_cast<std::size_t>(v);
    };
    if (experiment == "scaling_n" || experiment == "coverage") cfg.n = as_count(value);
    else if (experiment == "scaling_k") cfg.k = as_count(value);
    else if (experiment == "hardness") cfg.gap = value;
    else if (experiment == "lower_bound") {
      cfg.packing_m = as_count(value);
      cfg.n = cfg.packing_n;
      cfg.k = cfg.packing_k;
    }
    return cfg;
  }

  std::vector<std::string> algorithms() const {
    if (experiment == "lower_bound") return {"stc", "ace"};
    if (experiment == "coverage") return {"weak_fixed", "weak_anytime"};
    return base.algorithms;
  }
};

struct SummaryRow {
  std::string experiment;
  std::string algorithm;
  std::string point;
  std::size_t replicates = 0;
  std::size_t errors = 0;
  double mean_strong_calls = 0.0;
  double ci95_strong_calls = 0.0;
  double mean_weak_pulls = 0.0;
  double mean_ambiguous = 0.0;
  double mean_rho = 0.0;
  std::size_t failures = 0;
  std::size_t coverage_failures = 0;
};

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{
      "experiment", "algorithm", "point", "replicates", "errors",
      "mean_strong_calls", "ci95_strong_calls", "mean_weak_pulls",
      "mean_ambiguous", "mean_rho", "failures", "coverage_failures"};
  return cols;
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  write_csv_line(out, summary_columns());
  for (const auto& s : rows) {
    write_csv_line(out, {s.experiment, s.algorithm, s.point, std::to_string(s.replicates),
                         std::to_string(s.errors), format_double(s.mean_strong_calls),
                         format_double(s.ci95_strong_calls), format_double(s.mean_weak_pulls),
                         format_double(s.mean_ambiguous), format_double(s.mean_rho),
                         std::to_string(s.failures), std::to_string(s.coverage_failures)});
  }
}

/// Mean and 95% normal-approximation half-width per (point, algorithm), in
/// first-appearance order.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<std::vector<const ExperimentRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.point, r.algorithm);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      groups.emplace_back();
      SummaryRow s;
      s.experiment = r.experiment;
      s.algorithm = r.algorithm;
      s.point = r.point;
      out.push_back(s);
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    SummaryRow& s = out[g];
    std::vector<double> calls;
    double weak = 0.0, amb = 0.0, rho = 0.0;
    for (const ExperimentRow* r : groups[g]) {
      if (r->status != "ok") {
        ++s.errors;
        continue;
      }
      calls.push_back(static_cast<double>(r->strong_calls));
      weak += static_cast<double>(r->weak_pulls);
      amb += static_cast<double>(r->ambiguous_initial);
      rho += r->rho;
      if (r->correct && !*r->correct) ++s.failures;
      if (!r->coverage_held) ++s.coverage_failures;
    }
    s.replicates = calls.size();
    if (calls.empty()) continue;
    const double count = static_cast<double>(calls.size());
    double mean = 0.0;
    for (double c : calls) mean += c;
    mean /= count;
    double ss = 0.0;
    for (double c : calls) ss += (c - mean) * (c - mean);
    s.mean_strong_calls = mean;
    s.ci95_strong_calls =
        calls.size() > 1 ? 1.96 * std::sqrt(ss / (count - 1.0)) / std::sqrt(count) : 0.0;
    s.mean_weak_pulls = weak / count;
    s.mean_ambiguous = amb / count;
    s.mean_rho = rho / count;
  }
  return out;
}

struct SweepResult {
  std::vector<ExperimentRow> rows;
  std::vector<SummaryRow> summary;
};

/// Replicate r of every point uses seed base_seed + r. Rows come out in
/// (point, replicate, algorithm) order regardless of `jobs`.
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Task {
    std::size_t point;
    std::size_t replicate;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < spec.grid.size(); ++p) {
    for (std::size_t r = 0; r < spec.replicates; ++r) tasks.push_back({p, r});
  }
  std::vector<std::vector<ExperimentRow>> results(tasks.size());

  auto run_task = [&](const Task& task) {
    const double value = spec.grid[task.point];
    const std::string point = format_double(value);
    const std::uint64_t seed = spec.base.seed + task.replicate;
    std::vector<ExperimentRow> rows;
    try {
      const RunConfig cfg = spec.at(value);
      if (spec.experiment == "lower_bound") {
        rows = run_packing_replicate(cfg, point, task.replicate, seed);
      } else if (spec.experiment == "coverage") {
        rows = run_coverage_replicate(cfg, point, task.replicate, seed);
      } else {
        rows = run_gap_replicate(cfg, spec.experiment, point, task.replicate, seed);
      }
    } catch (const ParameterError& e) {
      rows.clear();
      for (const auto& name : spec.algorithms()) {
        rows.push_back(error_row(spec.base, spec.experiment, name, point, task.replicate,
                                 seed, e.what()));
      }
    }
    return rows;
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.base.jobs,
                                                        static_cast<unsigned>(tasks.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = run_task(tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          results[i] = run_task(tasks[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SweepResult out;
  for (auto& chunk : results) {
    for (auto& row : chunk) out.rows.push_back(std::move(row));
  }
  out.summary = summarize(out.rows);
  return out;
}

inline std::string summary_path(const std::string& out_path) {
  const auto dot = out_path.rfind('.');
  const auto slash = out_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out_path + ".summary.csv";
  }
  return out_path.substr(0, dot) + ".summary.csv";
}

/// Writes rows to `path` and the summary next to it (`<stem>.summary.csv`).
inline void write_sweep(const SweepResult& result, const std::string& path,
                        const std::string& format) {
  std::ofstream rows_out(path, std::ios::binary);
  if (!rows_out) throw ConfigError("cannot write " + path);
  write_rows(rows_out, result.rows, format);
  std::ofstream summary_out(summary_path(path), std::ios::binary);
  if (!summary_out) throw ConfigError("cannot write " + summary_path(path));
  write_summary(summary_out, result.summary);
}

}  // namespace topk::harness
