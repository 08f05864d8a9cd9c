#pragma once

// Invariant suite run by `topk_certify verify`: every algorithm on seeded gap
// instances, checked against ground truth and against each other.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "topk/harness/config.hpp"
#include "topk/harness/experiment.hpp"

namespace topk::harness {

struct VerifyResult {
  std::size_t seeds = 0;
  std::size_t checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

namespace detail {

inline const CertificationReport* find_report(const std::vector<CertificationReport>& reports,
                                              const std::string& name) {
  for (const auto& r : reports) {
    if (r.algorithm == name) return &r;
  }
  return nullptr;
}

// Weak intervals with every traced item collapsed onto its true value: the
// state the strong phase ended in.
inline IntervalState final_state(const CertificationReport& r, const Instance& instance) {
  IntervalState state = r.weak_intervals;
  for (ItemId x : r.trace) intersect_update(state, x, {instance.value(x), instance.value(x)});
  return state;
}

inline std::string rows_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  write_rows(out, rows, "csv");
  return out.str();
}

}  // namespace detail

/// Runs every algorithm on seeds [first, last) with `cfg` as the base.
inline VerifyResult verify_invariants(RunConfig cfg, std::uint64_t first, std::uint64_t last) {
  cfg.algorithms = {"stc", "ace", "ace_w", "ta", "brute"};
  cfg.timing = false;
  VerifyResult result;
  const std::uint64_t budget = cfg.resolved_budget();
  const std::uint64_t w_max = cfg.resolved_w_max();

  for (std::uint64_t seed = first; seed < last; ++seed) {
    ++result.seeds;
    auto check = [&](bool condition, const std::string& what) {
      ++result.checks;
      if (!condition) result.failures.push_back("seed " + std::to_string(seed) + ": " + what);
    };

    const Instance instance = generate_gap_instance(gap_spec(cfg, seed));
    const diagnostics::GroundTruth truth(instance);
    const auto truth_set = true_top_k(instance);
    std::vector<CertificationReport> reports;
    const auto rows = run_on_instance(instance, cfg, "verify", "", 0, seed, &reports);

    for (const auto& row : rows) {
      check(row.status == "ok", row.algorithm + " failed: " + row.status);
    }
    if (reports.size() != cfg.algorithms.size()) continue;

    for (const auto& r : reports) {
      const std::string& a = r.algorithm;
      const bool covered = diagnostics::coverage_event_holds(truth, r.weak_intervals);
      check(r.output.size() == cfg.k, a + ": output size " + std::to_string(r.output.size()));
      check(r.trace.size() == r.strong_calls, a + ": trace length differs from strong calls");
      check(std::set<ItemId>(r.trace.begin(), r.trace.end()).size() == r.trace.size(),
            a + ": repeated strong query");
      if (covered) {
        check(r.output == truth_set, a + ": wrong output under coverage");
        check(diagnostics::check_lemma1(truth, r.weak_intervals),
              a + ": |A0| exceeds m(4 eps_max) under coverage");
      }
    }

    const auto* stc_r = detail::find_report(reports, "stc");
    const auto* ace_r = detail::find_report(reports, "ace");
    const auto* acew_r = detail::find_report(reports, "ace_w");
    const auto* brute_r = detail::find_report(reports, "brute");

    check(stc_r->strong_calls == stc_r->ambiguous_initial, "stc: strong calls != |A0|");
    check(ace_r->strong_calls <= stc_r->strong_calls, "ace: more strong calls than stc");

    const auto a0 = ambiguous_set(ace_r->weak_intervals, cfg.k);
    for (ItemId x : ace_r->trace) {
      if (!std::binary_search(a0.begin(), a0.end(), x)) {
        check(false, "ace: queried item " + std::to_string(x) + " outside A0");
        break;
      }
    }
    for (const auto* r : {ace_r, acew_r}) {
      const IntervalState end = detail::final_state(*r, instance);
      double min_in = std::numeric_limits<double>::infinity();
      double max_out = -std::numeric_limits<double>::infinity();
      for (ItemId x = 0; x < instance.size(); ++x) {
        if (std::binary_search(r->output.begin(), r->output.end(), x)) {
          min_in = std::min(min_in, end.lower(x));
        } else {
          max_out = std::max(max_out, end.upper(x));
        }
      }
      check(min_in >= max_out, r->algorithm + ": termination certificate does not hold");
    }

    check(acew_r->weak_pulls <= budget, "ace_w: weak pulls exceed B");
    std::uint64_t most = 0;
    for (ItemId x = 0; x < instance.size(); ++x) {
      most = std::max(most, acew_r->weak_intervals.pulls(x));
    }
    check(most <= w_max, "ace_w: an item exceeds w_max pulls");

    check(brute_r->output == truth_set, "brute: output differs from true top-k");
    check(brute_r->strong_calls == instance.size(), "brute: strong calls != n");

    const auto again = run_on_instance(instance, cfg, "verify", "", 0, seed);
    check(detail::rows_csv(rows) == detail::rows_csv(again), "re-run rows differ");
  }
  return result;
}

}  // namespace topk::harness
