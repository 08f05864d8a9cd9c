#pragma once

// Certification algorithms. Each consumes oracles (never the instance) and
// returns a CertificationReport. The strong phases are also exposed on their
// own so they can be driven from prescribed intervals.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "topk/confidence.hpp"
#include "topk/core.hpp"
#include "topk/oracles.hpp"

namespace topk {

struct CertificationReport {
  std::string algorithm;
  std::vector<ItemId> output;  // sorted by id, size k
  std::uint64_t strong_calls = 0;
  std::uint64_t weak_pulls = 0;
  std::size_t ambiguous_initial = 0;
  std::size_t ambiguous_final = 0;
  double eps_max = 0.0;
  double eps_max_ambiguous = 0.0;
  std::optional<bool> correct;  // filled by the harness
  std::vector<ItemId> trace;
  // Weak intervals as they stood before the first strong call.
  IntervalState weak_intervals;
  bool coverage_violation_flagged = false;
};

struct CertifyParams {
  std::size_t k = 100;
  double delta = 0.05;
  double delta_weak_fraction = 1.0;
  std::uint64_t pulls_per_item = 12;  // N
  CiMethod ci = SubGaussianKnownSigma{0.1};
};

struct AceWParams {
  std::uint64_t budget = 0;  // B, total weak pulls
  std::uint64_t w_min = 6;
  std::uint64_t w_max = 0;

  void validate(std::size_t n) const {
    if (w_min < 1) throw ParameterError("ace_w: w_min must be >= 1");
    if (w_max < w_min) throw ParameterError("ace_w: w_max must be >= w_min");
    if (budget < n * w_min) {
      throw ParameterError("ace_w: budget B=" + std::to_string(budget) +
                           " is below n*w_min=" + std::to_string(n * w_min));
    }
  }
};

namespace detail {

inline void check_k(std::size_t k, std::size_t n) {
  if (k > n) throw ParameterError("k=" + std::to_string(k) + " exceeds n=" +
                                  std::to_string(n));
}

inline std::vector<ItemId> all_items(std::size_t n) {
  std::vector<ItemId> ids(n);
  for (ItemId x = 0; x < n; ++x) ids[x] = x;
  return ids;
}

// Strong reveal: the interval collapses onto the returned value.
inline double reveal(IntervalState& state, ItemId x, StrongOracle& strong) {
  const double v = strong.query(x);
  intersect_update(state, x, {v, v});
  state.mark_collapsed(x);
  return v;
}

// Report for k == 0 or k == n: nothing to decide, no oracle use.
inline CertificationReport trivial_report(std::string name, std::size_t n,
                                          std::size_t k) {
  CertificationReport r;
  r.algorithm = std::move(name);
  if (k == n) r.output = all_items(n);
  r.weak_intervals = IntervalState(n);
  return r;
}

// Fills the interval summaries shared by all strong phases.
inline void describe_weak_intervals(CertificationReport& r,
                                    const IntervalState& state, std::size_t k) {
  r.weak_intervals = state;
  r.eps_max = epsilon_max(state);
  const auto a0 = ambiguous_set(state, k);
  r.ambiguous_initial = a0.size();
  r.eps_max_ambiguous = a0.empty() ? r.eps_max
                                   : epsilon_max(state, std::span<const ItemId>(a0));
}

// Ids from `candidates` with the `count` largest revealed values.
inline std::vector<ItemId> best_by_value(const std::vector<ItemId>& candidates,
                                         const std::vector<double>& value_of,
                                         std::size_t count) {
  std::vector<ItemId> ids = candidates;
  std::sort(ids.begin(), ids.end(), [&](ItemId a, ItemId b) {
    return value_of[a] > value_of[b] || (value_of[a] == value_of[b] && a < b);
  });
  ids.resize(std::min(count, ids.size()));
  return ids;
}

/// k-th largest of n tracked values under point updates, O(log n) each.
class KthLargestTracker {
 public:
  KthLargestTracker(std::span<const double> values, std::size_t k)
      : current_(values.begin(), values.end()), k_(k) {
    if (k < 1 || k > values.size()) throw ParameterError("tracker: bad k");
    std::vector<Key> keys;
    keys.reserve(values.size());
    for (ItemId x = 0; x < values.size(); ++x) keys.emplace_back(values[x], x);
    std::sort(keys.begin(), keys.end());
    const auto split = keys.end() - static_cast<std::ptrdiff_t>(k);
    rest_.insert(keys.begin(), split);
    top_.insert(split, keys.end());
  }

  double kth() const { return top_.begin()->first; }

  void update(ItemId x, double value) {
    const Key old{current_[x], x};
    current_[x] = value;
    if (top_.erase(old) > 0) {
      rest_.insert({value, x});
      auto best = std::prev(rest_.end());
      top_.insert(*best);
      rest_.erase(best);
    } else {
      rest_.erase(old);
      top_.insert({value, x});
      auto worst = top_.begin();
      rest_.insert(*worst);
      top_.erase(worst);
    }
  }

 private:
  using Key = std::pair<double, ItemId>;
  std::vector<double> current_;
  std::size_t k_;
  std::set<Key> top_;
  std::set<Key> rest_;
};

}  // namespace detail

/// Strong phase of screen-then-certify: every item in the initial
/// ambiguous band is revealed, IN items are accepted outright.
inline CertificationReport stc_certify(IntervalState state, std::size_t k,
                                       StrongOracle& strong) {
  const std::size_t n = state.size();
  detail::check_k(k, n);
  if (k == 0 || k == n) return detail::trivial_report("stc", n, k);

  CertificationReport r;
  r.algorithm = "stc";
  detail::describe_weak_intervals(r, state, k);
  const std::uint64_t calls_before = strong.calls();

  const BoundaryBand band = boundary_band(state, k);
  std::vector<ItemId> in, ambiguous;
  for (ItemId x = 0; x < n; ++x) {
    if (state.lower(x) > band.upper_k) {
      in.push_back(x);
    } else if (!(state.upper(x) < band.lower_k)) {
      ambiguous.push_back(x);
    }
  }
  std::vector<double> revealed(n, 0.0);
  for (ItemId x : ambiguous) revealed[x] = detail::reveal(state, x, strong);

  r.output = in;
  for (ItemId x : detail::best_by_value(ambiguous, revealed, k - in.size())) {
    r.output.push_back(x);
  }
  std::sort(r.output.begin(), r.output.end());

  r.strong_calls = strong.calls() - calls_before;
  r.trace.assign(strong.trace().begin() + static_cast<std::ptrdiff_t>(calls_before),
                 strong.trace().end());
  r.ambiguous_final = ambiguous_set(state, k).size();
  r.coverage_violation_flagged = state.coverage_violation_flagged();
  return r;
}

/// Adaptive strong phase: repeatedly compare the weakest member of the
/// optimistic top-k (largest U) against the best outsider, and reveal the
/// wider of the two until L(worst in) >= U(best out).
inline CertificationReport ace_certify(IntervalState state, std::size_t k,
                                       StrongOracle& strong) {
  const std::size_t n = state.size();
  detail::check_k(k, n);
  if (k == 0 || k == n) return detail::trivial_report("ace", n, k);

  CertificationReport r;
  r.algorithm = "ace";
  detail::describe_weak_intervals(r, state, k);
  const std::uint64_t calls_before = strong.calls();

  // Ordered by descending U, ascending id.
  std::set<std::pair<double, ItemId>> by_upper;
  for (ItemId x = 0; x < n; ++x) by_upper.emplace(-state.upper(x), x);

  while (true) {
    auto it = by_upper.begin();
    ItemId worst_in = it->second;
    for (std::size_t c = 0; c < k; ++c, ++it) {
      const ItemId x = it->second;
      if (state.lower(x) < state.lower(worst_in) ||
          (state.lower(x) == state.lower(worst_in) && x < worst_in)) {
        worst_in = x;
      }
    }
    const ItemId best_out = it->second;
    if (state.lower(worst_in) >= state.upper(best_out)) {
      for (auto s = by_upper.begin(); s != it; ++s) r.output.push_back(s->second);
      break;
    }
    const ItemId target =
        state.interval(worst_in).width() >= state.interval(best_out).width()
            ? worst_in
            : best_out;
    by_upper.erase({-state.upper(target), target});
    detail::reveal(state, target, strong);
    by_upper.emplace(-state.upper(target), target);
  }
  std::sort(r.output.begin(), r.output.end());

  r.strong_calls = strong.calls() - calls_before;
  r.trace.assign(strong.trace().begin() + static_cast<std::ptrdiff_t>(calls_before),
                 strong.trace().end());
  r.ambiguous_final = ambiguous_set(state, k).size();
  r.coverage_violation_flagged = state.coverage_violation_flagged();
  return r;
}

/// Sorted-access baseline: reveal items in order of decreasing weak point
/// estimate until the k-th best revealed value dominates every unrevealed
/// upper bound.
inline CertificationReport ta_certify_from(IntervalState state,
                                           std::span<const double> estimates,
                                           std::size_t k, StrongOracle& strong) {
  const std::size_t n = state.size();
  detail::check_k(k, n);
  if (estimates.size() != n) throw ParameterError("ta: estimate count mismatch");
  if (k == 0 || k == n) return detail::trivial_report("ta", n, k);

  CertificationReport r;
  r.algorithm = "ta";
  detail::describe_weak_intervals(r, state, k);
  const std::uint64_t calls_before = strong.calls();

  std::vector<ItemId> order = detail::all_items(n);
  std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    return estimates[a] > estimates[b] || (estimates[a] == estimates[b] && a < b);
  });
  // max U over order[i..n)
  std::vector<double> tail_upper(n + 1, -std::numeric_limits<double>::infinity());
  for (std::size_t i = n; i-- > 0;) {
    tail_upper[i] = std::max(tail_upper[i + 1], state.upper(order[i]));
  }

  std::vector<double> revealed(n, 0.0);
  std::vector<ItemId> verified;
  std::priority_queue<double, std::vector<double>, std::greater<>> best_k;
  for (std::size_t i = 0; i < n; ++i) {
    const ItemId x = order[i];
    revealed[x] = detail::reveal(state, x, strong);
    verified.push_back(x);
    best_k.push(revealed[x]);
    if (best_k.size() > k) best_k.pop();
    if (best_k.size() == k && best_k.top() >= tail_upper[i + 1]) break;
  }
  r.output = detail::best_by_value(verified, revealed, k);
  std::sort(r.output.begin(), r.output.end());

  r.strong_calls = strong.calls() - calls_before;
  r.trace.assign(strong.trace().begin() + static_cast<std::ptrdiff_t>(calls_before),
                 strong.trace().end());
  r.ambiguous_final = ambiguous_set(state, k).size();
  r.coverage_violation_flagged = state.coverage_violation_flagged();
  return r;
}

/// Phase I of ACE-W. Warm-starts every item with w_min pulls, then spends the
/// rest of the budget one pull at a time on the widest currently ambiguous
/// item below w_max. Intervals are running intersections of a confidence
/// sequence, so the ambiguous set only loses members and a lazily
/// invalidated max-heap suffices.
inline IntervalState adaptive_weak_allocation(WeakOracle& weak, std::size_t k,
                                              const DeltaBudget& budget,
                                              const CiMethod& ci,
                                              const AceWParams& params) {
  const std::size_t n = weak.size();
  detail::check_k(k, n);
  params.validate(n);
  const CiMethod method = anytime_counterpart(ci);
  validate(method);
  const double delta_x = budget.per_item();

  IntervalState state(n);
  std::vector<StreamStats> stats(n);
  auto pull = [&](ItemId x) {
    stats[x].push(observe(method, weak.query(x)));
    state.set_pulls(x, stats[x].count());
  };
  auto refresh = [&](ItemId x) {
    intersect_update(state, x,
                     clipped_interval(stats[x].mean(),
                                      radius(method, stats[x], delta_x)));
  };

  for (ItemId x = 0; x < n; ++x) {
    for (std::uint64_t t = 0; t < params.w_min; ++t) pull(x);
    refresh(x);
  }
  std::uint64_t remaining = params.budget - n * params.w_min;
  if (k == 0 || k == n) return state;

  detail::KthLargestTracker lower_k(state.lowers(), k);
  detail::KthLargestTracker upper_k(state.uppers(), k);
  auto ambiguous = [&](ItemId x) {
    return state.lower(x) <= upper_k.kth() && state.upper(x) >= lower_k.kth();
  };

  // (width, -id, version): max-heap picks the widest, then the smallest id.
  using Entry = std::tuple<double, std::int64_t, std::uint64_t>;
  std::priority_queue<Entry> heap;
  std::vector<std::uint64_t> version(n, 0);
  auto push = [&](ItemId x) {
    if (ambiguous(x) && state.pulls(x) < params.w_max) {
      heap.emplace(state.interval(x).width(), -static_cast<std::int64_t>(x),
                   ++version[x]);
    }
  };
  for (ItemId x = 0; x < n; ++x) push(x);

  while (remaining > 0) {
    std::optional<ItemId> target;
    while (!heap.empty()) {
      const auto [width, neg_id, ver] = heap.top();
      heap.pop();
      const auto x = static_cast<ItemId>(-neg_id);
      if (ver == version[x] && ambiguous(x) && state.pulls(x) < params.w_max) {
        target = x;
        break;
      }
    }
    if (!target) break;  // nothing ambiguous and eligible
    pull(*target);
    refresh(*target);
    --remaining;
    lower_k.update(*target, state.lower(*target));
    upper_k.update(*target, state.upper(*target));
    push(*target);
  }
  return state;
}

inline CertificationReport stc(Oracles& oracles, const CertifyParams& p) {
  const std::size_t n = oracles.size();
  detail::check_k(p.k, n);
  if (p.k == 0 || p.k == n) return detail::trivial_report("stc", n, p.k);
  const std::uint64_t pulls_before = oracles.weak.total_pulls();
  auto screen = screen_items(oracles.weak, p.pulls_per_item,
                             DeltaBudget::make(p.delta, n, p.delta_weak_fraction),
                             p.ci);
  auto r = stc_certify(std::move(screen.intervals), p.k, oracles.strong);
  r.weak_pulls = oracles.weak.total_pulls() - pulls_before;
  return r;
}

inline CertificationReport ace(Oracles& oracles, const CertifyParams& p) {
  const std::size_t n = oracles.size();
  detail::check_k(p.k, n);
  if (p.k == 0 || p.k == n) return detail::trivial_report("ace", n, p.k);
  const std::uint64_t pulls_before = oracles.weak.total_pulls();
  auto screen = screen_items(oracles.weak, p.pulls_per_item,
                             DeltaBudget::make(p.delta, n, p.delta_weak_fraction),
                             p.ci);
  auto r = ace_certify(std::move(screen.intervals), p.k, oracles.strong);
  r.weak_pulls = oracles.weak.total_pulls() - pulls_before;
  return r;
}

/// ACE preceded by adaptive weak allocation. `p.pulls_per_item` is unused;
/// the weak phase is governed by `params`.
inline CertificationReport ace_w(Oracles& oracles, const CertifyParams& p,
                                 const AceWParams& params) {
  const std::size_t n = oracles.size();
  detail::check_k(p.k, n);
  params.validate(n);
  if (p.k == 0 || p.k == n) return detail::trivial_report("ace_w", n, p.k);
  const std::uint64_t pulls_before = oracles.weak.total_pulls();
  IntervalState frozen = adaptive_weak_allocation(
      oracles.weak, p.k, DeltaBudget::make(p.delta, n, p.delta_weak_fraction),
      p.ci, params);
  auto r = ace_certify(std::move(frozen), p.k, oracles.strong);
  r.algorithm = "ace_w";
  r.weak_pulls = oracles.weak.total_pulls() - pulls_before;
  return r;
}

inline CertificationReport ta_certify(Oracles& oracles, const CertifyParams& p) {
  const std::size_t n = oracles.size();
  detail::check_k(p.k, n);
  if (p.k == 0 || p.k == n) return detail::trivial_report("ta", n, p.k);
  const std::uint64_t pulls_before = oracles.weak.total_pulls();
  auto screen = screen_items(oracles.weak, p.pulls_per_item,
                             DeltaBudget::make(p.delta, n, p.delta_weak_fraction),
                             p.ci);
  auto r = ta_certify_from(std::move(screen.intervals), screen.means, p.k,
                           oracles.strong);
  r.weak_pulls = oracles.weak.total_pulls() - pulls_before;
  return r;
}

/// Reveals everything. Reference answer for tests.
inline CertificationReport brute_force_certify(Oracles& oracles, std::size_t k) {
  const std::size_t n = oracles.size();
  detail::check_k(k, n);
  CertificationReport r;
  r.algorithm = "brute";
  IntervalState state(n);
  r.weak_intervals = state;
  r.eps_max = epsilon_max(state);
  r.eps_max_ambiguous = r.eps_max;
  r.ambiguous_initial = k == 0 ? 0 : ambiguous_set(state, k).size();
  const std::uint64_t calls_before = oracles.strong.calls();
  std::vector<double> revealed(n);
  for (ItemId x = 0; x < n; ++x) revealed[x] = detail::reveal(state, x, oracles.strong);
  r.output = top_k_ids(revealed, k);
  r.strong_calls = oracles.strong.calls() - calls_before;
  r.trace = oracles.strong.trace();
  r.trace.erase(r.trace.begin(), r.trace.begin() + static_cast<std::ptrdiff_t>(calls_before));
  r.ambiguous_final = k == 0 ? 0 : ambiguous_set(state, k).size();
  return r;
}

}  // namespace topk
