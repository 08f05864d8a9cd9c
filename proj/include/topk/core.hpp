#pragma once

// Ground-truth instance model, order statistics, near-tie mass and the
// ambiguous set. Every other header in this library builds on these types.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topk {

/// Index of an item in [0, n). Ties are always broken by ascending id.
using ItemId = std::size_t;

/// Raised when an operation is called with arguments outside its domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an oracle budget (weak pulls or strong calls) is exhausted.
/// Recoverable: the harness records the run and moves on.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// k-th largest element counting multiplicity (k is 1-based).
inline double kth_largest(std::span<const double> values, std::size_t k) {
  if (values.empty() || k < 1 || k > values.size()) {
    throw ParameterError("kth_largest: k=" + std::to_string(k) +
                         " out of range for " + std::to_string(values.size()) +
                         " values");
  }
  std::vector<double> buf(values.begin(), values.end());
  auto nth = buf.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(buf.begin(), nth, buf.end(), std::greater<>());
  return *nth;
}

/// Ids of the k largest keys, ordered by descending key and ascending id on
/// ties. The result is returned sorted by id.
inline std::vector<ItemId> top_k_ids(std::span<const double> keys,
                                     std::size_t k) {
  if (k > keys.size()) {
    throw ParameterError("top_k_ids: k exceeds number of items");
  }
  std::vector<ItemId> ids(keys.size());
  for (ItemId x = 0; x < ids.size(); ++x) ids[x] = x;
  auto before = [&](ItemId a, ItemId b) {
    return keys[a] > keys[b] || (keys[a] == keys[b] && a < b);
  };
  auto mid = ids.begin() + static_cast<std::ptrdiff_t>(k);
  std::nth_element(ids.begin(), mid, ids.end(), before);
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Hidden ground truth: one value in [0,1] per item, and the target size k.
class Instance {
 public:
  Instance(std::vector<double> values, std::size_t k)
      : values_(std::move(values)), k_(k) {
    if (values_.empty()) throw ParameterError("Instance: no items");
    if (k_ < 1 || k_ > values_.size()) {
      throw ParameterError("Instance: k must lie in [1, n]");
    }
    for (std::size_t x = 0; x < values_.size(); ++x) {
      const double v = values_[x];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParameterError("Instance: value of item " + std::to_string(x) +
                             " outside [0,1]");
      }
    }
    threshold_ = kth_largest(values_, k_);
    gap_ = k_ < values_.size() ? threshold_ - kth_largest(values_, k_ + 1)
                               : 0.0;
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t k() const noexcept { return k_; }
  double value(ItemId x) const { return values_.at(x); }
  std::span<const double> values() const noexcept { return values_; }

  /// t*, the k-th largest value.
  double threshold() const noexcept { return threshold_; }
  /// v_(k) - v_(k+1); zero when k == n.
  double gap() const noexcept { return gap_; }

 private:
  std::vector<double> values_;
  std::size_t k_;
  double threshold_ = 0.0;
  double gap_ = 0.0;
};

inline std::vector<ItemId> true_top_k(const Instance& instance) {
  return top_k_ids(instance.values(), instance.k());
}

/// m(eta): number of items whose value lies within eta of t* (inclusive).
inline std::size_t near_tie_mass(const Instance& instance, double eta) {
  if (!(eta >= 0.0)) throw ParameterError("near_tie_mass: eta must be >= 0");
  const double t = instance.threshold();
  return static_cast<std::size_t>(std::count_if(
      instance.values().begin(), instance.values().end(),
      [&](double v) { return std::abs(v - t) <= eta; }));
}

struct Interval {
  double lower = 0.0;
  double upper = 1.0;

  double width() const noexcept { return upper - lower; }
  double radius() const noexcept { return 0.5 * (upper - lower); }
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
  bool operator==(const Interval&) const = default;
};

/// Per-item confidence intervals plus pull counts: everything an algorithm
/// knows about the items. Intervals may only shrink once installed.
class IntervalState {
 public:
  IntervalState() = default;
  explicit IntervalState(std::size_t n)
      : intervals_(n), pulls_(n, 0), collapsed_(n, false) {}
  explicit IntervalState(std::vector<Interval> intervals)
      : intervals_(std::move(intervals)),
        pulls_(intervals_.size(), 0),
        collapsed_(intervals_.size(), false) {
    for (const auto& iv : intervals_) {
      if (!(iv.lower <= iv.upper)) {
        throw ParameterError("IntervalState: interval with lower > upper");
      }
    }
  }

  std::size_t size() const noexcept { return intervals_.size(); }
  const Interval& interval(ItemId x) const { return intervals_[x]; }
  double lower(ItemId x) const { return intervals_[x].lower; }
  double upper(ItemId x) const { return intervals_[x].upper; }
  std::uint64_t pulls(ItemId x) const { return pulls_[x]; }
  bool collapsed(ItemId x) const { return collapsed_[x]; }
  std::span<const Interval> intervals() const noexcept { return intervals_; }

  std::vector<double> lowers() const {
    std::vector<double> out(size());
    for (ItemId x = 0; x < size(); ++x) out[x] = intervals_[x].lower;
    return out;
  }
  std::vector<double> uppers() const {
    std::vector<double> out(size());
    for (ItemId x = 0; x < size(); ++x) out[x] = intervals_[x].upper;
    return out;
  }

  // Replaces x's interval by a sub-interval of it.
  void narrow(ItemId x, Interval next) {
    assert(next.lower <= next.upper);
    assert(next.lower >= intervals_[x].lower);
    assert(next.upper <= intervals_[x].upper);
    intervals_[x] = next;
  }

  // Marks x as revealed by the strong oracle; its interval must be a point.
  void mark_collapsed(ItemId x) {
    assert(intervals_[x].lower == intervals_[x].upper);
    collapsed_[x] = true;
  }

  void set_pulls(ItemId x, std::uint64_t w) { pulls_[x] = w; }

  void flag_coverage_violation() noexcept { violation_flagged_ = true; }
  bool coverage_violation_flagged() const noexcept { return violation_flagged_; }

 private:
  std::vector<Interval> intervals_;
  std::vector<std::uint64_t> pulls_;
  std::vector<bool> collapsed_;
  bool violation_flagged_ = false;
};

/// [L_(k), U_(k)]: k-th largest lower bound and k-th largest upper bound.
struct BoundaryBand {
  double lower_k = 0.0;
  double upper_k = 0.0;

  bool overlaps(const Interval& iv) const noexcept {
    return iv.lower <= upper_k && iv.upper >= lower_k;
  }
};

inline BoundaryBand boundary_band(const IntervalState& state, std::size_t k) {
  return {kth_largest(state.lowers(), k), kth_largest(state.uppers(), k)};
}

/// A = {x : L(x) <= U_(k) and U(x) >= L_(k)}, sorted by id.
inline std::vector<ItemId> ambiguous_set(const IntervalState& state,
                                         std::size_t k) {
  if (k < 1 || k > state.size()) {
    throw ParameterError("ambiguous_set: k must lie in [1, n]");
  }
  const BoundaryBand band = boundary_band(state, k);
  std::vector<ItemId> out;
  for (ItemId x = 0; x < state.size(); ++x) {
    if (band.overlaps(state.interval(x))) out.push_back(x);
  }
  return out;
}

/// Largest radius over all items, or over `restrict_to` when given.
inline double epsilon_max(
    const IntervalState& state,
    std::optional<std::span<const ItemId>> restrict_to = std::nullopt) {
  double best = 0.0;
  if (restrict_to) {
    if (restrict_to->empty()) {
      throw ParameterError("epsilon_max: empty restriction set");
    }
    for (ItemId x : *restrict_to) best = std::max(best, state.interval(x).radius());
    return best;
  }
  if (state.size() == 0) throw ParameterError("epsilon_max: empty state");
  for (const auto& iv : state.intervals()) best = std::max(best, iv.radius());
  return best;
}

namespace diagnostics {

// Explicit capability for code that is allowed to look at true values.
// Certification algorithms never receive one; they see items only through
// the oracles.
class GroundTruth {
 public:
  explicit GroundTruth(const Instance& instance) : instance_(&instance) {}
  const Instance& instance() const noexcept { return *instance_; }

 private:
  const Instance* instance_;
};

/// True iff every v(x) lies in its interval.
inline bool coverage_event_holds(const GroundTruth& truth,
                                 const IntervalState& state) {
  const Instance& inst = truth.instance();
  if (state.size() != inst.size()) {
    throw ParameterError("coverage_event_holds: size mismatch");
  }
  for (ItemId x = 0; x < inst.size(); ++x) {
    if (!state.interval(x).contains(inst.value(x))) return false;
  }
  return true;
}

/// |A| <= m(4 eps_max). Guaranteed whenever the coverage event holds.
inline bool check_lemma1(const GroundTruth& truth, const IntervalState& state) {
  const Instance& inst = truth.instance();
  const std::size_t ambiguous = ambiguous_set(state, inst.k()).size();
  return ambiguous <= near_tie_mass(inst, 4.0 * epsilon_max(state));
}

}  // namespace diagnostics
}  // namespace topk
