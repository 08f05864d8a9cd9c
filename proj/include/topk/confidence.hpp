#pragma once

// Confidence-interval mathematics: failure-probability allocation,
// fixed-sample radii, anytime-valid radii, and interval construction from
// weak pulls.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "topk/core.hpp"
#include "topk/oracles.hpp"

namespace topk {

/// delta = delta_weak + delta_strong; the weak part is split evenly over n
/// items.
struct DeltaBudget {
  double total = 0.05;
  double weak = 0.05;
  double strong = 0.0;
  std::size_t n = 1;

  static DeltaBudget make(double delta, std::size_t n,
                          double weak_fraction = 1.0) {
    if (!(delta > 0.0 && delta < 1.0)) {
      throw ParameterError("delta must lie in (0,1)");
    }
    if (!(weak_fraction > 0.0 && weak_fraction <= 1.0)) {
      throw ParameterError("delta_weak_fraction must lie in (0,1]");
    }
    if (n < 1) throw ParameterError("DeltaBudget: n must be >= 1");
    const double weak = delta * weak_fraction;
    return {delta, weak, delta - weak, n};
  }

  double per_item() const;
};

inline double bonferroni_split(double delta_weak, std::size_t n) {
  if (!(delta_weak > 0.0 && delta_weak < 1.0) || n < 1) {
    throw ParameterError("bonferroni_split: need 0 < delta_weak < 1, n >= 1");
  }
  return delta_weak / static_cast<double>(n);
}

inline double DeltaBudget::per_item() const { return bonferroni_split(weak, n); }

/// Running mean and squared deviations (Welford).
class StreamStats {
 public:
  void push(double x) noexcept {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double sum_squared_deviations() const noexcept { return m2_; }
  /// Plug-in variance (divides by the count); zero for fewer than 2 samples.
  double variance() const noexcept {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_);
  }
  /// Unbiased variance (divides by count - 1).
  double sample_variance() const noexcept {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct SubGaussianKnownSigma {
  double sigma = 0.1;
};
// Observations assumed to lie in an interval of length `range`.
struct EmpiricalBernstein {
  double range = 1.0;
  bool clamp = false;
};
struct AnytimeEmpiricalBernstein {
  double range = 1.0;
  bool clamp = false;
};
struct AnytimeSubGaussian {
  double sigma = 0.1;
};

using CiMethod = std::variant<SubGaussianKnownSigma, EmpiricalBernstein,
                              AnytimeEmpiricalBernstein, AnytimeSubGaussian>;

inline void validate(const CiMethod& method) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SubGaussianKnownSigma> ||
                      std::is_same_v<M, AnytimeSubGaussian>) {
          if (!(m.sigma > 0.0)) throw ParameterError("ci.sigma must be > 0");
        } else {
          if (!(m.range > 0.0)) throw ParameterError("ci.range must be > 0");
        }
      },
      method);
}

inline bool is_anytime(const CiMethod& method) {
  return std::holds_alternative<AnytimeEmpiricalBernstein>(method) ||
         std::holds_alternative<AnytimeSubGaussian>(method);
}

// Fewest pulls for which the method yields a radius.
inline std::uint64_t min_pulls(const CiMethod& method) {
  return std::holds_alternative<EmpiricalBernstein>(method) ? 2 : 1;
}

/// Time-uniform version of a fixed-sample method.
inline CiMethod anytime_counterpart(const CiMethod& method) {
  return std::visit(
      [](const auto& m) -> CiMethod {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SubGaussianKnownSigma>) {
          return AnytimeSubGaussian{m.sigma};
        } else if constexpr (std::is_same_v<M, EmpiricalBernstein>) {
          return AnytimeEmpiricalBernstein{m.range, m.clamp};
        } else {
          return m;
        }
      },
      method);
}

// Maps a raw weak observation into the domain the method assumes.
inline double observe(const CiMethod& method, double raw) {
  bool clamp = false;
  if (const auto* eb = std::get_if<EmpiricalBernstein>(&method)) clamp = eb->clamp;
  if (const auto* eb = std::get_if<AnytimeEmpiricalBernstein>(&method)) clamp = eb->clamp;
  return clamp ? std::clamp(raw, 0.0, 1.0) : raw;
}

inline double subgaussian_radius(double sigma, std::uint64_t n, double delta) {
  return sigma * std::sqrt(2.0 * std::log(2.0 / delta) / static_cast<double>(n));
}

inline double hoeffding_radius(double range, std::uint64_t n, double delta) {
  return range * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

// sqrt(2 V ln(3/delta) / n) + 3 R ln(3/delta) / n, with V the plug-in variance.
inline double empirical_bernstein_radius(double variance, double range,
                                         std::uint64_t n, double delta) {
  const double nn = static_cast<double>(n);
  const double log_term = std::log(3.0 / delta);
  return std::sqrt(2.0 * variance * log_term / nn) + 3.0 * range * log_term / nn;
}

/// Valid (1 - delta_x) half-width after stats.count() pulls.
inline double fixed_radius(const CiMethod& method, const StreamStats& stats,
                           double delta_x) {
  if (!(delta_x > 0.0 && delta_x < 1.0)) {
    throw ParameterError("fixed_radius: delta_x must lie in (0,1)");
  }
  if (stats.count() < min_pulls(method)) {
    throw ParameterError("fixed_radius: needs at least " +
                         std::to_string(min_pulls(method)) + " pulls");
  }
  if (const auto* sg = std::get_if<SubGaussianKnownSigma>(&method)) {
    return subgaussian_radius(sg->sigma, stats.count(), delta_x);
  }
  if (const auto* eb = std::get_if<EmpiricalBernstein>(&method)) {
    return empirical_bernstein_radius(stats.variance(), eb->range,
                                      stats.count(), delta_x);
  }
  throw ParameterError("fixed_radius: anytime method given");
}

inline std::uint64_t doubling_epoch(std::uint64_t w) {
  return static_cast<std::uint64_t>(std::bit_width(w)) - 1;
}

/// delta_x * 6 / (pi^2 (e+1)^2) for the epoch e = floor(log2 w). Summed over
/// all epochs this is at most delta_x.
inline double epoch_delta(double delta_x, std::uint64_t w) {
  const double e1 = static_cast<double>(doubling_epoch(w) + 1);
  return delta_x * 6.0 / (std::numbers::pi * std::numbers::pi * e1 * e1);
}

/// Empirical-Bernstein confidence sequence. Each doubling epoch is charged
/// its own share of delta_x; a single pull falls back to Hoeffding.
inline double anytime_radius(const StreamStats& stats, double delta_x,
                             double range) {
  if (stats.count() < 1) throw ParameterError("anytime_radius: no pulls yet");
  if (!(delta_x > 0.0 && delta_x < 1.0) || !(range > 0.0)) {
    throw ParameterError("anytime_radius: bad delta_x or range");
  }
  const double de = epoch_delta(delta_x, stats.count());
  if (stats.count() == 1) return hoeffding_radius(range, 1, de);
  return empirical_bernstein_radius(stats.variance(), range, stats.count(), de);
}

/// Sub-Gaussian confidence sequence with the same epoch schedule as
/// anytime_radius: the fixed sub-Gaussian radius at delta_e.
inline double anytime_subgaussian_radius(std::uint64_t w, double delta_x,
                                         double sigma) {
  if (w < 1) throw ParameterError("anytime_subgaussian_radius: no pulls yet");
  const double de = epoch_delta(delta_x, w);
  return subgaussian_radius(sigma, w, de);
}

/// Radius for any method; anytime methods give time-uniform radii.
inline double radius(const CiMethod& method, const StreamStats& stats,
                     double delta_x) {
  if (const auto* a = std::get_if<AnytimeEmpiricalBernstein>(&method)) {
    return anytime_radius(stats, delta_x, a->range);
  }
  if (const auto* a = std::get_if<AnytimeSubGaussian>(&method)) {
    return anytime_subgaussian_radius(stats.count(), delta_x, a->sigma);
  }
  return fixed_radius(method, stats, delta_x);
}

// [mean - r, mean + r] clipped to [0,1]. Values live in [0,1], so clipping
// keeps the interval valid. An interval entirely outside [0,1] becomes the
// nearest endpoint.
inline Interval clipped_interval(double mean, double r) {
  double lo = std::clamp(mean - r, 0.0, 1.0);
  double hi = std::clamp(mean + r, 0.0, 1.0);
  return {lo, hi};
}

/// Intersects x's interval with `next`. An empty intersection is clamped to
/// the old boundary point nearest `next` and flagged on the state; returns
/// false in that case.
inline bool intersect_update(IntervalState& state, ItemId x, Interval next) {
  if (!(next.lower <= next.upper)) {
    throw ParameterError("intersect_update: lower > upper");
  }
  const Interval old = state.interval(x);
  Interval merged{std::max(old.lower, next.lower), std::min(old.upper, next.upper)};
  if (merged.lower <= merged.upper) {
    state.narrow(x, merged);
    return true;
  }
  const double point = next.lower > old.upper ? old.upper : old.lower;
  state.narrow(x, {point, point});
  state.flag_coverage_violation();
  return false;
}

struct WeakScreen {
  IntervalState intervals;
  std::vector<double> means;
};

/// N pulls per item, one fixed-sample interval per item.
inline WeakScreen screen_items(WeakOracle& weak, std::uint64_t pulls_per_item,
                               const DeltaBudget& budget,
                               const CiMethod& method) {
  validate(method);
  if (is_anytime(method)) {
    throw ParameterError("fixed intervals need a fixed-sample CI method");
  }
  if (pulls_per_item < min_pulls(method)) {
    throw ParameterError("N=" + std::to_string(pulls_per_item) +
                         " is below the CI method's minimum");
  }
  const std::size_t n = weak.size();
  if (auto cap = weak.budget()) {
    const std::uint64_t needed = n * pulls_per_item;
    if (*cap < weak.total_pulls() || *cap - weak.total_pulls() < needed) {
      throw BudgetError("weak budget cannot cover n*N = " +
                        std::to_string(needed) + " pulls");
    }
  }
  const double delta_x = budget.per_item();
  WeakScreen out{IntervalState(n), std::vector<double>(n)};
  for (ItemId x = 0; x < n; ++x) {
    StreamStats stats;
    for (std::uint64_t t = 0; t < pulls_per_item; ++t) {
      stats.push(observe(method, weak.query(x)));
    }
    out.means[x] = stats.mean();
    out.intervals.narrow(x, clipped_interval(stats.mean(),
                                             fixed_radius(method, stats, delta_x)));
    out.intervals.set_pulls(x, stats.count());
  }
  return out;
}

inline IntervalState build_fixed_intervals(WeakOracle& weak,
                                           std::uint64_t pulls_per_item,
                                           const DeltaBudget& budget,
                                           const CiMethod& method) {
  return screen_items(weak, pulls_per_item, budget, method).intervals;
}

}  // namespace topk
