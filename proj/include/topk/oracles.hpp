#pragma once

// Weak and strong oracles. This is the cost-accounting boundary: every weak
// pull and strong call made by an algorithm goes through these classes.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "topk/core.hpp"

namespace topk {

namespace rng {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based key: a pure function of (seed, item, pull index).
constexpr std::uint64_t counter_key(std::uint64_t seed, std::uint64_t item,
                                    std::uint64_t t) noexcept {
  return splitmix64(seed ^ splitmix64(item ^ splitmix64(t ^ 0x5851f42d4c957f2dULL)));
}

// Uniform in (0, 1], 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal draw for pull t of item x under `seed` (Box-Muller).
inline double standard_normal(std::uint64_t seed, std::uint64_t item,
                              std::uint64_t t) noexcept {
  const std::uint64_t h1 = counter_key(seed, item, t);
  const std::uint64_t h2 = splitmix64(h1);
  const double u1 = to_unit(h1);
  const double u2 = to_unit(h2);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

enum class NoiseKind { exact, gaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 0.1;

  static NoiseModel exact() { return {NoiseKind::exact, 0.0}; }
  static NoiseModel gaussian(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian noise needs sigma > 0");
    return {NoiseKind::gaussian, sigma};
  }
};

struct OracleStats {
  std::uint64_t weak_pulls_total = 0;
  std::vector<std::uint64_t> weak_pulls_per_item;
  std::uint64_t strong_calls = 0;
  std::vector<ItemId> strong_query_trace;
};

/// Cheap noisy oracle: pull t of item x returns v(x) + sigma * Z(seed, x, t).
/// Resetting the counters replays the same observations.
class WeakOracle {
 public:
  WeakOracle(const Instance& instance, NoiseModel noise, std::uint64_t seed,
             std::optional<std::uint64_t> budget = std::nullopt)
      : instance_(&instance),
        noise_(noise),
        seed_(seed),
        budget_(budget),
        pulls_(instance.size(), 0) {}

  double query(ItemId x) {
    if (x >= pulls_.size()) throw ParameterError("weak_query: bad item id");
    if (budget_ && total_ >= *budget_) {
      throw BudgetError("weak budget of " + std::to_string(*budget_) +
                        " pulls exhausted");
    }
    const std::uint64_t t = pulls_[x]++;
    ++total_;
    double obs = instance_->value(x);
    if (noise_.kind == NoiseKind::gaussian) {
      obs += noise_.sigma * rng::standard_normal(seed_, x, t);
    }
    return obs;
  }

  std::size_t size() const noexcept { return pulls_.size(); }
  std::uint64_t pulls(ItemId x) const { return pulls_.at(x); }
  std::uint64_t total_pulls() const noexcept { return total_; }
  const std::vector<std::uint64_t>& pulls_per_item() const noexcept {
    return pulls_;
  }
  std::uint64_t seed() const noexcept { return seed_; }
  const NoiseModel& noise() const noexcept { return noise_; }

  std::optional<std::uint64_t> budget() const noexcept { return budget_; }
  void set_budget(std::optional<std::uint64_t> budget) noexcept {
    budget_ = budget;
  }

  void reset() {
    std::fill(pulls_.begin(), pulls_.end(), 0);
    total_ = 0;
  }

 private:
  const Instance* instance_;
  NoiseModel noise_;
  std::uint64_t seed_;
  std::optional<std::uint64_t> budget_;
  std::vector<std::uint64_t> pulls_;
  std::uint64_t total_ = 0;
};

/// Exact oracle; every call is counted and traced.
class StrongOracle {
 public:
  explicit StrongOracle(const Instance& instance,
                        std::optional<std::uint64_t> cap = std::nullopt)
      : instance_(&instance), cap_(cap) {}

  double query(ItemId x) {
    if (x >= instance_->size()) throw ParameterError("strong_query: bad item id");
    if (cap_ && trace_.size() >= *cap_) {
      throw BudgetError("strong cap of " + std::to_string(*cap_) +
                        " calls exceeded");
    }
    trace_.push_back(x);
    return instance_->value(x);
  }

  std::size_t size() const noexcept { return instance_->size(); }
  std::uint64_t calls() const noexcept { return trace_.size(); }
  const std::vector<ItemId>& trace() const noexcept { return trace_; }
  std::optional<std::uint64_t> cap() const noexcept { return cap_; }
  void reset() { trace_.clear(); }

 private:
  const Instance* instance_;
  std::optional<std::uint64_t> cap_;
  std::vector<ItemId> trace_;
};

struct Oracles {
  WeakOracle weak;
  StrongOracle strong;

  Oracles(const Instance& instance, NoiseModel noise, std::uint64_t seed,
          std::optional<std::uint64_t> strong_cap = std::nullopt,
          std::optional<std::uint64_t> weak_budget = std::nullopt)
      : weak(instance, noise, seed, weak_budget), strong(instance, strong_cap) {}

  std::size_t size() const noexcept { return weak.size(); }

  OracleStats stats() const {
    return {weak.total_pulls(), weak.pulls_per_item(), strong.calls(),
            strong.trace()};
  }

  // Emits the counters and zeroes them. Weak streams are keyed by
  // (seed, item, pull index), so the next run sees the same observations.
  OracleStats snapshot_and_reset() {
    OracleStats out = stats();
    weak.reset();
    strong.reset();
    return out;
  }
};

}  // namespace topk
