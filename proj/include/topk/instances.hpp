#pragma once

// Synthetic instance generators and the instance CSV format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "topk/confidence.hpp"
#include "topk/core.hpp"

namespace topk {

/// Clear-gap generator around a threshold location t*.
///
/// Layout: the k-th value sits at t* + gap/2 and the (k+1)-th at t* - gap/2;
/// the other k-1 top items are uniform in [t* + gap/2, 0.95]; the near-tie
/// items are uniform in [t* - eta, t* - gap/2] (the lower side of the band,
/// so exactly k items exceed t*); everything else is uniform in
/// [0.05, t* - 2 eta]. Item positions are shuffled.
struct GapInstanceSpec {
  std::size_t n = 10000;
  std::size_t k = 100;
  double gap = 0.05;
  std::optional<double> eta;  // default gap / 2
  double t_star = 0.5;
  std::optional<std::size_t> near_ties;  // default min(2k, n - k - 1)
  std::uint64_t seed = 0;

  static constexpr double kTopCeiling = 0.95;
  static constexpr double kBulkFloor = 0.05;

  double resolved_eta() const { return eta.value_or(0.5 * gap); }
  std::size_t resolved_near_ties() const {
    const std::size_t room = n > k + 1 ? n - k - 1 : 0;
    return std::min(near_ties.value_or(2 * k), room);
  }
};

inline Instance generate_gap_instance(const GapInstanceSpec& spec) {
  if (spec.k < 1 || spec.k >= spec.n) {
    throw ParameterError("gap instance: need 1 <= k < n");
  }
  if (!(spec.gap > 0.0)) throw ParameterError("gap instance: gap must be > 0");
  const double half = 0.5 * spec.gap;
  const double eta = spec.resolved_eta();
  const double t = spec.t_star;
  if (eta < half) {
    throw ParameterError("gap instance: eta must be >= gap/2 for near-tie placement");
  }
  if (t + half > GapInstanceSpec::kTopCeiling || t - eta < 0.0) {
    throw ParameterError("gap instance: threshold band does not fit in [0,1]");
  }
  const std::size_t near = spec.resolved_near_ties();
  const std::size_t bulk = spec.n - spec.k - 1 - near;
  if (bulk > 0 && t - 2.0 * eta < GapInstanceSpec::kBulkFloor) {
    throw ParameterError("gap instance: no room below t* - 2 eta for the remainder");
  }

  std::mt19937_64 gen(spec.seed);
  auto uniform = [&](double lo, double hi) {
    return lo < hi ? std::uniform_real_distribution<double>(lo, hi)(gen) : lo;
  };

  std::vector<double> values;
  values.reserve(spec.n);
  values.push_back(t + half);
  for (std::size_t i = 1; i < spec.k; ++i) {
    values.push_back(uniform(t + half, GapInstanceSpec::kTopCeiling));
  }
  values.push_back(t - half);
  for (std::size_t i = 0; i < near; ++i) values.push_back(uniform(t - eta, t - half));
  for (std::size_t i = 0; i < bulk; ++i) {
    values.push_back(uniform(GapInstanceSpec::kBulkFloor, t - 2.0 * eta));
  }
  std::shuffle(values.begin(), values.end(), gen);
  return Instance(std::move(values), spec.k);
}

/// Adversarial packing: m items share the interval [level - eps, level + eps]
/// while k of them (the planted set) sit at level + 0.4 eps and the rest at
/// level - 0.4 eps, all strictly within eps of the threshold. Items outside
/// the packed block sit at level - gap with intervals already certified OUT.
struct PackingSpec {
  std::size_t n = 1000;
  std::size_t k = 10;
  std::size_t m = 50;
  double level = 0.5;
  double eps = 0.05;
  double gap = 0.2;

  void validate() const {
    if (k < 1 || k > m || m > n) throw ParameterError("packing: need 1 <= k <= m <= n");
    if (!(gap > 2.0 * eps)) throw ParameterError("packing: gap must exceed 2 eps");
    if (!(eps > 0.0)) throw ParameterError("packing: eps must be > 0");
    if (!(level - 2.0 * eps > 0.0 && level + 2.0 * eps < 1.0)) {
      throw ParameterError("packing: [level - 2eps, level + 2eps] must lie in (0,1)");
    }
    if (!(level - gap - 2.0 * eps > 0.0)) {
      throw ParameterError("packing: level - gap - 2eps must be > 0");
    }
  }
};

struct PackingInstance {
  Instance instance;
  IntervalState intervals;
  std::vector<ItemId> planted;  // sorted
};

inline PackingInstance generate_packing_instance(const PackingSpec& spec,
                                                 std::vector<ItemId> planted) {
  spec.validate();
  std::sort(planted.begin(), planted.end());
  if (planted.size() != spec.k ||
      std::adjacent_find(planted.begin(), planted.end()) != planted.end() ||
      (!planted.empty() && planted.back() >= spec.m)) {
    throw ParameterError("packing: planted set must be k distinct ids below m");
  }
  std::vector<double> values(spec.n, spec.level - spec.gap);
  std::vector<Interval> intervals(
      spec.n, Interval{spec.level - spec.gap - 0.5 * spec.eps,
                       spec.level - spec.gap + 0.5 * spec.eps});
  for (ItemId x = 0; x < spec.m; ++x) {
    values[x] = spec.level - 0.4 * spec.eps;
    intervals[x] = {spec.level - spec.eps, spec.level + spec.eps};
  }
  for (ItemId x : planted) values[x] = spec.level + 0.4 * spec.eps;
  return {Instance(std::move(values), spec.k), IntervalState(std::move(intervals)),
          std::move(planted)};
}

/// Uniformly random k-subset of the packed block.
inline std::vector<ItemId> random_planted_set(const PackingSpec& spec,
                                              std::uint64_t seed) {
  spec.validate();
  std::vector<ItemId> block(spec.m);
  for (ItemId x = 0; x < spec.m; ++x) block[x] = x;
  std::mt19937_64 gen(seed);
  std::shuffle(block.begin(), block.end(), gen);
  block.resize(spec.k);
  std::sort(block.begin(), block.end());
  return block;
}

/// Gaussian sigma for which N pulls give a sub-Gaussian radius of `eps`.
inline double packing_weak_sigma(double eps, std::uint64_t pulls_per_item,
                                 double delta_x) {
  return eps / std::sqrt(2.0 * std::log(2.0 / delta_x) /
                         static_cast<double>(pulls_per_item));
}

// ---------------------------------------------------------------------------
// Instance CSV: header `item_id,value`, ids 0..n-1, values in [0,1].

class InstanceFormatError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline Instance read_instance(std::istream& in, std::size_t k) {
  std::string line;
  std::size_t line_no = 1;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
  };
  if (!std::getline(in, line) || trim(line) != "item_id,value") {
    throw InstanceFormatError("line 1: expected header 'item_id,value'");
  }
  struct Row {
    std::size_t id;
    double value;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) {
      throw InstanceFormatError("line " + std::to_string(line_no) + ": expected two fields");
    }
    const std::string_view id_text = trim(row.substr(0, comma));
    const std::string_view value_text = trim(row.substr(comma + 1));
    std::size_t id = 0;
    double value = 0.0;
    auto id_res = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (id_res.ec != std::errc() || id_res.ptr != id_text.data() + id_text.size()) {
      throw InstanceFormatError("line " + std::to_string(line_no) + ": bad item_id '" +
                                std::string(id_text) + "'");
    }
    auto v_res = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (v_res.ec != std::errc() || v_res.ptr != value_text.data() + value_text.size()) {
      throw InstanceFormatError("line " + std::to_string(line_no) + ": bad value '" +
                                std::string(value_text) + "'");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
      throw InstanceFormatError("line " + std::to_string(line_no) + ": value " +
                                std::string(value_text) + " outside [0,1]");
    }
    rows.push_back({id, value, line_no});
  }
  if (rows.empty()) throw InstanceFormatError("no rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.id < b.id; });
  std::vector<double> values(rows.size());
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (x > 0 && rows[x].id == rows[x - 1].id) {
      throw InstanceFormatError("line " + std::to_string(rows[x].line) +
                                ": duplicate item_id " + std::to_string(rows[x].id));
    }
    if (rows[x].id != x) {
      throw InstanceFormatError("line " + std::to_string(rows[x].line) + ": item_id " +
                                std::to_string(rows[x].id) +
                                " breaks the contiguous range 0.." +
                                std::to_string(rows.size() - 1));
    }
    values[x] = rows[x].value;
  }
  return Instance(std::move(values), k);
}

inline Instance load_instance(const std::string& path, std::size_t k) {
  std::ifstream in(path);
  if (!in) throw InstanceFormatError("cannot open " + path);
  return read_instance(in, k);
}

inline void write_instance(std::ostream& out, const Instance& instance) {
  out << "item_id,value\n";
  for (ItemId x = 0; x < instance.size(); ++x) {
    out << x << ',' << format_double(instance.value(x)) << '\n';
  }
}

}  // namespace topk
