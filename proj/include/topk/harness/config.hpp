#pragma once

// Flat key-value run configuration. Layering, lowest to highest priority:
// built-in defaults, config file, TOPK_* environment variables, CLI flags.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "topk/algorithms.hpp"
#include "topk/confidence.hpp"
#include "topk/core.hpp"
#include "topk/oracles.hpp"

namespace topk::harness {

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                      std::string(text) + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean");
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"stc", "ace", "ace_w", "ta", "brute"};
  return names;
}

struct RunConfig {
  // instance
  std::size_t n = 10000;
  std::size_t k = 100;
  double gap = 0.05;
  std::optional<double> eta;
  double t_star = 0.5;
  std::optional<std::size_t> near_ties;
  std::optional<std::string> instance_path;

  // weak phase
  std::uint64_t pulls_per_item = 12;       // N
  std::optional<std::uint64_t> weak_budget;  // B, default n * N
  std::uint64_t w_min = 6;
  std::optional<std::uint64_t> w_max;      // default B
  double delta = 0.05;
  double delta_weak_fraction = 1.0;

  std::string ci_method = "subgaussian";
  std::optional<double> ci_sigma;  // default oracle.sigma
  double ci_range = 1.0;
  bool ci_clamp = false;

  std::string oracle_noise = "gaussian";
  double oracle_sigma = 0.1;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> strong_cap;

  // packing instances
  std::size_t packing_n = 1000;
  std::size_t packing_k = 10;
  std::size_t packing_m = 50;
  double packing_eps = 0.05;
  double packing_gap = 0.2;
  double packing_level = 0.5;

  // sweeps and output
  std::string experiment = "scaling_n";
  std::vector<double> grid;
  std::size_t replicates = 10;
  std::vector<std::string> algorithms{"stc", "ace", "ace_w", "ta"};
  std::string out;
  std::string format = "csv";
  bool timing = false;
  unsigned jobs = 1;

  std::uint64_t resolved_budget() const {
    return weak_budget.value_or(static_cast<std::uint64_t>(n) * pulls_per_item);
  }
  std::uint64_t resolved_w_max() const { return w_max.value_or(resolved_budget()); }

  CiMethod ci() const {
    CiMethod method;
    if (ci_method == "subgaussian") {
      method = SubGaussianKnownSigma{ci_sigma.value_or(oracle_sigma)};
    } else if (ci_method == "empirical_bernstein") {
      method = EmpiricalBernstein{ci_range, ci_clamp};
    } else {
      throw ConfigError("ci.method must be subgaussian or empirical_bernstein");
    }
    validate(method);
    return method;
  }

  NoiseModel noise() const {
    if (oracle_noise == "gaussian") return NoiseModel::gaussian(oracle_sigma);
    if (oracle_noise == "exact") return NoiseModel::exact();
    throw ConfigError("oracle.noise must be gaussian or exact");
  }

  CertifyParams certify_params() const {
    return {k, delta, delta_weak_fraction, pulls_per_item, ci()};
  }

  AceWParams ace_w_params() const {
    return {resolved_budget(), w_min, resolved_w_max()};
  }

  /// Sets one key. Unknown keys and malformed values throw ConfigError.
  void set(std::string_view key, std::string_view value) {
    using detail::parse_bool;
    using detail::parse_number;
    value = detail::trim(value);
    if (key == "n") n = parse_number<std::size_t>(key, value);
    else if (key == "k") k = parse_number<std::size_t>(key, value);
    else if (key == "gap") gap = parse_number<double>(key, value);
    else if (key == "eta") eta = parse_number<double>(key, value);
    else if (key == "t_star") t_star = parse_number<double>(key, value);
    else if (key == "near_ties") near_ties = parse_number<std::size_t>(key, value);
    else if (key == "instance") instance_path = std::string(value);
    else if (key == "pulls_per_item" || key == "N") pulls_per_item = parse_number<std::uint64_t>(key, value);
    else if (key == "weak_budget" || key == "B") weak_budget = parse_number<std::uint64_t>(key, value);
    else if (key == "w_min") w_min = parse_number<std::uint64_t>(key, value);
    else if (key == "w_max") w_max = parse_number<std::uint64_t>(key, value);
    else if (key == "delta") delta = parse_number<double>(key, value);
    else if (key == "delta_weak_fraction") delta_weak_fraction = parse_number<double>(key, value);
    else if (key == "ci.method") ci_method = std::string(value);
    else if (key == "ci.sigma") ci_sigma = parse_number<double>(key, value);
    else if (key == "ci.range") ci_range = parse_number<double>(key, value);
    else if (key == "ci.clamp") ci_clamp = parse_bool(key, value);
    else if (key == "oracle.noise") oracle_noise = std::string(value);
    else if (key == "oracle.sigma") oracle_sigma = parse_number<double>(key, value);
    else if (key == "oracle.seed" || key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "oracle.strong_cap") strong_cap = parse_number<std::uint64_t>(key, value);
    else if (key == "packing.n") packing_n = parse_number<std::size_t>(key, value);
    else if (key == "packing.k") packing_k = parse_number<std::size_t>(key, value);
    else if (key == "packing.m") packing_m = parse_number<std::size_t>(key, value);
    else if (key == "packing.eps") packing_eps = parse_number<double>(key, value);
    else if (key == "packing.gap") packing_gap = parse_number<double>(key, value);
    else if (key == "packing.level") packing_level = parse_number<double>(key, value);
    else if (key == "experiment") experiment = std::string(value);
    else if (key == "grid") {
      grid.clear();
      for (const auto& piece : detail::split_list(value)) {
        grid.push_back(parse_number<double>(key, piece));
      }
      if (grid.empty()) throw ConfigError("grid must not be empty");
    } else if (key == "replicates") replicates = parse_number<std::size_t>(key, value);
    else if (key == "algorithms" || key == "algo") {
      algorithms = detail::split_list(value);
      for (const auto& a : algorithms) {
        if (std::find(known_algorithms().begin(), known_algorithms().end(), a) ==
            known_algorithms().end()) {
          throw ConfigError("unknown algorithm '" + a + "'");
        }
      }
      if (algorithms.empty()) throw ConfigError("algorithm list must not be empty");
    } else if (key == "out") out = std::string(value);
    else if (key == "format") {
      if (value != "csv" && value != "jsonl") throw ConfigError("format must be csv or jsonl");
      format = std::string(value);
    } else if (key == "timing") timing = parse_bool(key, value);
    else if (key == "jobs") jobs = std::max(1u, parse_number<unsigned>(key, value));
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
  }

  /// `key=value` assignment, as used by config files and --set.
  void set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set(detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  }

  // One `key = value` per line; '#' starts a comment.
  void load(std::istream& in, const std::string& origin = "config") {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view view = line;
      if (const auto hash = view.find('#'); hash != std::string_view::npos) {
        view = view.substr(0, hash);
      }
      view = detail::trim(view);
      if (view.empty()) continue;
      try {
        set_assignment(view);
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    load(in, path);
  }

  /// Applies TOPK_<KEY> variables, with '.' in a key spelled "__"
  /// (TOPK_CI__METHOD sets ci.method).
  void apply_environment(const char* prefix = "TOPK_") {
    for (const char* key : kEnvKeys) {
      if (const char* value = std::getenv(env_name(prefix, key).c_str())) {
        set(key, value);
      }
    }
  }

  static std::string env_name(std::string_view prefix, std::string_view key) {
    std::string out(prefix);
    for (char c : key) {
      if (c == '.') out += "__";
      else out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
  }

  static constexpr const char* kEnvKeys[] = {
      "n", "k", "gap", "eta", "t_star", "near_ties", "instance", "pulls_per_item",
      "weak_budget", "w_min", "w_max", "delta", "delta_weak_fraction", "ci.method",
      "ci.sigma", "ci.range", "ci.clamp", "oracle.noise", "oracle.sigma",
      "oracle.seed", "oracle.strong_cap", "packing.n", "packing.k", "packing.m", "packing.eps", "packing.gap",
      "packing.level", "experiment", "grid", "replicates", "algorithms", "out",
      "format", "timing", "jobs"};
};

}  // namespace topk::harness
