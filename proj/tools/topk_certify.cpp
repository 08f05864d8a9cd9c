// topk_certify: run, sweep, gen and verify subcommands over the certification
// library. Settings resolve as defaults < --config file < TOPK_* environment
// < --set / named flags.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "topk/harness/config.hpp"
#include "topk/harness/experiment.hpp"
#include "topk/harness/sweep.hpp"
#include "topk/harness/verify.hpp"
#include "topk/instances.hpp"

namespace {

using topk::harness::ConfigError;
using topk::harness::RunConfig;

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const std::vector<Flag>& instance_flags() {
  static const std::vector<Flag> flags{
      {"--n", "n", "number of items"},
      {"--k", "k", "size of the certified set"},
      {"--gap", "gap", "gap between the k-th and (k+1)-th value"},
      {"--eta", "eta", "near-tie half-width (default gap/2)"},
      {"--near-ties", "near_ties", "near-tie item count (default 2k)"},
      {"--seed", "seed", "base seed"},
  };
  return flags;
}

const std::vector<Flag>& run_flags() {
  static const std::vector<Flag> flags{
      {"--N", "pulls_per_item", "weak pulls per item for fixed intervals"},
      {"--B", "weak_budget", "total weak budget for ace_w (default n*N)"},
      {"--w-min", "w_min", "ace_w warm-start pulls"},
      {"--w-max", "w_max", "ace_w per-item pull cap (default B)"},
      {"--delta", "delta", "total failure probability"},
      {"--sigma", "oracle.sigma", "weak oracle noise sigma"},
      {"--noise", "oracle.noise", "gaussian or exact"},
      {"--ci", "ci.method", "subgaussian or empirical_bernstein"},
      {"--strong-cap", "oracle.strong_cap", "hard cap on strong calls"},
      {"--format", "format", "csv or jsonl"},
      {"--out", "out", "output path"},
      {"--timing", "timing", "record wall_ms (breaks byte-identical output)"},
  };
  return flags;
}

class Settings {
 public:
  void attach(CLI::App& app, const std::vector<Flag>& flags) {
    for (const Flag& f : flags) {
      app.add_option(f.name, values_[f.key], f.help);
      bound_.emplace_back(f.key, f.name);
    }
  }

  void attach_common(CLI::App& app) {
    app.add_option("--config", config_path_, "flat key=value config file");
    app.add_option("--set", assignments_, "key=value override (repeatable)");
  }

  // `defaults` are applied first so that every other layer can override them.
  RunConfig resolve(const CLI::App& app,
                    const std::vector<std::pair<std::string, std::string>>& defaults = {}) const {
    RunConfig cfg;
    for (const auto& [key, value] : defaults) cfg.set(key, value);
    if (!config_path_.empty()) cfg.load_file(config_path_);
    cfg.apply_environment();
    for (const auto& a : assignments_) cfg.set_assignment(a);
    for (const auto& [key, flag] : bound_) {
      if (app.count(flag) > 0) cfg.set(key, values_.at(key));
    }
    return cfg;
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> bound_;
  std::string config_path_;
  std::vector<std::string> assignments_;
};

// "a..b" is half-open, "a..=b" inclusive, "a" alone is one seed.
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad seed range '" + std::string(text) + "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto s = number(text);
    return {s, s + 1};
  }
  const auto first = number(text.substr(0, dots));
  auto rest = text.substr(dots + 2);
  const bool inclusive = !rest.empty() && rest.front() == '=';
  if (inclusive) rest.remove_prefix(1);
  const auto last = number(rest) + (inclusive ? 1 : 0);
  if (last < first) throw ConfigError("empty seed range '" + std::string(text) + "'");
  return {first, last};
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write " + path);
  return file;
}

int cmd_run(const RunConfig& base, const std::string& algo) {
  RunConfig cfg = base;
  cfg.algorithms = {algo};
  std::vector<topk::harness::ExperimentRow> rows;
  if (cfg.instance_path) {
    const topk::Instance instance = topk::load_instance(*cfg.instance_path, cfg.k);
    cfg.n = instance.size();
    rows = topk::harness::run_on_instance(instance, cfg, "run", "", 0, cfg.seed);
  } else {
    rows = topk::harness::run_gap_replicate(cfg, "run", "", 0, cfg.seed);
  }
  std::ofstream file;
  topk::harness::write_rows(open_output(cfg.out, file), rows, cfg.format);
  for (const auto& row : rows) {
    if (row.status != "ok") {
      std::cerr << "topk_certify: " << row.algorithm << ": " << row.status << '\n';
      return 1;
    }
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("sweep needs --out");
  const auto spec = topk::harness::SweepSpec::from_config(cfg);
  const auto result = topk::harness::run_sweep(spec);
  topk::harness::write_sweep(result, spec.out_path, cfg.format);
  std::size_t errors = 0;
  for (const auto& row : result.rows) errors += row.status != "ok";
  std::cerr << "wrote " << result.rows.size() << " rows to " << spec.out_path << " and "
            << topk::harness::summary_path(spec.out_path);
  if (errors > 0) std::cerr << " (" << errors << " error rows)";
  std::cerr << '\n';
  return 0;
}

int cmd_gen(const RunConfig& cfg) {
  const topk::Instance instance =
      topk::generate_gap_instance(topk::harness::gap_spec(cfg, cfg.seed));
  std::ofstream file;
  topk::write_instance(open_output(cfg.out, file), instance);
  return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& seeds) {
  const auto [first, last] = parse_seed_range(seeds);
  const auto result = topk::harness::verify_invariants(cfg, first, last);
  for (const auto& failure : result.failures) std::cerr << "FAIL " << failure << '\n';
  std::cout << "verify: " << result.seeds << " seeds, " << result.checks << " checks, "
            << result.failures.size() << " failures\n";
  return result.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC top-k certification with weak and strong oracles"};
  app.require_subcommand(1);

  Settings run_settings, sweep_settings, gen_settings, verify_settings;
  std::string algo = "ace";
  std::string seeds = "0..100";

  CLI::App* run = app.add_subcommand("run", "run one algorithm on one instance");
  run_settings.attach_common(*run);
  run_settings.attach(*run, instance_flags());
  run_settings.attach(*run, run_flags());
  run->add_option("--algo", algo, "stc, ace, ace_w, ta or brute")
      ->check(CLI::IsMember(topk::harness::known_algorithms()));
  std::string instance_path;
  run->add_option("--instance", instance_path, "instance CSV (item_id,value)");

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  sweep_settings.attach_common(*sweep);
  sweep_settings.attach(*sweep, instance_flags());
  sweep_settings.attach(*sweep, run_flags());
  sweep_settings.attach(*sweep, {{"--experiment", "experiment",
                                  "scaling_n, scaling_k, hardness, lower_bound or coverage"},
                                 {"--grid", "grid", "comma-separated swept values"},
                                 {"--replicates", "replicates", "replicates per grid point"},
                                 {"--algorithms", "algorithms", "comma-separated algorithms"},
                                 {"--jobs", "jobs", "worker threads"}});

  CLI::App* gen = app.add_subcommand("gen", "write a generated instance as CSV");
  gen_settings.attach_common(*gen);
  gen_settings.attach(*gen, instance_flags());
  gen_settings.attach(*gen, {{"--out", "out", "output path (default stdout)"}});

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite on a seed range");
  verify_settings.attach_common(*verify);
  verify_settings.attach(*verify, instance_flags());
  verify_settings.attach(*verify, run_flags());
  verify->add_option("--seeds", seeds, "seed range a..b (half-open) or a..=b");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      RunConfig cfg = run_settings.resolve(*run);
      if (!instance_path.empty()) cfg.instance_path = instance_path;
      return cmd_run(cfg, algo);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_settings.resolve(*sweep));
    if (gen->parsed()) return cmd_gen(gen_settings.resolve(*gen));
    if (verify->parsed()) {
      return cmd_verify(verify_settings.resolve(*verify, {{"n", "1000"}, {"k", "50"}}), seeds);
    }
  } catch (const topk::ParameterError& e) {
    std::cerr << "topk_certify: " << e.what() << '\n';
    return 2;
  } catch (const topk::BudgetError& e) {
    std::cerr << "topk_certify: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
