#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "deepucb/allocator.hpp"
#include "deepucb/config.hpp"
#include "deepucb/harness/csv.hpp"
#include "deepucb/harness/stats.hpp"
#include "deepucb/validate.hpp"

namespace fs = std::filesystem;
using namespace deepucb;

namespace {

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3, kDataset = 4, kValidation = 5 };

struct RunOptions {
  fs::path config;
  std::vector<std::string> policies;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> runs;
  fs::path out = "results";
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

struct ValidateOptions {
  std::string suite = "all";
  fs::path report = "validate_report.json";
  fs::path weakcmab_config;
  fs::path root = DEEPUCB_SOURCE_DIR;
};

// Writes next to the destination and renames, so a failed run leaves no
// half-written file behind.
void write_atomically(const fs::path& dest, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = dest.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    body(os);
    if (!os) throw std::runtime_error("error while writing " + tmp.string());
  }
  fs::rename(tmp, dest);
}

int cmd_run(const RunOptions& opt) {
  RunConfig cfg;
  std::unique_ptr<Environment> env;
  try {
    cfg = load_config(opt.config);
    auto& ex = cfg.experiment;
    if (!opt.policies.empty()) ex.policies = opt.policies;
    if (opt.seed) ex.base_seed = *opt.seed;
    if (opt.rounds) ex.rounds = *opt.rounds;
    if (opt.runs) ex.n_runs = *opt.runs;
    env = make_environment(cfg);
    ex.validate(env->n_arms());
  } catch (const DatasetError& e) {
    std::cerr << "error: dataset: " << e.what() << "\n";
    if (cfg.environment == "mushroom")
      std::cerr << "hint: set [mushroom] data to agaricus-lepiota.data, or point fallback at "
                   "data/mushroom_surrogate.data (see docs/datasets.md)\n";
    return kDataset;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << opt.config.string() << ": " << e.what() << "\n";
    return kConfig;
  }
  if (cfg.environment == "mushroom") std::cerr << "mushroom data: " << mushroom_data_in_use(cfg).string() << "\n";

  const auto& ex = cfg.experiment;
  const auto start = std::chrono::steady_clock::now();
  const auto traces = run_experiment(*env, ex, opt.threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto aggregates = aggregate_by_policy(traces);

  fs::create_directories(opt.out);
  const fs::path rounds_csv = opt.out / (ex.experiment_id + "_rounds.csv");
  const fs::path aggregate_csv = opt.out / (ex.experiment_id + "_aggregate.csv");
  const fs::path config_copy = opt.out / (ex.experiment_id + "_config.cfg");
  write_atomically(rounds_csv, [&](std::ostream& os) { write_trace_csv(os, ex.experiment_id, traces); });
  write_atomically(aggregate_csv, [&](std::ostream& os) { write_aggregate_csv(os, ex.experiment_id, aggregates); });
  write_atomically(config_copy, [&](std::ostream& os) { os << serialize_config(cfg); });

  std::printf("%s: %s, N=%zu, k=%zu, T=%zu, %zu runs (%.1f s)\n", ex.experiment_id.c_str(), env->id().c_str(),
              env->n_arms(), ex.k, ex.rounds, ex.n_runs, seconds);
  for (const auto& agg : aggregates) {
    const auto& last_mean = agg.mean.back();
    const auto& last_std = agg.std.back();
    std::printf("  %-15s cum_pseudo_regret %10.2f +- %-8.2f norm_cum_reward %.4f\n", agg.policy.c_str(),
                last_mean[4], last_std[4], last_mean[5]);
  }
  std::printf("wrote %s, %s\n", rounds_csv.string().c_str(), aggregate_csv.string().c_str());
  return kOk;
}

int cmd_validate(const ValidateOptions& opt) {
  std::vector<validate::SuiteResult> results;
  const bool all = opt.suite == "all";
  if (all || opt.suite == "gradients") results.push_back(validate::gradient_suite());
  if (all || opt.suite == "oracles") results.push_back(validate::oracle_suite());
  if (all || opt.suite == "weakcmab") {
    const fs::path path = opt.weakcmab_config.empty() ? opt.root / "configs" / "weakcmab.cfg" : opt.weakcmab_config;
    RunConfig cfg;
    try {
      cfg = load_config(path);
    } catch (const ConfigError& e) {
      std::cerr << "error: config: " << e.what() << "\n";
      return kConfig;
    }
    if (cfg.environment != "weakcmab") {
      std::cerr << "error: config: " << path.string() << " does not describe a weakcmab environment\n";
      return kConfig;
    }
    results.push_back(validate::weakcmab_suite(cfg.weakcmab));
  }
  if (all || opt.suite == "docs") results.push_back(validate::docs_suite(opt.root));

  nlohmann::json report;
  bool ok = true;
  for (const auto& r : results) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"value", c.value},
                        {"threshold", c.threshold},
                        {"detail", c.detail}});
      if (!c.passed) std::printf("FAIL %s: %s (value %g)\n", c.name.c_str(), c.detail.c_str(), c.value);
    }
    report["suites"].push_back({{"suite", r.suite}, {"passed", r.passed()}, {"checks", checks}});
    std::printf("%-10s %s (%zu checks)\n", r.suite.c_str(), r.passed() ? "pass" : "FAIL", r.checks.size());
    ok = ok && r.passed();
  }
  report["passed"] = ok;
  if (!opt.report.parent_path().empty()) fs::create_directories(opt.report.parent_path());
  write_atomically(opt.report, [&](std::ostream& os) { os << report.dump(2) << "\n"; });
  return ok ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_allocations();
  CLI::App app{"Contextual top-k bandit experiments"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write CSV results");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required()->envname("DEEPUCB_CONFIG");
  run_cmd->add_option("--policies", run.policies, "Comma-separated policy subset")
      ->delimiter(',')
      ->envname("DEEPUCB_POLICIES");
  run_cmd->add_option("--seed", run.seed, "Base seed")->envname("DEEPUCB_SEED");
  run_cmd->add_option("--rounds", run.rounds, "Rounds per run")->check(CLI::PositiveNumber)->envname("DEEPUCB_ROUNDS");
  run_cmd->add_option("--runs", run.runs, "Independent runs")->check(CLI::PositiveNumber)->envname("DEEPUCB_RUNS");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str()->envname("DEEPUCB_OUT");
  run_cmd->add_option("--threads", run.threads, "Parallel cells")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->envname("DEEPUCB_THREADS");

  ValidateOptions val;
  auto* val_cmd = app.add_subcommand("validate", "Run built-in consistency checks");
  val_cmd->add_option("--suite", val.suite, "Suite to run")
      ->check(CLI::IsMember({"gradients", "oracles", "weakcmab", "docs", "all"}))
      ->capture_default_str();
  val_cmd->add_option("--report", val.report, "JSON report path")->capture_default_str()->envname("DEEPUCB_REPORT");
  val_cmd->add_option("--weakcmab-config", val.weakcmab_config, "Config for the weakcmab suite");
  val_cmd->add_option("--root", val.root, "Repository root (for configs/ and docs/)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    return cmd_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
