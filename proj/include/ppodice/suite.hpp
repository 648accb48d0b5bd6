#pragma once

// Cross-product experiment runner.
//
// A suite file uses the same key = value format as training configs. Keys
// with the `suite.` prefix describe the grid, `env:<name>.<key>` applies a
// training key to one environment only, and every other key is a training
// key shared by all runs:
//   suite.envs          comma-separated environment names
//   suite.algos         comma-separated algos (default ppo,ppo_dice)
//   suite.seeds         a count n (seeds 0..n-1) or a comma-separated list
//   suite.eval_episodes episodes used to score each final policy (default 20)

#include "ppodice/config.hpp"
#include "ppodice/report.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ppodice {

struct SuiteConfig {
  std::vector<std::string> envs;
  std::vector<Algo> algos{Algo::kPpo, Algo::kPpoDice};
  std::vector<std::uint64_t> seeds;
  int eval_episodes = 20;
  std::vector<Setting> shared;
  std::vector<std::pair<std::string, Setting>> per_env;  // (env, setting)
  std::string out_dir;

  /// Training config for one cell of the grid.
  TrainConfig run_config(const std::string& env, Algo algo, std::uint64_t seed) const;
  void validate() const;
};

SuiteConfig parse_suite(const std::string& text);
SuiteConfig load_suite(const std::string& path);

struct SuiteCell {
  std::string env;
  Algo algo = Algo::kPpo;
  std::vector<double> final_returns;  // one per successful seed
  std::vector<std::string> failures;  // "seed N: message"
  double mean = 0.0;
  double stderr_ = 0.0;
  bool bold = false;
};

struct SuiteReport {
  std::vector<SuiteCell> cells;  // env-major, algos in config order
  std::string markdown;
  std::string csv;
};

/// Mean and standard error of `values` (stderr 0 for fewer than two).
std::pair<double, double> mean_stderr(const std::vector<double>& values);

/// Marks, per env, the best algo when it beats every other algo by more than
/// 2 sqrt(se_a^2 + se_b^2); then renders the markdown and CSV tables.
void finalize_report(SuiteReport& report);

/// Runs every (env, algo, seed). A failing run is recorded and the suite
/// continues. With out_dir set, each run writes to out_dir/env/algo/seed_N,
/// and report.md, report.csv and one aggregate SVG per env are written.
SuiteReport run_suite(const SuiteConfig& suite);

}  // namespace ppodice
